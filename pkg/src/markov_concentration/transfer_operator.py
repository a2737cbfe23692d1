"""Finite-dimensional approximations of the transfer operator ``P``.

Two discretizations:

* Hermite-Galerkin, for the AR(1) chain, in the basis of polynomials
  orthonormal in ``L^2(mu)`` with ``mu`` the stationary Gaussian. The
  matrix is ``M[j, k] = <P h_k, h_j>_mu``, assembled by tensor Gauss-Hermite
  quadrature of order ``4K`` in both the state and the noise.
* Ulam, for any chain with a sampler: cell-to-cell transition frequencies
  on a partition of the line.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .chain import ChainSpec, stationary_measure
from .errors import EigensolveFailure, EmptyCell, InvalidParameter, QuadratureFailure, UnsupportedChain
from .quadrature import gauss_hermite, orthonormal_hermite

MAX_DIM = 512
ORTHONORMALITY_TOL = 1e-8
TRUNCATION_TOL = 1e-4


@dataclass(frozen=True)
class GalerkinOperator:
    """Matrix of ``P`` in a finite basis.

    ``basis`` is ``"HermiteStationary"`` (orthonormal polynomials of the
    stationary law; index 0 is the constant function) or ``"UlamPartition"``
    (row ``i`` holds transition probabilities out of cell ``i``).
    """

    matrix: np.ndarray = field(repr=False)
    basis: str
    alpha: Optional[float] = None
    noise_std: Optional[float] = None
    breakpoints: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def stationary(self):
        return stationary_measure_for(self.alpha, self.noise_std)

    def stationary_weights(self):
        """Weights defining the ``L^2(mu)`` inner product on coefficient vectors.

        Identity weights for the orthonormal Hermite basis; the left Perron
        vector (the invariant cell masses) for an Ulam matrix.
        """
        if self.basis == "HermiteStationary":
            w = np.zeros(self.size)
            w[0] = 1.0
            return w
        return _perron_left_vector(self.matrix)


def stationary_measure_for(alpha, noise_std):
    return stationary_measure(ChainSpec.linear_gaussian(alpha, noise_std))


def _require_gaussian(spec):
    if not spec.is_gaussian:
        raise UnsupportedChain("the Hermite basis is defined for the linear Gaussian chain only")


def hermite_basis_gram(K, order=None):
    z, w = gauss_hermite(order or 4 * K)
    h = orthonormal_hermite(z, K)
    return (h * w[:, None]).T @ h


def hermite_galerkin(spec, K):
    """Galerkin matrix of ``P`` on ``span{h_0 .. h_{K-1}}``.

    For this chain ``P h_k = alpha**k h_k`` (Mehler), so the result is
    diagonal up to quadrature error; no use of that fact is made here.

    Raises
    ------
    QuadratureFailure
        If the quadrature Gram matrix of the basis deviates from the
        identity by more than 1e-8.
    """
    _require_gaussian(spec)
    if not 2 <= K <= MAX_DIM:
        raise InvalidParameter(f"K must lie in [2, {MAX_DIM}]")
    order = 4 * K
    z, w = gauss_hermite(order)
    h_outer = orthonormal_hermite(z, K)
    gram = (h_outer * w[:, None]).T @ h_outer
    err = np.max(np.abs(gram - np.eye(K)))
    if not err <= ORTHONORMALITY_TOL:
        raise QuadratureFailure(f"basis orthonormality error {err:.2e} exceeds {ORTHONORMALITY_TOL}")

    sd = math.sqrt(stationary_measure(spec).variance)
    a = spec.alpha
    noise = spec.noise_std / sd
    # (P h_k)(z_i) = sum_m w_m h_k(a z_i + noise * z_m), in standardized units
    ph = np.zeros((order, K))
    rows = max(1, 2_000_000 // (order * K))
    for start in range(0, order, rows):
        sl = slice(start, start + rows)
        y = a * z[sl, None] + noise * z[None, :]
        ph[sl] = np.einsum("m,imk->ik", w, orthonormal_hermite(y, K))
    matrix = (h_outer * w[:, None]).T @ ph
    return GalerkinOperator(matrix, "HermiteStationary", alpha=a, noise_std=spec.noise_std)


def ulam_discretize(spec, breakpoints, samples_per_cell, seed):
    """Ulam matrix on the partition given by ``breakpoints``.

    Start points inside each cell are stratified: by stationary quantiles
    when the stationary law is known (so row ``i`` estimates
    ``P(x' in A_j | x in A_i)`` under stationarity), else at evenly spaced
    midpoints, which requires finite cells. One successor is drawn per start
    point; successors leaving the partition are dropped and rows
    renormalized.

    Raises
    ------
    EmptyCell
        When no successor of some cell lands inside the partition.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 3 or np.any(np.diff(edges) <= 0):
        raise InvalidParameter("breakpoints must be strictly increasing with at least two cells")
    if samples_per_cell < 1:
        raise InvalidParameter("samples_per_cell must be >= 1")
    n_cells = edges.size - 1
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    u = (np.arange(samples_per_cell) + 0.5) / samples_per_cell
    mu = stationary_measure(spec) if spec.is_gaussian else None
    if mu is None and not np.all(np.isfinite(edges)):
        raise InvalidParameter("unbounded cells need a known stationary law")

    counts = np.zeros((n_cells, n_cells))
    for i in range(n_cells):
        lo, hi = edges[i], edges[i + 1]
        if mu is not None:
            qlo, qhi = stats.norm.cdf([lo, hi], loc=mu.mean, scale=mu.std)
            starts = stats.norm.ppf(qlo + u * (qhi - qlo), loc=mu.mean, scale=mu.std)
            if not np.all(np.isfinite(starts)):
                raise EmptyCell(f"cell {i} carries no stationary mass")
        else:
            starts = lo + u * (hi - lo)
        nxt = spec.sample_next(starts, rng)
        j = np.searchsorted(edges, nxt, side="right") - 1
        inside = (j >= 0) & (j < n_cells)
        counts[i] = np.bincount(j[inside], minlength=n_cells)
    totals = counts.sum(axis=1)
    if np.any(totals == 0):
        raise EmptyCell(f"cells {np.flatnonzero(totals == 0).tolist()} received no transitions")
    matrix = counts / totals[:, None]
    alpha = spec.alpha if spec.is_gaussian else None
    noise = spec.noise_std if spec.is_gaussian else None
    return GalerkinOperator(matrix, "UlamPartition", alpha=alpha, noise_std=noise, breakpoints=edges)


def _perron_left_vector(matrix):
    vals, vecs = np.linalg.eig(matrix.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(np.real(vecs[:, k]))
    return pi / pi.sum()


@dataclass(frozen=True)
class SpectralReport:
    eigenvalue_moduli: np.ndarray = field(repr=False)
    spectral_gap: float
    power_convergence: list = field(repr=False)
    peripheral_eigenvalues: int

    @property
    def aperiodic(self):
        """No eigenvalue of modulus ~1 besides the Perron root."""
        return self.peripheral_eigenvalues == 0

    def to_dict(self):
        return {
            "eigenvalue_moduli": [float(m) for m in self.eigenvalue_moduli],
            "spectral_gap": self.spectral_gap,
            "power_convergence": [[n, float(v)] for n, v in self.power_convergence],
            "peripheral_eigenvalues": self.peripheral_eigenvalues,
            "aperiodic": self.aperiodic,
        }


def _weighted_frame(op):
    """Matrix of ``P`` and ``U`` in an ``L^2(mu)``-orthonormal frame."""
    P = np.asarray(op.matrix)
    K = P.shape[0]
    if op.basis == "HermiteStationary":
        U = np.zeros((K, K))
        U[0, 0] = 1.0
        return P, U
    pi = op.stationary_weights()
    root = np.sqrt(np.maximum(pi, 1e-300))
    # cell indicators normalized in L^2(pi): e_i / sqrt(pi_i)
    A = root[:, None] * P / root[None, :]
    U = np.outer(root, root)
    return A, U


def spectral_report(op, max_power):
    """Eigenvalue moduli, spectral gap and ``||P^n - U||`` for ``n = 1..max_power``.

    ``U`` is the ``L^2(mu)``-orthogonal projection onto constants. Norms are
    largest singular values in an ``L^2(mu)``-orthonormal frame.
    """
    if op.size > MAX_DIM:
        raise InvalidParameter(f"dense eigensolve capped at K={MAX_DIM}")
    try:
        vals = np.linalg.eigvals(np.asarray(op.matrix))
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigensolveFailure("non-finite eigenvalues")
    moduli = np.sort(np.abs(vals))[::-1]
    second = moduli[1] if moduli.size > 1 else 0.0
    gap = float(min(1.0, max(0.0, 1.0 - second)))
    peripheral = int(np.count_nonzero(moduli[1:] >= 1 - 1e-6))

    A, U = _weighted_frame(op)
    power = np.eye(A.shape[0])
    convergence = []
    for n in range(1, max_power + 1):
        power = power @ A
        convergence.append((n, float(np.linalg.norm(power - U, 2))))
    return SpectralReport(moduli, gap, convergence, peripheral)


def hyperbound_probe(spec, q, n_test_functions, seed, degree=6, order=200):
    """Lower bound on ``||P||_{2 -> q}`` from random polynomial test functions.

    Each ``g`` is a random combination of ``h_0 .. h_degree`` with unit
    ``L^2(mu)`` norm; the constant ``g = 1`` is always included, so the
    probe is at least 1. ``P g`` and ``||P g||_q`` are computed by
    Gauss-Hermite quadrature.
    """
    _require_gaussian(spec)
    if not q > 2:
        raise InvalidParameter("q must exceed 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    sd = math.sqrt(stationary_measure(spec).variance)
    z, w = gauss_hermite(order)
    zn, wn = gauss_hermite(degree + 2)
    y = spec.alpha * z[:, None] + (spec.noise_std / sd) * zn[None, :]
    ph_basis = np.einsum("m,imk->ik", wn, orthonormal_hermite(y, degree + 1))

    coefs = rng.standard_normal((n_test_functions, degree + 1))
    coefs = np.vstack([np.eye(1, degree + 1), coefs])
    coefs /= np.linalg.norm(coefs, axis=1, keepdims=True)
    pg = ph_basis @ coefs.T
    norms = (w @ np.abs(pg) ** q) ** (1.0 / q)
    return float(norms.max())


def multiplication_ratio_probe(mu, r, p, n_test_functions, seed, degree=6, order=200):
    """Ratios ``||e^r g||_2 / ||g||_p`` for random polynomials ``g``.

    ``g`` ranges over random combinations of the orthonormal polynomials of
    ``mu`` up to ``degree``; both norms are Gauss-Hermite quadratures
    against ``mu``. Every ratio is a lower bound on ``||e^r||_{p -> 2}``.
    """
    if not p > 2:
        raise InvalidParameter("p must exceed 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    z, w = gauss_hermite(order)
    basis = orthonormal_hermite(z, degree + 1)
    g = basis @ rng.standard_normal((degree + 1, n_test_functions))
    weight = np.exp(2 * r(mu.mean + mu.std * z))
    num = np.sqrt((w * weight) @ g ** 2)
    den = (w @ np.abs(g) ** p) ** (1.0 / p)
    return num / den


@dataclass(frozen=True)
class FeynmanKacMatrix:
    """Galerkin matrix of ``e^{s r} P`` with a truncation diagnostic.

    ``tail_mass`` is the relative Frobenius mass of the composition
    ``e^{s r} P``, assembled in a basis of twice the size, that lies outside
    the leading ``K x K`` block; ``truncation_warning`` is set when it
    exceeds 1e-4. The multiplication operator alone is unbounded and is
    never claimed to converge.
    """

    matrix: np.ndarray = field(repr=False)
    tail_mass: float
    truncation_warning: bool

    def power_norm(self, N):
        """``||(e^{sr} P)^N||_{2->2}`` on the truncated space."""
        return float(np.linalg.norm(np.linalg.matrix_power(self.matrix, N), 2))


def multiplication_matrix(r, s, K, mu, order=None):
    """``E[j, k] = <e^{s r} h_k, h_j>_mu`` by Gauss-Hermite quadrature."""
    z, w = gauss_hermite(order or 4 * K)
    h = orthonormal_hermite(z, K)
    weight = w * np.exp(s * r(mu.mean + mu.std * z))
    return (h * weight[:, None]).T @ h


def feynman_kac_matrix(op, r, s, check_truncation=True):
    """Matrix of the composition ``e^{s r} P`` in the Hermite basis."""
    if op.basis != "HermiteStationary":
        raise InvalidParameter("Feynman-Kac matrices need the Hermite basis")
    if s < 0:
        raise InvalidParameter("s must be nonnegative")
    if s == 0:
        return FeynmanKacMatrix(np.array(op.matrix), 0.0, False)
    K = op.size
    if r.name == "constant":
        factor = math.exp(s * dict(r.params)["value"])
        return FeynmanKacMatrix(factor * np.asarray(op.matrix), 0.0, False)
    mu = op.stationary
    matrix = multiplication_matrix(r, s, K, mu) @ np.asarray(op.matrix)
    tail = 0.0
    if check_truncation:
        big = hermite_galerkin(ChainSpec.linear_gaussian(op.alpha, op.noise_std), 2 * K)
        composed = multiplication_matrix(r, s, 2 * K, mu) @ np.asarray(big.matrix)
        total = np.linalg.norm(composed)
        inner = np.linalg.norm(composed[:K, :K])
        tail = float(math.sqrt(max(total ** 2 - inner ** 2, 0.0)) / total)
    return FeynmanKacMatrix(matrix, tail, tail > TRUNCATION_TOL)


def write_matrix_csv(path, matrix):
    """Row-major dump, 17 significant digits in scientific notation."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(matrix):
            writer.writerow([f"{v:.16e}" for v in row])
