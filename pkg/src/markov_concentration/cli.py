"""Batch front end: ``markov-concentration --config experiment.json``.

Exit codes: 0 success, 1 invalid config, 2 numerical failure, 3 a
certificate was violated by simulation beyond Monte Carlo error.
"""
import argparse
import csv
import datetime
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds
from .chain import BUILTIN_OBSERVABLES, ChainSpec, InitialDistribution, stationary_expectation, stationary_measure
from .errors import ConcentrationError, NumericalFailure
from .sampler import TrajectoryConfig, tail_from_deviations, trajectory_averages, write_trajectory_csv
from .transfer_operator import hermite_galerkin, spectral_report, ulam_discretize, write_matrix_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VIOLATION = 0, 1, 2, 3

TASK_DEFAULTS = {
    "certify": {"delta": 0.5, "n_grid": [1, 2, 4], "seed": 0},
    "simulate": {"epsilon_grid": [0.1, 0.2, 0.3]},
    "spectral": {"max_power": 20, "ulam_width_sd": 6.0, "ulam_samples_per_cell": 2000, "seed": 0},
    "validate": {"burn_in": 0, "delta": 0.5, "n_grid": [4]},
}


class ConfigError(Exception):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def load_schema():
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def _field_path(error):
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("<file>", str(exc)) from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if error is not None:
        raise ConfigError(_field_path(error), error.message)
    return raw


def _as_list(x):
    return x if isinstance(x, list) else [x]


class Experiment:
    """A validated config turned into library objects."""

    def __init__(self, raw, output_dir=None, force_te_constant=None):
        self.raw = raw
        chain = raw["chain"]
        try:
            self.spec = ChainSpec.linear_gaussian(chain["alpha"], chain.get("noise_std", 1.0))
        except ConcentrationError as exc:
            raise ConfigError("chain.alpha" if "alpha" in str(exc) else "chain.noise_std", str(exc)) from exc
        te = force_te_constant if force_te_constant is not None else raw.get("te_constant")
        if te is not None and not te > 0:
            raise ConfigError("te_constant", "must be positive")
        self.mu = stationary_measure(self.spec, te_constant=te)

        self.observables = []
        for i, obs in enumerate(_as_list(raw["observable"])):
            if obs["name"] == "clipped_linear":
                self.observables.append(BUILTIN_OBSERVABLES["clipped_linear"](obs.get("scale", 1.0)))
            elif "scale" in obs:
                raise ConfigError(f"observable.{i}.scale", "only clipped_linear takes a scale")
            else:
                self.observables.append(BUILTIN_OBSERVABLES[obs["name"]]())

        self.initials = []
        for i, ini in enumerate(_as_list(raw["initial"])):
            kind = ini["kind"]
            try:
                if kind == "Stationary":
                    self.initials.append(InitialDistribution.stationary())
                elif kind == "Gaussian":
                    self.initials.append(InitialDistribution.gaussian(ini.get("mean", 0.0), ini["variance"]))
                else:
                    self.initials.append(InitialDistribution.dirac(ini["point"]))
            except (KeyError, ConcentrationError) as exc:
                raise ConfigError(f"initial.{i}", f"incomplete {kind} initial law: {exc}") from exc

        task = dict(TASK_DEFAULTS[raw["task"]["name"]])
        task.update(raw["task"])
        self.task = task
        if task["name"] in ("certify", "validate"):
            self._resolve_p()
        self.output_dir = Path(output_dir or raw.get("output_dir") or ".")

    def _resolve_p(self):
        task, alpha = self.task, self.spec.alpha
        if "p" not in task:
            p = bounds.find_hypercontractive_p(alpha)
            if p is None:
                raise ConfigError("task.p", f"no hypercontractive p exists for alpha={alpha}; set task.p and task.hyper_norm")
            task["p"] = p
        if "hyper_norm" not in task:
            try:
                task["hyper_norm"] = bounds.gaussian_hyperbound(alpha, task["p"]).value
            except ConcentrationError as exc:
                raise ConfigError("task.p", str(exc)) from exc

    @property
    def seed(self):
        return self.task.get("seed", 0)

    def resolved(self, threads_independent=True):
        out = dict(self.raw)
        out["task"] = self.task
        out["te_constant"] = self.mu.te_constant
        out["stationary"] = {"mean": self.mu.mean, "variance": self.mu.variance}
        return out

    def stem(self):
        return f"{self.task['name']}_{self.seed}_{datetime.date.today().isoformat()}"


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


def _finite(x):
    return bounds._jsonable(float(x))


def _safe(theorem, inputs, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NumericalFailure:
        raise
    except ConcentrationError as exc:
        return bounds.failed_certificate(theorem, inputs, exc)


def run_certify(exp):
    t, mu = exp.task, exp.mu
    rows = []
    for p in t.get("p_grid", [t["p"]]):
        cert = _safe("GaussianHyperbound", {"alpha": exp.spec.alpha, "p": p}, bounds.gaussian_hyperbound, exp.spec.alpha, p)
        rows.append(({}, cert))
        for r in exp.observables:
            cert = _safe("MultOpNorm", {"p": p}, bounds.mult_op_norm_bound, mu, r, p)
            rows.append(({"observable": r.describe()}, cert))
    for r in exp.observables:
        for beta in exp.initials:
            tag = {"observable": r.describe(), "initial": beta.describe()}
            for eps in t["epsilon_grid"]:
                for N in t["N_grid"]:
                    inputs = {"p": t["p"], "N": N, "epsilon": eps}
                    rows.append((tag, _safe("ChernoffFK", inputs, bounds.chernoff_fk_bound,
                                            mu, r, beta, t["p"], t["hyper_norm"], N, eps)))
                    rows.append((tag, _safe("HypercontractiveTail", inputs, bounds.hypercontractive_tail_cor11,
                                            mu, r, beta, t["p"], N, eps, delta=t["delta"])))
            for n in t["n_grid"]:
                inputs = {"q": t["p"], "n": n, "delta": t["delta"]}
                rows.append((tag, _safe("HyperboundedSampleComplexity", inputs, bounds.sample_complexity_thm10,
                                        mu, r, beta, t["p"], t["hyper_norm"], n, t["delta"])))
    stem = exp.output_dir / exp.stem()
    _dump_json(f"{stem}.json", {"config": exp.resolved(),
                                "certificates": [{**tag, **c.to_dict()} for tag, c in rows]})
    with open(f"{stem}.csv", "w", newline="") as fh:
        fh.write("tag," + ",".join(bounds.CSV_FIELDS) + "\n")
        for tag, c in rows:
            fh.write(_csv_cell(json.dumps(tag, sort_keys=True)) + "," + c.csv_row() + "\n")
    lines = [f"{c.theorem.value:<30} {_short(tag):<40} value={c.value:<12.6g} valid={c.valid}" for tag, c in rows]
    return EXIT_OK, lines


def _csv_cell(text):
    return '"' + text.replace('"', '""') + '"'


def _short(tag):
    parts = []
    if "observable" in tag:
        parts.append(tag["observable"]["name"])
    if "initial" in tag:
        parts.append(tag["initial"]["kind"])
    return "/".join(parts)


def run_simulate(exp, threads):
    t = exp.task
    cfg = TrajectoryConfig(t["n_steps"], t["n_trajectories"], t["seed"], t.get("burn_in"))
    results, lines = [], []
    combos = [(beta, r) for beta in exp.initials for r in exp.observables]
    stem = exp.output_dir / exp.stem()
    for beta in exp.initials:
        averages = trajectory_averages(exp.spec, beta, exp.observables, cfg, threads=threads)
        for j, r in enumerate(exp.observables):
            mean = stationary_expectation(r, exp.mu)
            k = combos.index((beta, r))
            suffix = "" if len(combos) == 1 else f"_{k}"
            write_trajectory_csv(f"{stem}{suffix}.csv", averages[j], mean)
            tails = [tail_from_deviations(averages[j] - mean, eps).to_dict() for eps in t["epsilon_grid"]]
            results.append({"observable": r.describe(), "initial": beta.describe(), "csv_suffix": suffix,
                            "stationary_mean": mean, "mean_of_averages": float(np.mean(averages[j])),
                            "tails": tails})
            for tail in tails:
                lines.append(f"{r.name:<15} {beta.kind.value:<11} eps={tail['epsilon']:<6g} "
                             f"p={tail['empirical_probability']:.4g} wilson=[{tail['wilson_interval'][0]:.4g}, "
                             f"{tail['wilson_interval'][1]:.4g}]")
    _dump_json(f"{stem}.json", {"config": exp.resolved(), "burn_in": cfg.resolved_burn_in(exp.spec, exp.initials[0]),
                                "results": results})
    return EXIT_OK, lines


def run_spectral(exp):
    t = exp.task
    stem = exp.output_dir / exp.stem()
    op = hermite_galerkin(exp.spec, t["K"])
    rep = spectral_report(op, t["max_power"])
    out = {"config": exp.resolved(), "hermite": rep.to_dict()}
    write_matrix_csv(f"{stem}_hermite.csv", op.matrix)
    lines = [f"hermite K={t['K']}: gap={rep.spectral_gap:.6g} aperiodic={rep.aperiodic}"]
    if "ulam_cells" in t:
        half = t["ulam_width_sd"] * exp.mu.std
        edges = np.linspace(exp.mu.mean - half, exp.mu.mean + half, t["ulam_cells"] + 1)
        uop = ulam_discretize(exp.spec, edges, t["ulam_samples_per_cell"], t["seed"])
        urep = spectral_report(uop, t["max_power"])
        out["ulam"] = urep.to_dict()
        write_matrix_csv(f"{stem}_ulam.csv", uop.matrix)
        lines.append(f"ulam cells={t['ulam_cells']}: gap={urep.spectral_gap:.6g} aperiodic={urep.aperiodic}")
    _dump_json(f"{stem}.json", out)
    return EXIT_OK, lines


def _compare(cert, tail):
    """Soundness flags for a tail certificate against an empirical tail."""
    informative = cert.valid and cert.value < 1
    return {
        "informative": informative,
        "dominates_wilson_upper": (cert.value > tail.wilson_interval[1]) if informative else None,
        "violated": bool(informative and tail.wilson_interval[0] > cert.value),
    }


def run_validate(exp, threads):
    t, mu, spec = exp.task, exp.mu, exp.spec
    rows, lines, violated = [], [], False
    for beta in exp.initials:
        for N in t["N_grid"]:
            cfg = TrajectoryConfig(N, t["n_trajectories"], t["seed"], t["burn_in"])
            averages = trajectory_averages(spec, beta, exp.observables, cfg, threads=threads)
            for j, r in enumerate(exp.observables):
                mean = stationary_expectation(r, mu)
                for eps in t["epsilon_grid"]:
                    tail = tail_from_deviations(averages[j] - mean, eps)
                    inputs = {"p": t["p"], "N": N, "epsilon": eps}
                    certs = [
                        _safe("ChernoffFK", inputs, bounds.chernoff_fk_bound, mu, r, beta, t["p"], t["hyper_norm"], N, eps),
                        _safe("HypercontractiveTail", inputs, bounds.hypercontractive_tail_cor11, mu, r, beta, t["p"], N, eps),
                    ]
                    for cert in certs:
                        cmp = _compare(cert, tail)
                        violated |= cmp["violated"]
                        rows.append({"observable": r.describe(), "initial": beta.describe(), "N": N, "epsilon": eps,
                                     "certificate": cert.to_dict(), "tail": tail.to_dict(), **cmp})
                        lines.append(f"{cert.theorem.value:<21} {r.name:<9} {beta.kind.value:<10} N={N:<6} eps={eps:<5g} "
                                     f"cert={cert.value:<11.4g} emp={tail.empirical_probability:<8.4g} "
                                     f"wilson_hi={tail.wilson_interval[1]:<8.4g} "
                                     f"{'VIOLATED' if cmp['violated'] else 'ok'}")
    complexity = []
    for beta in exp.initials:
        for r in exp.observables:
            mean = stationary_expectation(r, mu)
            for n in t["n_grid"]:
                cert = _safe("HyperboundedSampleComplexity", {"q": t["p"], "n": n, "delta": t["delta"]},
                             bounds.sample_complexity_thm10, mu, r, beta, t["p"], t["hyper_norm"], n, t["delta"])
                entry = {"observable": r.describe(), "initial": beta.describe(), "n": n, "certificate": cert.to_dict()}
                if cert.valid:
                    N = max(1, math.ceil(cert.value))
                    cfg = TrajectoryConfig(N, t["n_trajectories"], t["seed"], t["burn_in"])
                    avg = trajectory_averages(spec, beta, [r], cfg, threads=threads)[0]
                    tail = tail_from_deviations(avg - mean, cert.details["epsilon_n"])
                    target = 1 - t["delta"]
                    bad = tail.wilson_interval[0] >= target
                    violated |= bad
                    entry.update({"N": N, "tail": tail.to_dict(), "violated": bad,
                                  "below_one_minus_delta": tail.empirical_probability < target,
                                  "below_delta": tail.empirical_probability <= t["delta"]})
                    lines.append(f"HyperboundedSampleComplexity {r.name:<9} {beta.kind.value:<10} n={n} N={N} "
                                 f"eps={cert.details['epsilon_n']:.4g} emp={tail.empirical_probability:.4g} "
                                 f"target<{target:g} {'VIOLATED' if bad else 'ok'}")
                complexity.append(entry)
    stem = exp.output_dir / exp.stem()
    _dump_json(f"{stem}.json", {"config": exp.resolved(), "grid": rows, "sample_complexity": complexity,
                                "violated": violated})
    with open(f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theorem", "observable", "initial", "N", "epsilon", "certificate", "empirical_probability",
                    "wilson_low", "wilson_high", "informative", "dominates_wilson_upper", "violated"])
        for row in rows:
            c, tl = row["certificate"], row["tail"]
            w.writerow([c["theorem"], row["observable"]["name"], row["initial"]["kind"], row["N"], row["epsilon"],
                        repr(c["value"]) if isinstance(c["value"], float) else c["value"],
                        tl["empirical_probability"], tl["wilson_interval"][0], tl["wilson_interval"][1],
                        row["informative"], row["dominates_wilson_upper"], row["violated"]])
    return (EXIT_VIOLATION if violated else EXIT_OK), lines


def run(config_path, output_dir=None, threads=1, force_te_constant=None, out=None, err=None):
    """Run one experiment; returns the process exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        exp = Experiment(load_config(config_path), output_dir=output_dir, force_te_constant=force_te_constant)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    try:
        exp.output_dir.mkdir(parents=True, exist_ok=True)
        name = exp.task["name"]
        if name == "certify":
            code, lines = run_certify(exp)
        elif name == "simulate":
            code, lines = run_simulate(exp, threads)
        elif name == "spectral":
            code, lines = run_spectral(exp)
        else:
            code, lines = run_validate(exp, threads)
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=err)
        return EXIT_NUMERICAL
    except ConcentrationError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    print(f"== {exp.task['name']} (alpha={exp.spec.alpha}, C={exp.mu.te_constant:g}) ==", file=out)
    for line in lines:
        print(line, file=out)
    if code == EXIT_VIOLATION:
        print("at least one certificate was violated beyond Monte Carlo error", file=out)
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(prog="markov-concentration", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--output-dir", help="overrides output_dir from the config")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for simulation")
    parser.add_argument("--force-te-constant", type=float, default=None,
                        help="transport-entropy constant to use instead of the stationary variance")
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    return run(args.config, args.output_dir, args.threads, args.force_te_constant)


if __name__ == "__main__":
    sys.exit(main())
