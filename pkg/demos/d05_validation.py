"""
Certificates against simulation
===============================

Run the validation pipeline programmatically on a small grid: each tail
certificate is compared with the empirical one-sided tail and its Wilson
interval.
"""
import json
import tempfile
from pathlib import Path

from markov_concentration import cli

config = {
    "chain": {"kind": "LinearGaussian1D", "alpha": 0.5},
    "observable": [{"name": "identity"}, {"name": "abs"}],
    "initial": {"kind": "Stationary"},
    "task": {"name": "validate", "epsilon_grid": [0.2, 0.3], "N_grid": [500, 2000],
             "n_trajectories": 2000, "seed": 1},
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "validate.json"
    path.write_text(json.dumps(config))
    code = cli.run(str(path), output_dir=tmp)
    print("exit code", code)
    report = json.loads(next(Path(tmp).glob("validate_*.json")).read_text())

# %%
for row in report["grid"]:
    print(row["certificate"]["theorem"], row["observable"]["name"], row["N"], row["epsilon"],
          row["certificate"]["value"], row["tail"]["empirical_probability"], row["violated"])
