"""The command-line pipeline end to end in a scratch directory.

Equivalent shell session::

    longcf simulate --config run.json
    longcf train    --config run.json
    longcf generate --config run.json --jobs 4
    longcf rank     --config run.json
    longcf report   --config run.json

Run with ``python3 demos/04_cli_pipeline.py``.
"""
import json
import tempfile
from pathlib import Path

from longcf.cli import main
from longcf.schema import save_schema
from longcf.simulate import adult_like_schema

root = Path(tempfile.mkdtemp(prefix="longcf_demo_"))
save_schema(adult_like_schema(), root / "schema.json")
config = {
    "paths": {"schema": "schema.json", "data": "data/train.csv", "subjects": "data/test.csv",
              "t1": "data/t1.csv", "t2": "data/t2.csv", "model": "out/model.json",
              "counterfactuals": "out/counterfactuals.csv"},
    "label_column": "income",
    "simulation": {"seed": 1, "synthetic": {"n": 1000, "seed": 0, "test_fraction": 0.1}},
    "model": {"variant": "forest", "n_trees": 20, "max_depth": 5, "seed": 0},
    "generation": {"method": "genetic", "k": 5, "seed": 0, "max_subjects": 10,
                   "objectives": [{"kind": "proximity"}, {"kind": "longitudinal"}]},
    "metric": {"s": 1, "norm": "l1", "continuous_scaling": "MAD", "tolerance": 1e-5},
    "report": {"output_dir": "out"},
}
cfg = root / "run.json"
cfg.write_text(json.dumps(config, indent=2))
print("config:", cfg)

for step in ("simulate", "train", "generate", "rank", "report"):
    code = main([step, "--config", str(cfg), "--jobs", "4"])
    print(f"-- {step}: exit {code}")
    if code:
        raise SystemExit(code)

print(json.dumps(json.loads((root / "out/audit.json").read_text()), indent=2))
print("artifacts:", sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()))
