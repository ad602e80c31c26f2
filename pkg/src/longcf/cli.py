"""Command line pipeline: simulate, train, generate, rank, report.

Every subcommand reads one JSON run config (``--config``). Relative paths in
the config are resolved against the config file's directory. Exit codes:
0 success, 1 usage or config error, 2 data error, 3 infeasible constraints.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .audit import BIG_DISTANCE, audit, log_grid, one_observation_threshold, score_set, threshold_curve
from .errors import (ConfigError, EmptyInput, InfeasibleConstraints, LongcfError, MissingColumn,
                     MissingFile, NoLabels)
from .generation import (
    FitnessConfig,
    GeneticParams,
    Objective,
    CounterfactualSet,
    ScoringContext,
    SearchConstraints,
    explain_subjects,
)
from .metrics import LongitudinalConfig, build_cross_profile, build_profile
from .models import accuracy, load_model, save_model, train_forest, train_logistic
from .records import read_counterfactuals, write_counterfactuals
from .schema import (
    Dataset,
    compute_diffs,
    load_dataset,
    load_longitudinal,
    load_schema,
    write_dataset,
)
from .simulate import SimulationConfig, make_adult_like, simulate_second_timepoint

log = logging.getLogger("longcf")


@dataclass
class RunConfig:
    base: Path
    paths: dict
    label_column: str = "label"
    simulation: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    generation: dict = field(default_factory=dict)
    metric: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("paths"), dict):
            raise ConfigError("config needs a 'paths' object")
        known = {"paths", "label_column", "simulation", "model", "generation", "metric", "report"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config sections: {sorted(extra)}")
        cfg = cls(path.parent, doc["paths"], **{k: v for k, v in doc.items() if k != "paths"})
        k = cfg.generation.get("k", 10)
        s = cfg.metric.get("s", 1)
        if not isinstance(k, int) or k < 1 or not isinstance(s, int) or s < 1:
            raise ConfigError("k and s must be positive integers")
        return cfg

    @property
    def out_dir(self) -> Path:
        return self.base / self.report.get("output_dir", "out")

    def path(self, key: str, default: Optional[str] = None, must_exist: bool = False) -> Optional[Path]:
        raw = self.paths.get(key)
        if raw is None and default is None:
            if must_exist:
                raise ConfigError(f"config is missing paths.{key}")
            return None
        p = self.out_dir / default if raw is None else self.base / raw
        if must_exist and not p.is_file():
            raise MissingFile(p)
        return p


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _schema(cfg):
    return load_schema(cfg.path("schema", must_exist=True))


def _train_data(cfg, schema) -> Dataset:
    path = cfg.path("data", must_exist=True)
    try:
        return load_dataset(path, schema, cfg.label_column)
    except MissingColumn as exc:
        if exc.name != cfg.label_column:
            raise
        raise NoLabels(f"{path} has no label column {cfg.label_column!r}") from None


def _subjects(cfg, schema) -> Dataset:
    p = cfg.path("subjects") or cfg.path("data", must_exist=True)
    if not p.is_file():
        raise MissingFile(p)
    return load_dataset(p, schema)


def _diffs(cfg, schema):
    # configured snapshots must exist; the simulate defaults are used when present
    if "t1" in cfg.paths or "t2" in cfg.paths:
        t1, t2 = cfg.path("t1", must_exist=True), cfg.path("t2", must_exist=True)
    else:
        t1, t2 = cfg.path("t1", "t1.csv"), cfg.path("t2", "t2.csv")
        if not (t1.is_file() and t2.is_file()):
            return None
    return compute_diffs(load_longitudinal(t1, t2, schema))


def _metric(cfg):
    m = cfg.metric
    return (LongitudinalConfig(int(m.get("s", 1)), m.get("norm", "l1").lower()),
            m.get("continuous_scaling", "MAD").upper(), float(m.get("tolerance", 1e-5)),
            m.get("categorical_rate", "feature"))


def _context(cfg, schema, model, train):
    long_cfg, scaling, tol, rate_mode = _metric(cfg)
    diffs = _diffs(cfg, schema)
    profile = build_profile(diffs, scaling, tol, rate_mode) if diffs is not None else None
    return ScoringContext(model, build_cross_profile(train, tol), diffs, profile, long_cfg)


def cmd_simulate(cfg: RunConfig, args) -> int:
    schema = _schema(cfg)
    sim = dict(cfg.simulation)
    synthetic = sim.pop("synthetic", None)
    data_path = cfg.path("data", must_exist=synthetic is None)
    if synthetic is not None:
        full = make_adult_like(int(synthetic.get("n", 2000)), int(synthetic.get("seed", 0)),
                               float(synthetic.get("positive_rate", 0.24)))
        if full.schema.fingerprint != schema.fingerprint:
            raise ConfigError("synthetic population needs the bundled adult-like schema")
        n_test = int(round(len(full) * float(synthetic.get("test_fraction", 0.1))))
        train, test = full.subset(np.arange(n_test, len(full))), full.subset(np.arange(n_test))
        if data_path is None:
            raise ConfigError("config is missing paths.data")
        data_path.parent.mkdir(parents=True, exist_ok=True)
        write_dataset(train, data_path, cfg.label_column)
        subj = cfg.path("subjects")
        if subj is not None:
            write_dataset(test, subj, cfg.label_column)
    data = load_dataset(data_path, schema)
    if args.seed is not None:
        sim["seed"] = args.seed
    try:
        config = SimulationConfig(**sim)
    except TypeError as exc:
        raise ConfigError(f"bad simulation block: {exc}") from None
    pair = simulate_second_timepoint(data, config)
    t1, t2 = cfg.path("t1", "t1.csv"), cfg.path("t2", "t2.csv")
    t1.parent.mkdir(parents=True, exist_ok=True)
    t2.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(Dataset(schema, pair.time1, ids=data.ids), t1)
    write_dataset(Dataset(schema, pair.time2, ids=data.ids), t2)
    print(f"wrote {len(pair)} paired rows to {t1} and {t2}")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    schema = _schema(cfg)
    data = _train_data(cfg, schema)
    m = dict(cfg.model)
    variant = m.pop("variant", "forest")
    if args.seed is not None:
        m["seed"] = args.seed
    try:
        if variant == "forest":
            model = train_forest(data, **m)
        elif variant == "logistic":
            model = train_logistic(data, **m)
        else:
            raise ConfigError(f"unknown model variant {variant!r}")
    except TypeError as exc:
        raise ConfigError(f"bad model block: {exc}") from None
    out = cfg.path("model", "model.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    print(f"train accuracy: {accuracy(model, data):.4f}")
    return 0


def _fitness_config(g) -> FitnessConfig:
    objectives = g.get("objectives", [{"kind": "proximity"}, {"kind": "sparsity"}])
    validity = g.get("validity", {})
    return FitnessConfig(tuple(Objective(o["kind"].lower(), float(o.get("weight", 1.0))) for o in objectives),
                         validity.get("mode", "hinge"), float(validity.get("weight", 1000.0)))


def _log_path(cfg):
    return cfg.out_dir / "generation_log.json"


def cmd_generate(cfg: RunConfig, args) -> int:
    schema = _schema(cfg)
    train = _train_data(cfg, schema)
    subjects = _subjects(cfg, schema)
    model = load_model(cfg.path("model", "model.json", must_exist=True), schema)
    context = _context(cfg, schema, model, train)
    g = cfg.generation
    method = args.method or g.get("method", "genetic")
    k = args.k or int(g.get("k", 10))
    seed = args.seed if args.seed is not None else int(g.get("seed", 0))
    z = int(g.get("desired_class", 1))
    config = _fitness_config(g)
    constraints = SearchConstraints.from_data(train, z, g.get("frozen", ()),
                                              bool(g.get("respect_immutable", True)),
                                              g.get("ranges"), g.get("monotone"))
    params = GeneticParams(**{key: g[key] for key in ("pop_size", "max_generations", "convergence_epsilon",
                                                      "patience", "p_mut", "p_crossover_bias", "p_mutation",
                                                      "p_revert", "init_rounds") if key in g}, k=k)

    pred = model.predict(subjects.X)
    todo = np.flatnonzero(pred != z)
    skipped = np.flatnonzero(pred == z)
    if len(skipped):
        log.info("skipping %d subjects already predicted as class %d", len(skipped), z)
    if g.get("max_subjects") is not None:
        todo = todo[:int(g["max_subjects"])]
    sets = explain_subjects(subjects.X[todo], todo, context, constraints, method, config, params,
                            int(g.get("n_samples", 2000)), seed, args.jobs)
    out = cfg.path("counterfactuals", "counterfactuals.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_counterfactuals(sets, schema, out)
    report = {"method": method, "k": k, "desired_class": z,
              "skipped_already_desired": skipped.tolist(),
              "subjects": [{"subject_id": s.subject_id, "n_candidates": len(s), "n_valid": s.n_valid,
                            "shortfall": s.shortfall, "duplicates": s.duplicates} for s in sets]}
    _log_path(cfg).parent.mkdir(parents=True, exist_ok=True)
    _log_path(cfg).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if not sets:
        print("no subjects need explanations; wrote an empty file")
    else:
        print(f"wrote {sum(len(s) for s in sets)} counterfactuals for {len(sets)} subjects to {out}")
    return 0


def _read_log(cfg):
    p = _log_path(cfg)
    if not p.is_file():
        return None
    return json.loads(p.read_text(encoding="utf-8"))


def cmd_rank(cfg: RunConfig, args) -> int:
    schema = _schema(cfg)
    subjects = _subjects(cfg, schema)
    diffs = _diffs(cfg, schema)
    if diffs is None:
        raise ConfigError("ranking needs paths.t1 and paths.t2")
    long_cfg, scaling, tol, rate_mode = _metric(cfg)
    profile = build_profile(diffs, scaling, tol, rate_mode)
    path = cfg.path("counterfactuals", "counterfactuals.csv", must_exist=True)
    k = args.k or int(cfg.generation.get("k", 10))
    sets = read_counterfactuals(path, schema, subjects.X, k)
    ranked = [score_set(s, diffs, profile, long_cfg) for s in sets]
    write_counterfactuals(ranked, schema, path, with_longitudinal_rank=True)
    print(f"ranked {sum(len(s) for s in ranked)} counterfactuals for {len(ranked)} subjects")
    return 0


def _thresholds(rep):
    grid = rep.get("thresholds")
    if grid is None:
        return log_grid()
    if isinstance(grid, dict):
        return log_grid(float(grid.get("min", 1e-2)), float(grid.get("max", 1e6)),
                                  int(grid.get("num", 33)))
    return np.asarray(grid, dtype=float)


def cmd_report(cfg: RunConfig, args) -> int:
    schema = _schema(cfg)
    subjects = _subjects(cfg, schema)
    path = cfg.path("counterfactuals", "counterfactuals.csv", must_exist=True)
    gen_log = _read_log(cfg)
    k = args.k or (gen_log or {}).get("k") or int(cfg.generation.get("k", 10))
    sets = read_counterfactuals(path, schema, subjects.X, k)
    if gen_log is not None:
        # subjects whose search came back empty never reach the CSV
        have = {s.subject_id for s in sets}
        d = len(schema)
        for entry in gen_log["subjects"]:
            sid = entry["subject_id"]
            if sid not in have:
                sets.append(CounterfactualSet(subjects.X[sid], np.empty((0, d)), np.empty(0, bool),
                                              np.empty(0), np.empty(0, np.int64), np.empty(0),
                                              np.empty(0), gen_log["method"], k, sid, shortfall=True))
        sets.sort(key=lambda s: s.subject_id)
    if not sets:
        raise EmptyInput("no counterfactual sets to report on")
    rep = cfg.report
    cutoff = float(rep.get("cutoff", BIG_DISTANCE))
    summary = audit(sets, schema, cutoff=cutoff)
    diffs = _diffs(cfg, schema)
    reference = float("nan")
    if diffs is not None:
        _, scaling, tol, rate_mode = _metric(cfg)
        reference = one_observation_threshold(diffs, build_profile(diffs, scaling, tol, rate_mode))
    curve = threshold_curve(sets, _thresholds(rep), reference)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    doc = summary.to_dict()
    doc.update(reference_threshold=None if np.isnan(reference) else reference, cutoff=cutoff)
    (out / "audit.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    with (out / "curve.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "any_fraction", "mean_fraction"])
        for t, a, m in curve.rows():
            w.writerow([repr(t), repr(a), repr(m)])
    print(json.dumps(doc, indent=2))
    return 0


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "generate": cmd_generate,
            "rank": cmd_rank, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="longcf", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--method", choices=["genetic", "random"])
    p.add_argument("--out-dir", help="override report.output_dir")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for generate")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.out_dir:
            cfg.report = {**cfg.report, "output_dir": str(Path(args.out_dir).resolve())}
        if args.k is not None and args.k < 1:
            raise ConfigError("--k must be positive")
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleConstraints as exc:
        print(f"infeasible constraints: {exc}", file=sys.stderr)
        return 3
    except LongcfError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
