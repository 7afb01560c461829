"""Command-line front end.

    biastomo {transfer,simulate,reconstruct,wigner,fisher} --config run.json [--seed N] [--out DIR] [--threshold T]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import DimensionPolicyError, PlanError, TomographyError
from .fisher import variance_table
from .fock import DensityMatrix, DimensionPolicy, fidelity, matrix_from_json
from .mle import ReconstructionConfig, em_reconstruct
from .povm import Setting, build_elements, grid_plan, plan_from_json, split_trials, transfer_from_elements
from .simulate import ExperimentPlan, records_from_jsonl, records_to_jsonl, simulate_counts, expected_counts
from .wigner import KERNEL_CONVENTION, GridSpec, run_grid

log = logging.getLogger("biastomo")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_range = {
    "oneOf": [
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
        {"type": "object", "required": ["num"],
         "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                        "num": {"type": "integer", "minimum": 1}}},
    ]
}

SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "fock_sum": {"enum": ["padded", "truncated"]},
        "weighted": {"type": "boolean"},
        "policy": {
            "type": "object", "required": ["n_tr"],
            "properties": {"n_tr": {"type": "integer", "minimum": 1},
                           "n_work": {"type": "integer", "minimum": 1}},
        },
        "state": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["fock", "coherent", "superposition", "file", "maximally_mixed"]},
                "n": {"type": "integer", "minimum": 0},
                "re": {"type": "number"}, "im": {"type": "number"},
                "terms": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
                "path": {"type": "string"},
            },
        },
        "plan": {
            "type": "object",
            "properties": {
                "file": {"type": "string"},
                "settings": {"type": "array"},
                "gammas": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                "efficiencies": _range,
                "total_trials": {"type": "integer", "minimum": 0},
            },
        },
        "records": {"type": "string"},
        "noiseless": {"type": "boolean"},
        "reconstruction": {
            "type": "object",
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "likelihood_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "dilution_epsilon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "fisher": {
            "type": "object",
            "properties": {"n_mes": {"type": "number", "exclusiveMinimum": 0}},
        },
        "wigner": {
            "type": "object",
            "properties": {
                "grid": {"type": "object"},
                "efficiencies": _range,
                "n_tr": {"type": "integer", "minimum": 1},
                "trials_per_point": {"type": ["integer", "null"], "minimum": 1},
                "iterations": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling

def load_config(path: Path, seed: int | None, threshold: float | None) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if seed is not None:
        cfg["seed"] = seed
    if threshold is not None:
        cfg["threshold"] = threshold
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema error: {exc.message}") from None
    cfg["_base"] = str(Path(path).resolve().parent)
    return cfg


def config_hash(cfg: dict) -> str:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode()).hexdigest()


def meta(cfg: dict, command: str) -> dict:
    return {"command": command, "config_sha256": config_hash(cfg), "version": __version__}


def _path(cfg, rel: str) -> Path:
    p = Path(rel)
    if not p.is_absolute():
        p = Path(cfg["_base"]) / p
    if not p.exists():
        raise ConfigError(f"referenced file not found: {p}")
    return p


def _expand(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    return np.linspace(spec.get("start", 0.1), spec.get("stop", 0.9), spec["num"])


def _need(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config needs a {key!r} section")
    return cfg[key]


def build_state(cfg, dim: int) -> DensityMatrix:
    spec = _need(cfg, "state")
    kind = spec["kind"]
    try:
        if kind == "fock":
            return DensityMatrix.fock(spec.get("n", 0), dim)
        if kind == "coherent":
            return DensityMatrix.coherent(complex(spec.get("re", 0.0), spec.get("im", 0.0)), dim)
        if kind == "superposition":
            terms = [(int(n), complex(re, im)) for n, re, im in spec["terms"]]
            return DensityMatrix.superposition(terms, dim)
        if kind == "maximally_mixed":
            return DensityMatrix.maximally_mixed(dim)
        obj = json.loads(_path(cfg, spec["path"]).read_text())
        m = matrix_from_json(obj["rho"] if "rho" in obj else obj)
        return DensityMatrix(m)
    except KeyError as exc:
        raise ConfigError(f"state spec missing {exc}") from None


def build_plan(cfg) -> tuple[list[Setting], DimensionPolicy]:
    spec = _need(cfg, "plan")
    pol = _need(cfg, "policy")
    if "file" in spec:
        settings = plan_from_json(_path(cfg, spec["file"]).read_text())
    elif "settings" in spec:
        settings = plan_from_json(spec["settings"])
    elif "gammas" in spec:
        gammas = [complex(re, im) for re, im in spec["gammas"]]
        nus = _expand(spec.get("efficiencies", {"num": 10}))
        trials = split_trials(spec.get("total_trials", 0), len(gammas) * len(nus))
        settings = grid_plan(gammas, nus, trials)
    else:
        raise ConfigError("plan needs one of 'file', 'settings', 'gammas'")
    if not settings:
        raise ConfigError("plan is empty")
    policy = DimensionPolicy.for_gammas(pol["n_tr"], [s.gamma for s in settings], pol.get("n_work"))
    return settings, policy


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands

def _elements_and_tf(cfg):
    settings, policy = build_plan(cfg)
    elements = build_elements(settings, policy, cfg.get("fock_sum", "padded"))
    tf = transfer_from_elements(elements, cfg.get("threshold", 1e-6), cfg.get("weighted", False))
    return settings, policy, elements, tf


def cmd_transfer(cfg, out: Path) -> list[Path]:
    _, _, _, tf = _elements_and_tf(cfg)
    report = tf.report()
    report["meta"] = meta(cfg, "transfer")
    path = out / "transfer.json"
    _write_json(path, report)
    return [path]


def _records(cfg, settings, policy, elements):
    if "records" in cfg:
        recs = records_from_jsonl(_path(cfg, cfg["records"]).read_text())
        if len(recs) != len(settings):
            raise ConfigError(f"{len(recs)} records for {len(settings)} settings")
        return recs, None
    truth = build_state(cfg, policy.n_tr)
    plan = ExperimentPlan(settings, policy, cfg.get("seed", 0))
    if cfg.get("noiseless", False):
        return expected_counts(truth, plan, elements), truth
    return simulate_counts(truth, plan, elements), truth


def cmd_simulate(cfg, out: Path) -> list[Path]:
    settings, policy = build_plan(cfg)
    elements = build_elements(settings, policy, cfg.get("fock_sum", "padded"))
    recs, _ = _records({k: v for k, v in cfg.items() if k != "records"}, settings, policy, elements)
    path = out / "records.jsonl"
    path.write_text(records_to_jsonl(recs, meta(cfg, "simulate")))
    return [path]


def cmd_reconstruct(cfg, out: Path) -> list[Path]:
    settings, policy, elements, tf = _elements_and_tf(cfg)
    recs, truth = _records(cfg, settings, policy, elements)
    rc = dict(cfg.get("reconstruction", {}))
    rc["rel_threshold"] = cfg.get("threshold", 1e-6)
    result = em_reconstruct(recs, elements, tf, ReconstructionConfig(**rc))
    n_mes = cfg.get("fisher", {}).get("n_mes", sum(r.trials for r in recs))
    report = result.to_json()
    report["variance"] = variance_table(result.rho, elements, n_mes).to_json()
    report["discarded_weight"] = tf.trust(result.rho)
    if truth is not None:
        report["fidelity"] = fidelity(result.rho, truth)
    report["meta"] = meta(cfg, "reconstruct")
    path = out / "result.json"
    _write_json(path, report)
    return [path]


def cmd_fisher(cfg, out: Path) -> list[Path]:
    settings, policy = build_plan(cfg)
    elements = build_elements(settings, policy, cfg.get("fock_sum", "padded"))
    rho = build_state(cfg, policy.n_tr)
    n_mes = cfg.get("fisher", {}).get("n_mes", sum(s.trials for s in settings))
    if not n_mes > 0:
        raise ConfigError("n_mes must be positive (set fisher.n_mes or plan trials)")
    report = variance_table(rho, elements, n_mes).to_json()
    report["meta"] = meta(cfg, "fisher")
    path = out / "variance.json"
    _write_json(path, report)
    return [path]


def cmd_wigner(cfg, out: Path) -> list[Path]:
    wc = cfg.get("wigner", {})
    n_tr = wc.get("n_tr", 12)
    g = wc.get("grid", {})
    try:
        if "center" in g:
            grid = GridSpec.centered(complex(*g["center"]), g.get("half_width", 2.0), g.get("n", 50))
        else:
            grid = GridSpec(**g)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad wigner grid: {exc}") from None
    nus = _expand(wc.get("efficiencies", {"num": 30}))
    truth = build_state(cfg, n_tr)
    trials = wc.get("trials_per_point", 10**4)
    run = run_grid(truth, grid, nus, n_tr, trials, cfg.get("seed", 0), wc.get("iterations", 1000))
    m = meta(cfg, "wigner")
    csv_path = out / "wigner_grid.csv"
    csv_path.write_text(run.to_csv(f"config_sha256={m['config_sha256']} version={m['version']}"))
    diag_path = out / "wigner_diagonals.json"
    _write_json(diag_path, {
        "diagonals": None if run.diagonals is None else [float(x) for x in run.diagonals],
        "grid_error": run.grid_error,
        "kernel": KERNEL_CONVENTION,
        "max_abs_error": run.max_abs_error,
        "meta": m,
    })
    return [csv_path, diag_path]


COMMANDS = {
    "transfer": cmd_transfer,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "wigner": cmd_wigner,
    "fisher": cmd_fisher,
}


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biastomo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", type=Path, default=Path("."))
        s.add_argument("--threshold", type=float)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.threshold)
        args.out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[args.command](cfg, args.out)
    except (ConfigError, PlanError, DimensionPolicyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TomographyError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
