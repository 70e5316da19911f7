"""Command-line experiment runner.

Subcommands: gen-data, train, accuracy-sweep, diversity, report.
A flat JSON config file (--config) supplies defaults for any long option;
explicit command-line flags win.  Unknown config keys are rejected.

Exit codes: 0 ok, 2 config error, 3 training divergence, 4 missing inputs,
5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import evalsuite
from .bayes import BayesModel
from .config import MODEL_FAMILIES, PROFILES, sub_rng
from .errors import ConfigError, DivergenceError
from .problem import load_dataset, make_dataset, save_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGE = 3
EXIT_MISSING = 4
EXIT_IO = 5

OUT_ROOT_ENV = "INVBENCH_OUT"


def _out_path(p) -> Path:
    p = Path(p)
    if not p.is_absolute():
        root = os.environ.get(OUT_ROOT_ENV)
        if root:
            return Path(root) / p
    return p


def _apply_config_file(args: argparse.Namespace, parser_keys: set) -> None:
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} not found")
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must be a flat JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr not in parser_keys:
            raise ConfigError(f"unknown config key {key!r}")
        # flags given on the command line keep precedence
        if attr not in args._explicit:
            setattr(args, attr, value)


class _TrackingParser(argparse.ArgumentParser):
    """Remembers which options were explicitly provided (for config overlay)."""

    def parse_args(self, argv=None):  # type: ignore[override]
        args = super().parse_args(argv)
        explicit = set()
        argv = list(sys.argv[1:] if argv is None else argv)
        for token in argv:
            if token.startswith("--"):
                explicit.add(token[2:].split("=")[0].replace("-", "_"))
        args._explicit = explicit
        return args


def _parse_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v) for v in str(value).split(",") if v]


def _profile(args):
    try:
        prof = PROFILES[args.profile]()
    except KeyError:
        raise ConfigError(f"unknown profile {args.profile!r}")
    return prof


# -- subcommand implementations -------------------------------------------

def cmd_gen_data(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    ds = make_dataset(args.n, sigma=args.sigma, seed=args.seed)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(f"wrote {out} ({len(ds)} rows, sigma={args.sigma}, seed={args.seed})")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.model not in MODEL_FAMILIES:
        raise ConfigError(f"unknown model family {args.model!r}")
    data = Path(args.data)
    if not data.exists():
        print(f"missing dataset: {data}", file=sys.stderr)
        return EXIT_MISSING
    ds = load_dataset(data)
    profile = _profile(args)
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = len(ds)
    test_targets = evalsuite.make_test_targets(profile, args.seed)
    surrogate_test = evalsuite._surrogate_test_set(profile, args.seed)
    log_path = out / "training_log.csv" if args.model == "cwgan" else None
    model = evalsuite.train_family(args.model, ds, profile, d, args.seed,
                                   val_targets=test_targets,
                                   surrogate_test=surrogate_test,
                                   log_path=log_path)
    if isinstance(model, BayesModel):
        model.surrogates.save(out)
    else:
        model.save(out)
    print(f"trained {args.model} on d={d}; checkpoint at {out}")
    return EXIT_OK


def cmd_accuracy_sweep(args) -> int:
    profile = _profile(args)
    families = _parse_list(args.models, str)
    for fam in families:
        if fam not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family {fam!r}")
    sizes = _parse_list(args.sizes, int) if args.sizes else list(profile.sizes)
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(cell):
        mae = "/".join(format(v, ".4g") for v in cell.mae)
        print(f"[{cell.model} d={cell.d} seed={cell.seed}] mae={mae} "
              f"({cell.runtime:.1f}s)", flush=True)

    cells = evalsuite.dataset_size_sweep(families, sizes, profile,
                                         global_seed=args.seed, jobs=args.jobs,
                                         progress=progress)
    evalsuite.export_accuracy(cells, out / "accuracy.csv")
    evalsuite.export_parity(cells, out / "parity.csv")
    evalsuite.export_accuracy_meta(cells, out / "accuracy_meta.json")
    print(f"reports in {out}")
    return EXIT_OK


def cmd_diversity(args) -> int:
    profile = _profile(args)
    families = _parse_list(args.models, str)
    for fam in families:
        if fam not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family {fam!r}")
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed
    d = args.d
    ds = make_dataset(d, sigma=profile.sigma,
                      seed=int(sub_rng(seed, "dataset", d, profile.seeds[0]).integers(2**31)))
    test_targets = evalsuite.make_test_targets(profile, seed)
    surrogate_test = evalsuite._surrogate_test_set(profile, seed)
    models = {}
    for fam in families:
        print(f"training {fam} at d={d} ...", flush=True)
        models[fam] = evalsuite.train_family(
            fam, ds, profile, d, profile.seeds[0],
            val_targets=test_targets, surrogate_test=surrogate_test)
    cells = evalsuite.diversity_study(models, profile, global_seed=seed,
                                      count=args.count)
    evalsuite.export_diversity(cells, out / "diversity.csv")
    if args.dump_params:
        for cell in cells:
            evalsuite.export_parameter_dump(cell, out / "param_dumps")
    print(f"reports in {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    missing = [str(p) for p in inputs if not p.exists()]
    if missing:
        print("missing inputs: " + ", ".join(missing), file=sys.stderr)
        return EXIT_MISSING
    header = None
    rows: list[str] = []
    seen = set()
    for p in inputs:
        lines = p.read_text().splitlines()
        if not lines:
            raise ConfigError(f"empty report {p}")
        if header is None:
            header = lines[0]
        elif lines[0] != header:
            raise ConfigError(f"schema mismatch in {p}")
        for line in lines[1:]:
            if line in seen:
                raise ConfigError(f"duplicate cell while merging: {line!r}")
            seen.add(line)
            rows.append(line)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join([header or "", *rows]) + "\n")
    print(f"merged {len(inputs)} reports -> {out}")
    return EXIT_OK


# -- argument wiring -------------------------------------------------------

def build_parser() -> _TrackingParser:
    parser = _TrackingParser(prog="invbench",
                             description="Inverse-design generative benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset (CSV + sidecar)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="dataset.csv")
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one solver on a dataset")
    p.add_argument("--model", required=True, help="inn | cfm | cwgan | bi")
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", default="desk")
    p.add_argument("--out", default="checkpoint")
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("accuracy-sweep", help="accuracy vs dataset size study")
    p.add_argument("--models", default=",".join(MODEL_FAMILIES))
    p.add_argument("--sizes", default=None, help="comma list; default: profile sizes")
    p.add_argument("--profile", default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="accuracy_out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_accuracy_sweep)

    p = sub.add_parser("diversity", help="27-target diversity study")
    p.add_argument("--models", default="inn,cfm,cwgan,bi")
    p.add_argument("--d", type=int, default=5000)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--profile", default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-params", action="store_true")
    p.add_argument("--out", default="diversity_out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_diversity)

    p = sub.add_parser("report", help="merge disjoint report CSVs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", default="merged.csv")
    p.add_argument("--config")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, set(vars(args)))
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGE
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
