"""Command-line front end.

Subcommands write a JSON report (and, for ``invariants``, CSV Betti curves
plus an optional PNG) to ``--out`` or stdout. Exit codes: 0 success,
1 validation or hypothesis failure, 2 budget exceeded, 3 a failed
certificate or property (which would contradict a proved statement).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import harness
from .errors import BudgetExceeded, InconsistencyError, RipsHomotopyError, ValidationError
from .filtration import build_bifiltered, build_rips, phase_grid, poset_at
from .invariants import slice_report
from .linalg import require_prime
from .metric import TOL, MetricPoints, SubsetPair, load_metric
from .stability import verify_interleaving
from .systems import check_r_iso, controlled_equivalence_radius, inclusion_bundle, map_from_json

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_VIOLATION = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple
    subset: tuple | None = None
    r: float | None = None
    k: int = 0
    dim_cap: int = 2
    deg_cap: int | None = None
    primes: tuple = (2,)
    tolerance: float = TOL
    seed: int = 0
    count: int = 5
    out: Path | None = None
    plot: bool = False

    def __post_init__(self):
        if self.dim_cap < 1:
            raise ValidationError("--dim-cap must be positive")
        if self.deg_cap is not None and self.deg_cap < 0:
            raise ValidationError("--deg-cap must be non-negative")
        if self.k < 0:
            raise ValidationError("--k must be non-negative")
        if not self.tolerance > 0:
            raise ValidationError("--tolerance must be positive")
        if self.count < 1:
            raise ValidationError("--count must be positive")
        for p in self.primes:
            require_prime(p)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", action="append", default=[], help="point cloud (CSV/JSON) or distance matrix (JSON)")
    common.add_argument("--subset-indices", type=_int_list, help="indices of X inside the input, e.g. 0,2")
    common.add_argument("--r", type=float, help="interleaving radius")
    common.add_argument("--k", type=int, default=0, help="degree parameter")
    common.add_argument("--dim-cap", type=int, default=2)
    common.add_argument("--deg-cap", type=int)
    common.add_argument("--primes", type=_int_list, default=(2,))
    common.add_argument("--tolerance", type=float, default=TOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, help="report path; stdout when omitted")

    parser = argparse.ArgumentParser(prog="rips-homotopy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    inv = sub.add_parser("invariants", parents=[common], help="π_0, Betti numbers and π_1 across the phase grid")
    inv.add_argument("--plot", action="store_true", help="also render Betti curves to PNG (needs --out)")
    sub.add_parser("stability", parents=[common], help="retraction certificate for X ⊂ Y")
    sub.add_parser("systems", parents=[common], help="controlled-equivalence radius and r-iso verdicts")
    prop = sub.add_parser("property", parents=[common], help="seeded property checks")
    prop.add_argument("--count", type=int, default=5, help="instances per property family")
    sub.add_parser("export-complex", parents=[common], help="bifiltered complex as JSON")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command, inputs=tuple(args.input), subset=args.subset_indices, r=args.r,
        k=args.k, dim_cap=args.dim_cap, deg_cap=args.deg_cap, primes=tuple(args.primes),
        tolerance=args.tolerance, seed=args.seed, count=getattr(args, "count", 5),
        out=args.out, plot=getattr(args, "plot", False))


# -- output ----------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.ndarray, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, default=_jsonable) + "\n"


def write_atomic(path: Path, data) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(config: RunConfig, payload: dict) -> None:
    text = dumps(payload)
    if config.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(config.out, text)


# -- inputs ---------------------------------------------------------------------------

def _single_input(config: RunConfig) -> MetricPoints:
    if len(config.inputs) != 1:
        raise ValidationError(f"{config.command} takes exactly one --input")
    return load_metric(config.inputs[0], config.tolerance)


def _pair(config: RunConfig, points: MetricPoints) -> SubsetPair:
    members = config.subset if config.subset is not None else tuple(range(points.n))
    return SubsetPair(points, members)


def _pair_from_two(config: RunConfig) -> SubsetPair:
    """X and Y given as separate files; X's labels must be labels of Y with matching distances."""
    X, Y = (load_metric(p, config.tolerance) for p in config.inputs)
    where = {label: i for i, label in enumerate(Y.labels)}
    try:
        idx = [where[label] for label in X.labels]
    except KeyError as exc:
        raise ValidationError(f"label {exc.args[0]!r} of the first input is not in the second") from exc
    order = np.argsort(idx)
    members = tuple(int(idx[i]) for i in order)
    if len(set(members)) != len(members):
        raise ValidationError("first input repeats a label")
    if np.abs(Y.dist[np.ix_(members, members)] - X.dist[np.ix_(order, order)]).max(initial=0) > config.tolerance:
        raise ValidationError("the first input is not a metric subspace of the second")
    return SubsetPair(Y, members)


# -- commands -------------------------------------------------------------------------

def cmd_invariants(config: RunConfig) -> int:
    if config.plot and config.out is None:
        raise ValidationError("--plot needs --out")
    points = _single_input(config)
    ks = list(range(config.deg_cap + 1)) if config.deg_cap is not None else [config.k]
    cx = build_bifiltered(points, config.dim_cap, max(ks)) if max(ks) else build_rips(points, config.dim_cap)
    grid = phase_grid(points)
    max_k = config.dim_cap - 1
    levels = []
    curves: dict = {}
    for k in ks:
        for s in grid:
            rep = slice_report(poset_at(cx, s, k), s, k, config.primes, max_k)
            levels.append(rep)
            for p in config.primes:
                for q, b in enumerate(rep["betti"][str(p)]):
                    curves.setdefault(f"k{k}_p{p}_b{q}", []).append(b)
    payload = {"command": "invariants", "n": points.n, "dim_cap": config.dim_cap,
               "degrees": ks, "primes": list(config.primes), "grid": list(grid), "levels": levels}
    emit(config, payload)
    if config.out is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["s", *curves])
        for i, s in enumerate(grid):
            writer.writerow([repr(float(s)), *(c[i] for c in curves.values())])
        write_atomic(config.out.with_suffix(".csv"), buf.getvalue())
        if config.plot:
            from .plotting import betti_curves_png
            write_atomic(config.out.with_suffix(".png"), betti_curves_png(list(grid), curves))
    return EXIT_OK


def cmd_stability(config: RunConfig) -> int:
    if config.r is None:
        raise ValidationError("stability needs --r")
    pair = _pair(config, _single_input(config))
    cert = verify_interleaving(pair, config.r, config.k, config.dim_cap)
    emit(config, cert.to_json())
    if not cert.overall:
        print("THEOREM VIOLATION: interleaving certificate failed", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _map_file(path) -> bool:
    try:
        return "kind" in json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError):
        return False


def cmd_systems(config: RunConfig) -> int:
    if len(config.inputs) == 1 and _map_file(config.inputs[0]):
        bundle = {"map": map_from_json(json.loads(Path(config.inputs[0]).read_text()))}
    else:
        if len(config.inputs) == 2:
            pair = _pair_from_two(config)
        else:
            pair = _pair(config, _single_input(config))
        Y = pair.ambient
        X = Y.subspace(pair.members)
        k = config.k
        deg = k if k else None
        cx = build_bifiltered(X, config.dim_cap, k) if deg else build_rips(X, config.dim_cap)
        cy = build_bifiltered(Y, config.dim_cap, k) if deg else build_rips(Y, config.dim_cap)
        members = pair.members
        bundle = inclusion_bundle(cx.filtered(k), cy.filtered(k), config.primes, config.dim_cap - 1,
                                  vertex_map=members.__getitem__)
    radius = controlled_equivalence_radius(list(bundle.values()))
    at = radius if radius is not None else next(iter(bundle.values())).grid[-1]
    payload = {"command": "systems", "k": config.k, "primes": list(config.primes),
               "radius": radius,
               "verdicts": {name: check_r_iso(f, at).to_json() for name, f in bundle.items()}}
    if config.r is not None:
        payload["at_r"] = {name: check_r_iso(f, config.r).to_json() for name, f in bundle.items()}
    emit(config, payload)
    return EXIT_OK


def cmd_property(config: RunConfig) -> int:
    tallies = harness.property_suite(config.seed, config.count)
    payload = {"command": "property", "seed": config.seed, "count": config.count,
               "results": [t.to_json() for t in tallies],
               "passed": all(t.passed for t in tallies)}
    emit(config, payload)
    if not payload["passed"]:
        print("THEOREM VIOLATION: a property check failed", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_export_complex(config: RunConfig) -> int:
    points = _single_input(config)
    deg_cap = config.deg_cap if config.deg_cap is not None else 3
    emit(config, build_bifiltered(points, config.dim_cap, deg_cap).to_json())
    return EXIT_OK


COMMANDS = {"invariants": cmd_invariants, "stability": cmd_stability, "systems": cmd_systems,
            "property": cmd_property, "export-complex": cmd_export_complex}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InconsistencyError as exc:
        print(f"THEOREM VIOLATION: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (RipsHomotopyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
