"""Command-line front end: every experiment behind one binary with reproducible configs.

Subcommands: classify, simulate, picard, inflate, estimate-lab.  Experiments
read a JSON config file (flags override file values), write a manifest
echoing the fully resolved configuration before any computation starts, and
emit CSV outputs with stable headers.  All randomness flows from one integer
seed through numpy's PCG64 generator, so a config plus seed reproduces every
output byte for byte.  Exit codes: 0 ok, 1 internal failure, 2 invalid
input, 3 acceptance-check failure (with --check).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coeffs import Coefficients, classify
from .dynamics import BlowupError, SolverConfig, conserved_quantities, solve
from .inflation import InflationConfig, run_inflation
from .picard import picard_terms
from .reports import ExperimentReport
from .spectral import (
    Grid,
    SystemState,
    l2_norm,
    random_band_limited_field,
    sobolev_norm,
    write_snapshot,
    zero_field,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3


class ConfigError(ValueError):
    """Configuration problem, reported with the offending field path."""


_REQUIRED = object()


def _field(cfg: dict, path: str, kind, default=_REQUIRED):
    node = cfg
    parts = path.split(".")
    for i, part in enumerate(parts):
        if not isinstance(node, dict):
            raise ConfigError(f"{'.'.join(parts[:i])}: expected an object")
        if part not in node:
            if default is _REQUIRED:
                raise ConfigError(f"{path}: required field is missing")
            return default
        node = node[part]
    if kind is float and isinstance(node, int):
        node = float(node)
    if not isinstance(node, kind):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {type(node).__name__}")
    return node


def _load_config(path_str) -> dict:
    if path_str is None:
        raise ConfigError("config: a --config file is required for this subcommand")
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"config: file {path} does not exist")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc


def _coefficients(cfg: dict) -> Coefficients:
    block = _field(cfg, "coefficients", dict)
    try:
        return Coefficients(
            _field(block, "alpha", float),
            _field(block, "beta", float),
            _field(block, "gamma", float),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"coefficients: {exc}") from exc


def _grid(cfg: dict) -> Grid:
    block = _field(cfg, "grid", dict)
    try:
        return Grid(
            dim=_field(block, "dim", int, 1),
            n=_field(block, "n", int),
            length=_field(block, "length", float, 2 * float(np.pi)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _initial_state(cfg: dict, grid: Grid, seed: int) -> SystemState:
    block = _field(cfg, "initial", dict)
    kind = _field(block, "kind", str, "random")
    if kind == "random":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 101])))
        amplitude = _field(block, "amplitude", float, 0.1)
        max_index = _field(block, "max_index", int, max(2, grid.n // 8))
        decay = _field(block, "decay", float, 2.0)
        make = lambda: random_band_limited_field(rng=rng, grid=grid, max_index=max_index,
                                                 amplitude=amplitude, decay=decay)
        return SystemState(make(), make(), make())
    if kind == "modes":
        fields = {}
        for role in ("u", "v", "w"):
            f = zero_field(grid)
            coeffs = f.coeffs.copy()
            for entry in _field(block, role, list, []):
                if grid.dim == 1:
                    m, re, im = entry
                    coeffs[0, int(m) % grid.n] = complex(re, im)
                else:
                    mx, my, comp, re, im = entry
                    coeffs[int(comp), int(mx) % grid.n, int(my) % grid.n] = complex(re, im)
            fields[role] = f.with_coeffs(coeffs)
        return SystemState(fields["u"], fields["v"], fields["w"])
    raise ConfigError(f"initial.kind: unknown kind {kind!r}")


class _RunDir:
    """Output directory with a pre-compute manifest and failure cleanup."""

    def __init__(self, out_dir: str, kind: str, resolved_config: dict, seed: int):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.created: list[Path] = []
        self.manifest = {
            "kind": kind,
            "artifact": "qdnls",
            "version": __version__,
            "seed": seed,
            "config": resolved_config,
        }
        self.manifest_path = self.dir / "manifest.json"
        self._write_manifest()
        self.created.append(self.manifest_path)

    def _write_manifest(self) -> None:
        with open(self.manifest_path, "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.created.append(p)
        return p

    def finish(self, **results) -> None:
        self.manifest["results"] = results
        self._write_manifest()

    def cleanup(self) -> None:
        for p in self.created:
            if p.exists():
                p.unlink()


def cmd_classify(args) -> int:
    try:
        c = Coefficients(args.alpha, args.beta, args.gamma)
        report = classify(args.d, c)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    c = _coefficients(cfg)
    grid = _grid(cfg)
    seed = args.seed if args.seed is not None else _field(cfg, "seed", int, 0)
    dt = _field(cfg, "dt", float)
    t_final = _field(cfg, "T", float)
    dump_every = _field(cfg, "dump_every", int, 0)
    norm_s = _field(cfg, "norm_s", float, 1.0)
    initial = _initial_state(cfg, grid, seed)

    resolved = {
        "coefficients": {"alpha": c.alpha, "beta": c.beta, "gamma": c.gamma},
        "grid": {"dim": grid.dim, "n": grid.n, "length": grid.length},
        "dt": dt, "T": t_final, "dump_every": dump_every, "norm_s": norm_s,
        "initial": cfg.get("initial", {"kind": "random"}), "dump": bool(args.dump),
    }
    run = _RunDir(args.output_dir, "simulate", resolved, seed)
    try:
        solver_cfg = SolverConfig(c, grid, dt=dt, T=t_final, dump_every=dump_every)
        trajectory = solve(solver_cfg, initial)
        report = ExperimentReport(
            kind="simulate",
            columns=("t", "Q1", "Q2", "norm_u_hs", "norm_v_hs", "norm_w_hs"),
        )
        for state in trajectory:
            q1, q2 = conserved_quantities(state)
            report.add_row(
                t=state.time, Q1=q1, Q2=q2,
                norm_u_hs=sobolev_norm(state.u, norm_s),
                norm_v_hs=sobolev_norm(state.v, norm_s),
                norm_w_hs=sobolev_norm(state.w, norm_s),
            )
            if args.dump:
                step_tag = f"{state.time:.6f}".replace(".", "p")
                for role in ("u", "v", "w"):
                    write_snapshot(getattr(state, role),
                                   run.path(f"{role}_{step_tag}.qsnap"), time=state.time)
        report.write_csv(run.path("summary.csv"))
        q1_0, q2_0 = conserved_quantities(trajectory[0])
        q1_T, q2_T = conserved_quantities(trajectory[-1])
        run.finish(
            steps=int(round(t_final / dt)),
            q1_relative_drift=abs(q1_T - q1_0) / max(q1_0, 1e-300),
            q2_relative_drift=abs(q2_T - q2_0) / max(q2_0, 1e-300),
        )
    except BlowupError as exc:
        run.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ConfigError, ValueError):
        run.cleanup()
        raise
    return EXIT_OK


def cmd_picard(args) -> int:
    cfg = _load_config(args.config)
    c = _coefficients(cfg)
    grid = _grid(cfg)
    seed = args.seed if args.seed is not None else _field(cfg, "seed", int, 0)
    k_max = _field(cfg, "k_max", int, 3)
    t_final = _field(cfg, "t", float)
    nodes = _field(cfg, "nodes", int, 16)
    initial = _initial_state(cfg, grid, seed)

    resolved = {
        "coefficients": {"alpha": c.alpha, "beta": c.beta, "gamma": c.gamma},
        "grid": {"dim": grid.dim, "n": grid.n, "length": grid.length},
        "k_max": k_max, "t": t_final, "nodes": nodes,
        "initial": cfg.get("initial", {"kind": "random"}),
    }
    run = _RunDir(args.output_dir, "picard", resolved, seed)
    try:
        terms = picard_terms(c, initial.u, initial.v, initial.w, k_max, t_final, nodes=nodes)
        report = ExperimentReport(kind="picard", columns=("order", "role", "norm_l2"))
        for term in terms:
            report.add_row(order=term.order, role=term.role, norm_l2=l2_norm(term.field))
        report.write_csv(run.path("iterates.csv"))
        run.finish(terms=len(terms))
    except (ConfigError, ValueError):
        run.cleanup()
        raise
    return EXIT_OK


INFLATION_COLUMNS = ("N", "t", "s", "alpha", "beta", "gamma", "norm_u3", "ratio",
                     "phi2_min", "phi2_max", "psi_max")


def cmd_inflate(args) -> int:
    cfg = _load_config(args.config)
    c = _coefficients(cfg)
    seed = args.seed if args.seed is not None else _field(cfg, "seed", int, 0)
    s = _field(cfg, "s", float)
    t_final = _field(cfg, "t", float)
    n_list = _field(cfg, "n_list", list, [16.0, 32.0, 64.0, 128.0])
    delta_xi = _field(cfg, "delta_xi", float, 0.125)

    try:
        inflation_cfg = InflationConfig(
            c=c, s=s, n_list=tuple(float(n) for n in n_list), t=t_final, delta_xi=delta_xi
        )
    except ValueError as exc:
        raise ConfigError(f"inflation: {exc}") from exc

    resolved = {
        "coefficients": {"alpha": c.alpha, "beta": c.beta, "gamma": c.gamma},
        "s": s, "t": t_final, "n_list": list(n_list), "delta_xi": delta_xi,
    }
    run = _RunDir(args.output_dir, "inflate", resolved, seed)
    try:
        result = run_inflation(inflation_cfg)
        report = ExperimentReport(kind="inflate", columns=INFLATION_COLUMNS)
        for row in result.rows:
            report.add_row(
                N=row.n_freq, t=t_final, s=s, alpha=c.alpha, beta=c.beta, gamma=c.gamma,
                norm_u3=row.norm_u3, ratio=row.ratio,
                phi2_min=row.phi2_over_n2_min, phi2_max=row.phi2_over_n2_max,
                psi_max=row.psi_max,
            )
        report.write_csv(run.path("inflation.csv"))
        run.finish(
            slope=result.slope,
            slope_half_width=result.slope_half_width,
            target_slope=result.target_slope,
        )
    except (ConfigError, ValueError):
        run.cleanup()
        raise
    if args.check and abs(result.slope - result.target_slope) > 0.2:
        print(
            f"check failed: slope {result.slope:.4f} outside "
            f"{result.target_slope} +- 0.2",
            file=sys.stderr,
        )
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_estimate_lab(args) -> int:
    from .estimates import sweeps as sweep_mod

    cfg = _load_config(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else _field(cfg, "seed", int, 0)
    names = _field(cfg, "estimates", list, sorted(sweep_mod.ESTIMATES))
    unknown = [n for n in names if n not in sweep_mod.ESTIMATES]
    if unknown:
        raise ConfigError(f"estimates: unknown entries {unknown}")
    trials = _field(cfg, "trials", int, 8)
    cap = _field(cfg, "cap", float, sweep_mod.DEFAULT_CAP)
    slope_cap = _field(cfg, "slope_cap", float, sweep_mod.DEFAULT_SLOPE_CAP)

    resolved = {"estimates": list(names), "trials": trials, "cap": cap,
                "slope_cap": slope_cap, "jobs": args.jobs}
    run = _RunDir(args.output_dir, "estimate-lab", resolved, seed)
    try:
        reports = sweep_mod.run_bilinear_suite(
            seed=seed, trials=trials, estimates=list(names), cap=cap,
            slope_cap=slope_cap, jobs=args.jobs,
        )
        combined = ExperimentReport(kind="estimate-lab", columns=sweep_mod.SWEEP_COLUMNS)
        per_estimate = {}
        for name in sorted(reports):
            rep = reports[name]
            for row in rep.rows:
                combined.add_row(**row)
            per_estimate[name] = {
                "max_ratio": rep.manifest["max_ratio"],
                "axis_slopes": rep.manifest["axis_slopes"],
                "trend_axes": rep.manifest["trend_axes"],
                "passed": rep.manifest["passed"],
            }
        combined.write_csv(run.path("sweeps.csv"))
        overall = all(entry["passed"] for entry in per_estimate.values())
        run.finish(estimates=per_estimate, passed=overall)
    except (ConfigError, ValueError):
        run.cleanup()
        raise
    if args.check and not overall:
        failing = sorted(n for n, e in per_estimate.items() if not e["passed"])
        print(f"check failed: estimates {failing} violate the cap or trend bound",
              file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdnls",
        description="Numerical laboratory for three-field quadratic derivative "
                    "Schrodinger systems",
    )
    parser.add_argument("--version", action="version", version=f"qdnls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a coefficient triple")
    p.add_argument("-d", type=int, required=True, help="dimension (1-4; 4 means d>=4)")
    p.add_argument("-a", "--alpha", type=float, required=True)
    p.add_argument("-b", "--beta", type=float, required=True)
    p.add_argument("-g", "--gamma", type=float, required=True)
    p.set_defaults(func=cmd_classify)

    for name, func, needs_dump in (
        ("simulate", cmd_simulate, True),
        ("picard", cmd_picard, False),
        ("inflate", cmd_inflate, False),
        ("estimate-lab", cmd_estimate_lab, False),
    ):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size for sweeps")
        p.add_argument("--output-dir", default=f"out-{name}", help="output directory")
        p.add_argument("--check", action="store_true",
                       help="exit 3 when the run misses its acceptance target")
        if needs_dump:
            p.add_argument("--dump", action="store_true", help="write field snapshots")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
