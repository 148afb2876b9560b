"""Command-line entry point: ``twohop-aoi {analytic,simulate,verify,sweep,figures}``.

Exit codes: 0 success, 1 invalid arguments, 2 simulation disagrees with
the closed form beyond three standard errors, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

from .. import __version__, analytic, sim
from ..chain import DivergentChainError
from ..params import LinkParams, Scheme
from . import experiment as xp
from .output import OutputError, emit_csv, emit_plot, infer_axis

EXIT_OK, EXIT_ARGS, EXIT_DISAGREE, EXIT_IO = 0, 1, 2, 3
TOOL = "twohop-aoi"

log = logging.getLogger(TOOL)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _metadata(seed=None, horizon=None) -> dict:
    meta = {"tool": TOOL, "version": __version__, "rng": sim.RNG_NAME}
    meta["seed"] = seed
    meta["horizon"] = horizon
    return meta


def _params(args) -> LinkParams:
    scheme = Scheme.parse(args.scheme)
    if not scheme.two_hop:
        q = args.q if args.q is not None else args.p1
        if q is None:
            raise _UsageError("single-hop schemes need --q (or --p1)")
        return LinkParams.single(q)
    if args.p1 is None or args.p2 is None:
        raise _UsageError("two-hop schemes need --p1 and --p2")
    return LinkParams(args.p1, args.p2)


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, allow_nan=True))


def cmd_analytic(args) -> int:
    scheme = Scheme.parse(args.scheme)
    params = _params(args)
    res = analytic.aoi(scheme, params)
    out = _metadata()
    out.update(
        scheme=str(scheme), p1=params.p1, p2=params.p2,
        average_aoi=res.average_aoi, e_z=res.moments.e_z, e_z2=res.moments.e_z2,
        e_tau_z=res.moments.e_tau_z, solver_aoi=xp.solver_aoi(scheme, params),
    )
    if scheme.two_hop:
        out["arq_minus_noarq"] = analytic.aoi_gap(params)
    _print(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scheme = Scheme.parse(args.scheme)
    params = _params(args)
    config = sim.SimConfig(scheme, params, args.horizon, args.seed)
    st = sim.stats(sim.simulate(config), args.warmup)
    out = _metadata(args.seed, args.horizon)
    out.update(scheme=str(scheme), p1=params.p1, p2=params.p2, warmup=args.warmup)
    out.update(
        average_aoi=st.average_aoi, std_error=st.std_error, cycles=st.cycle_count,
        emp_e_z=st.emp_e_z, emp_e_z2=st.emp_e_z2, emp_e_tau_z=st.emp_e_tau_z,
    )
    _print(out)
    return EXIT_OK


def cmd_verify(args) -> int:
    scheme = Scheme.parse(args.scheme)
    row = xp.verify(_params(args), scheme, args.horizon, args.seed, args.warmup)
    out = _metadata(args.seed, args.horizon)
    out.update(
        scheme=str(row.scheme), p1=row.p1, p2=row.p2, analytic_aoi=row.analytic_aoi,
        solver_aoi=row.solver_aoi, sim_aoi=row.sim_aoi, sim_std_error=row.sim_std_error,
        cycles=row.cycles, agrees=row.agrees,
    )
    _print(out)
    return EXIT_OK if row.agrees else EXIT_DISAGREE


def _spec_from_args(args) -> xp.SweepSpec:
    if args.config and args.preset:
        raise _UsageError("use either --config or --preset, not both")
    if args.config:
        try:
            spec = xp.SweepSpec.from_file(args.config)
        except OSError as exc:
            raise OutputError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise _UsageError(f"{args.config}: {exc}") from exc
    elif args.preset:
        spec = xp.PRESETS[args.preset]
    else:
        spec = xp.SweepSpec()
    return spec.updated(
        schemes=tuple(args.schemes) if args.schemes else None,
        p1_values=tuple(args.p1) if args.p1 else None,
        p2_values=tuple(args.p2) if args.p2 else None,
        horizon=args.horizon,
        seed=args.seed,
        replications=args.replications,
        warmup=args.warmup,
        pairing=args.pairing,
    )


def _report(rows) -> int:
    failures = [r for r in rows if r.error]
    for r in failures:
        log.error("%s p1=%g p2=%g failed: %s", r.scheme, r.p1, r.p2, r.error)
    disagree = [r for r in rows if not r.error and not r.agrees]
    for r in disagree:
        log.warning("%s p1=%g p2=%g: sim %.6g vs analytic %.6g (se %.3g)",
                    r.scheme, r.p1, r.p2, r.sim_aoi, r.analytic_aoi, r.sim_std_error)
    return EXIT_DISAGREE if (failures or disagree) else EXIT_OK


def _summary_line(r) -> str:
    return (f"{str(r.scheme):13s} p1={r.p1:<5g} p2={r.p2:<5g} analytic={r.analytic_aoi:<10.6g} "
            f"solver={r.solver_aoi:<10.6g} sim={r.sim_aoi:<10.6g} se={r.sim_std_error:<9.3g} "
            f"{'ok' if r.agrees else 'DISAGREE'}")


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    started = time.perf_counter()
    rows = xp.run_sweep(spec, jobs=args.jobs)
    log.info("%d points in %.2f s", len(rows), time.perf_counter() - started)
    meta = _metadata(spec.seed, spec.horizon)
    if args.save_config:
        xp.save_spec(spec, args.save_config)
    if args.csv:
        emit_csv(rows, args.csv, meta)
    if args.svg:
        axis = args.axis or xp.PRESET_AXIS.get(args.preset) or infer_axis(rows)
        emit_plot(rows, axis, args.svg, meta)
    if not args.quiet:
        for key, value in meta.items():
            print(f"# {key}={value}")
        for r in rows:
            print(_summary_line(r))
    return _report(rows)


def cmd_figures(args) -> int:
    """All five figure sweeps, one CSV and one SVG each, plus the reduction checks."""
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc}") from exc
    started = time.perf_counter()
    status = EXIT_OK
    for name, base in xp.PRESETS.items():
        spec = base.updated(horizon=args.horizon, seed=args.seed, replications=args.replications)
        rows = xp.run_sweep(spec, jobs=args.jobs)
        meta = _metadata(spec.seed, spec.horizon)
        emit_csv(rows, out_dir / f"{name}.csv", meta)
        emit_plot(rows, xp.PRESET_AXIS[name], out_dir / f"{name}.svg", meta)
        status = max(status, _report(rows))
        if not args.quiet:
            print(f"{name}: {len(rows)} points -> {out_dir / name}.csv, .svg")
    if not args.quiet:
        for line in _claim_lines():
            print(line)
        print(f"elapsed {time.perf_counter() - started:.1f} s")
    return status


def _claim_lines():
    def arq(p1, p2):
        return analytic.aoi_two_arq(LinkParams(p1, p2)).average_aoi

    def noarq(p1, p2):
        return analytic.aoi_two_noarq(LinkParams(p1, p2)).average_aoi

    yield f"ARQ reduction at p1=p2=0.2: {100 * xp.reduction(arq(0.2, 0.2), noarq(0.2, 0.2)):.1f}%"
    yield f"ARQ reduction at p1=p2=0.7: {100 * xp.reduction(arq(0.7, 0.7), noarq(0.7, 0.7)):.1f}%"
    yield (f"ARQ, p1=0.5, p2 0.2 -> 1: {arq(0.5, 0.2):.2f} -> {arq(0.5, 1.0):.2f} "
           f"({100 * xp.reduction(arq(0.5, 1.0), arq(0.5, 0.2)):.1f}% lower)")
    yield (f"ARQ, p2=0.5, p1 0.2 -> 1: {arq(0.2, 0.5):.2f} -> {arq(1.0, 0.5):.2f} "
           f"({100 * xp.reduction(arq(1.0, 0.5), arq(0.2, 0.5)):.1f}% lower)")


def _link_args(p, probability_lists=False):
    p.add_argument("--scheme", required=True, help=", ".join(s.value for s in Scheme))
    p.add_argument("--p1", type=float, help="first-hop success probability")
    p.add_argument("--p2", type=float, help="second-hop success probability")
    p.add_argument("--q", type=float, help="success probability of a single-hop link")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description="Average age of information on one- and two-hop links.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analytic", help="closed-form average AoI and cycle moments")
    _link_args(p)
    p.set_defaults(func=cmd_analytic)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "slot-level simulation"),
        ("verify", cmd_verify, "closed form vs chain solver vs simulation"),
    ):
        p = sub.add_parser(name, help=helptext)
        _link_args(p)
        p.add_argument("--horizon", type=int, default=xp.DEFAULT_HORIZON)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--warmup", type=int, default=sim.DEFAULT_WARMUP)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="parameter sweep with CSV/SVG output")
    p.add_argument("--config", help="JSON file with SweepSpec fields; flags override it")
    p.add_argument("--preset", choices=sorted(xp.PRESETS))
    p.add_argument("--schemes", nargs="+")
    p.add_argument("--p1", nargs="+", type=float)
    p.add_argument("--p2", nargs="+", type=float)
    p.add_argument("--pairing", choices=("grid", "diagonal"))
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.add_argument("--axis", choices=("vary_p1", "vary_p2", "diagonal"))
    p.add_argument("--save-config", help="write the effective sweep spec as JSON")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="reproduce the AoI-versus-probability figures")
    p.add_argument("--out", default="figures")
    p.add_argument("--horizon", type=int, default=xp.DEFAULT_HORIZON)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OutputError as exc:
        print(f"{TOOL}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (_UsageError, ValueError, TypeError, DivergentChainError, sim.SimulationError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"{TOOL}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
