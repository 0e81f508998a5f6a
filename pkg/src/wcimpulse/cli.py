"""Command-line front end.

    wcimpulse steady-states --scenario model0
    wcimpulse verify --scenario model0+impulses --convergence
    wcimpulse simulate --config run.yaml --mu 0.1 --x0 0.25 0 --out runs/
    wcimpulse sweep --scenario coupled --jobs 2 --out sweep/
    wcimpulse show --scenario coupled > coupled.yaml

Exit codes: 0 success, 2 config error, 3 solver failure, 4 verification failed.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import attractors, limit, scenarios
from .hybrid import HybridTrajectory, simulate
from .model import NoConvergence, SteadyStateReport, find_steady_states
from .scenarios import ConfigError, ScenarioConfig

log = logging.getLogger("wcimpulse")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

CSV_HEADER = "t,E,I,e,i,segment,jump_kind"


def write_atomic(path, text: str) -> None:
    """Write the whole file or nothing: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _f(v: float) -> str:
    return repr(float(v))


def _g5(v: float) -> str:
    # rounding first avoids printing -0.00000
    return f"{round(v, 5) + 0.0:.5f}"


def trajectory_csv(traj: HybridTrajectory, failure: tuple[float, str] | None = None) -> str:
    """Rows per sample; the rows at a jump instant carry the jump kind on both sides."""
    lines = [CSV_HEADER]
    kinds_in = {k + 1: j.kind for k, j in enumerate(traj.jumps)}
    kinds_out = {k: j.kind for k, j in enumerate(traj.jumps)}
    for k, seg in enumerate(traj.segments):
        n = len(seg.t)
        for r in range(n):
            row = seg.x[r]
            vals = [_f(v) for v in row[:4]] + [""] * (4 - min(4, row.size))
            kind = ""
            if r == 0 and k in kinds_in:
                kind = kinds_in[k]
            elif r == n - 1 and k in kinds_out:
                kind = kinds_out[k]
            lines.append(",".join([_f(seg.t[r]), *vals, str(k), kind]))
    if failure is not None:
        t, msg = failure
        lines.append(f"{_f(t)},,,,,{len(traj.segments)},failure:{msg}")
    return "\n".join(lines) + "\n"


def steady_state_text(report: SteadyStateReport, pair: int) -> list[str]:
    lines = [f"[pair {pair}]", f"domain_bound = {report.domain_bound!r}", f"merge_tol = {report.merge_tol!r}",
             f"count = {len(report.points)}", f"stable = {len(report.stable)}"]
    for j, s in enumerate(report.points):
        ev = ", ".join(f"{v.real:.10g}{v.imag:+.10g}j" for v in s.eigenvalues)
        lines.append(f"state {j}: E={s.E:.10g} I={s.I:.10g} eigenvalues=({ev}) "
                     f"hurwitz={'true' if s.hurwitz else 'false'}")
    return lines


def _load(args) -> ScenarioConfig:
    if args.config:
        cfg = scenarios.load(args.config)
    else:
        cfg = scenarios.builtin(args.scenario)
    if getattr(args, "T", None) is not None:
        cfg = cfg.replace(T=args.T)
    return cfg


def _require_wc(cfg: ScenarioConfig, what: str):
    if cfg.system != scenarios.WILSON_COWAN:
        raise ConfigError(f"{what} needs a wilson-cowan scenario")


def cmd_steady_states(args) -> int:
    cfg = _load(args)
    _require_wc(cfg, "steady-states")
    lines = [f"scenario = {cfg.name}"]
    for k, p in enumerate(cfg.pairs):
        try:
            rep = find_steady_states(p, bound=args.bound)
        except NoConvergence as exc:
            print(f"error: pair {k}: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        lines += steady_state_text(rep, k)
    text = "\n".join(lines) + "\n"
    write_atomic(Path(args.out) / "steady_states.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def _convergence_table(cfg: ScenarioConfig, report, x0) -> tuple[list[str], bool, bool]:
    sched = cfg.schedule()
    z = limit.limit_solution(cfg.pairs[0], report, sched, x0, cfg.T)
    lines = ["[convergence]", f"x0 = {tuple(x0)}", f"layer_width = {cfg.layer_width!r}",
             "limit = " + " | ".join(f"({a:g}, {b:g}] -> ({_g5(s[0])}, {_g5(s[1])})" for (a, b), s in z.pieces[:4])
             + (" | ..." if len(z.pieces) > 4 else "")]
    metrics = []
    failed = False
    for mu in cfg.mu:
        system, _ = cfg.build(mu)
        try:
            traj = simulate(system, sched, x0, cfg.T, cfg.solver)
        except Exception as exc:  # noqa: BLE001 - reported as a failed cell
            lines.append(f"mu = {mu!r}: failure {type(exc).__name__}: {exc}")
            failed = True
            continue
        m = limit.convergence_metric(traj, z, cfg.layer_width)
        metrics.append(m)
        lines.append(f"mu = {mu!r}: metric = {m:.6e}")
    decreasing = all(b < a for a, b in zip(metrics, metrics[1:]))
    lines.append(f"strictly_decreasing = {'true' if decreasing else 'false'}")
    return lines, decreasing, failed


def cmd_verify(args) -> int:
    cfg = _load(args)
    _require_wc(cfg, "verify")
    try:
        report = find_steady_states(cfg.pairs[0], bound=args.bound)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    sched = cfg.schedule()
    cond = limit.check_conditions(report, sched, c2_tol=args.c2_tol)
    lines = [f"scenario = {cfg.name}"] + steady_state_text(report, 0)
    lines.append("[C1]")
    lines += [f"state {j}: {'pass' if ok else 'fail'}" for j, ok in enumerate(cond.c1_pass)]
    lines.append(f"[C2] tol = {args.c2_tol!r} (indices into the stable states)")
    stable = report.stable
    for e in cond.c2_map:
        lines.append(f"stable {e.source} ({_g5(stable[e.source].E)}, {_g5(stable[e.source].I)}) -> stable {e.target} "
                     f"({_g5(stable[e.target].E)}, {_g5(stable[e.target].I)}) residual={e.residual:.3e} "
                     f"{'pass' if e.passed else 'fail'}")
    lines.append("[C3] state mu radius max|K/mu| max|J/mu|")
    for r in cond.c3_samples:
        lines.append(f"{r.state} {r.mu:.0e} {r.radius:.0e} {r.max_k:.6e} {r.max_j:.6e}")
    lines += [f"stable {j}: {'pass' if ok else 'fail'}" for j, ok in enumerate(cond.c3_pass)]
    verdict = cond.passed
    code = EXIT_OK
    if args.convergence:
        if not cfg.initial_states or not cfg.mu:
            raise ConfigError("the convergence study needs mu values and an initial state")
        try:
            conv, decreasing, failed = _convergence_table(cfg, report, cfg.initial_states[0])
        except (limit.BasinUndetermined, ValueError) as exc:
            conv, decreasing, failed = [f"[convergence] not run: {exc}"], False, False
        lines += conv
        verdict = verdict and decreasing
        if failed:
            code = EXIT_SOLVER
    lines.append(f"verdict = {'pass' if verdict else 'fail'}")
    text = "\n".join(lines) + "\n"
    write_atomic(Path(args.out) / "verify.txt", text)
    sys.stdout.write(text)
    if code != EXIT_OK:
        return code
    return EXIT_OK if verdict else EXIT_VERIFY


def _pick(values, override, what):
    if override is not None:
        return override
    if len(values) != 1:
        raise ConfigError(f"scenario has {len(values)} {what} values; choose one on the command line")
    return values[0]


def _run_cell(cfg: ScenarioConfig, mu, x0):
    """Simulate one cell; returns (trajectory, failure or None)."""
    system, sched = cfg.build(mu)
    try:
        return simulate(system, sched, x0, cfg.T, cfg.solver), None
    except Exception as exc:  # noqa: BLE001 - solver failures become marker rows
        partial = getattr(exc, "partial", None)
        if partial is None:
            raise
        return partial, (float(getattr(exc, "t", math.nan)), f"{type(exc).__name__}: {exc}".replace(",", ";"))


def _end_summary(traj, failure):
    if not traj.segments:
        return "no samples"
    end = ", ".join(f"{v:.6g}" for v in traj.end)
    s = f"jumps={len(traj.jumps)} end_t={traj.segments[-1].t[-1]:.6g} end=({end})"
    if failure is not None:
        s += f" FAILED at t={failure[0]:.6g}: {failure[1]}"
    return s


def cmd_simulate(args) -> int:
    cfg = _load(args)
    mu = None
    if cfg.system == scenarios.WILSON_COWAN and (cfg.mu or args.mu is not None):
        mu = _pick(cfg.mu, args.mu, "mu")
    x0 = tuple(args.x0) if args.x0 is not None else _pick(cfg.initial_states, None, "initial state")
    if len(x0) != cfg.dim:
        raise ConfigError(f"initial state has {len(x0)} components, system has {cfg.dim}")
    traj, failure = _run_cell(cfg, mu, x0)
    name = args.name or "trajectory.csv"
    write_atomic(Path(args.out) / name, trajectory_csv(traj, failure))
    print(f"{cfg.name}: mu={mu!r} x0={x0} {_end_summary(traj, failure)}")
    return EXIT_SOLVER if failure else EXIT_OK


def _cell_job(payload):
    cfg, mu, x0 = payload
    return _run_cell(cfg, mu, x0)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    _require_wc(cfg, "sweep")
    mus = tuple(args.mu_list) if args.mu_list else cfg.mu
    if not mus:
        raise ConfigError("sweep needs at least one mu value")
    cells = [(mu, j, x0) for mu in mus for j, x0 in enumerate(cfg.states_for(mu))]
    if not cells:
        raise ConfigError("sweep needs initial states")
    payloads = [(cfg, mu, x0) for mu, _, x0 in cells]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_cell_job, payloads))
    else:
        results = [_cell_job(p) for p in payloads]

    out = Path(args.out)
    any_failed = False
    table = ["mu," + ",".join(attractors.CLASSES) + ",unclassified,failed_cells"]
    for mu in mus:
        trajs, failures = [], []
        for (m, j, x0), (traj, failure) in zip(cells, results):
            if m != mu:
                continue
            write_atomic(out / f"cell_mu{mu!r}_x{j}.csv", trajectory_csv(traj, failure))
            if failure is not None:
                failures.append((x0, failure[1]))
                any_failed = True
            else:
                trajs.append(traj)
        try:
            comps = attractors.analyze(trajs, cfg.classifier) if trajs else []
        except attractors.EmptyPostTransient as exc:
            raise ConfigError(str(exc)) from exc
        rep = attractors.AttractorReport(mu, comps, list(cfg.states_for(mu)), failures, cfg.classifier)
        write_atomic(out / f"attractors_mu{mu!r}.txt", rep.to_text())
        counts = rep.counts
        table.append(f"{mu!r}," + ",".join(str(counts.get(c, 0)) for c in attractors.CLASSES)
                     + f",{rep.unclassified},{len(failures)}")
    text = "\n".join(table) + "\n"
    write_atomic(out / "counts.csv", text)
    sys.stdout.write("# class counts (heuristic classifier)\n" + text)
    return EXIT_SOLVER if any_failed else EXIT_OK


def cmd_show(args) -> int:
    cfg = _load(args)
    sys.stdout.write(cfg.dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wcimpulse", description="Impulsive Wilson-Cowan toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", choices=sorted(scenarios.BUILTINS))
        src.add_argument("--config", help="scenario YAML file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--T", type=float, default=None, help="override the horizon")

    p = sub.add_parser("steady-states", help="equilibria, eigenvalues, Hurwitz flags")
    common(p)
    p.add_argument("--bound", type=float, default=1.0)
    p.set_defaults(func=cmd_steady_states)

    p = sub.add_parser("verify", help="check the convergence conditions")
    common(p)
    p.add_argument("--bound", type=float, default=1.0)
    p.add_argument("--c2-tol", type=float, default=limit.C2_TOL)
    p.add_argument("--convergence", action="store_true", help="append the metric table over the scenario's mu list")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="one trajectory to CSV")
    common(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--x0", type=float, nargs="+", default=None)
    p.add_argument("--name", default=None, help="CSV file name inside --out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="mu sweep with attractor classification")
    common(p)
    p.add_argument("--mu-list", type=float, nargs="+", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("show", help="print the scenario as YAML")
    common(p)
    p.set_defaults(func=cmd_show)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
