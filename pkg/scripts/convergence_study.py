"""Distance to the singular limit as mu shrinks, for one scenario and initial state.

    python scripts/convergence_study.py --scenario model0+impulses --out runs/convergence
"""

import argparse
import time
from pathlib import Path

from wcimpulse import limit, scenarios
from wcimpulse.hybrid import simulate
from wcimpulse.model import find_steady_states


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="model0+impulses", choices=sorted(scenarios.BUILTINS))
    ap.add_argument("--mu", type=float, nargs="+", default=None)
    ap.add_argument("--x0", type=float, nargs=2, default=None)
    ap.add_argument("--layers", type=float, nargs="+", default=[0.02, 0.05, 0.1])
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    sc = scenarios.builtin(args.scenario)
    mus = args.mu or sc.mu
    x0 = tuple(args.x0) if args.x0 else sc.initial_states[0]
    pair = sc.pairs[0]
    sched = sc.schedule()
    z = limit.limit_solution(pair, find_steady_states(pair), sched, x0, sc.T)
    print(f"# {sc.name}, x0 = {x0}, limit starts in stable state {z.origin_domain}")

    rows = ["mu," + ",".join(f"metric_delta{d!r}" for d in args.layers) + ",seconds"]
    for mu in mus:
        t0 = time.perf_counter()
        system, _ = sc.build(mu)
        tr = simulate(system, sched, x0, sc.T, sc.solver)
        vals = [limit.convergence_metric(tr, z, d) for d in args.layers]
        dt = time.perf_counter() - t0
        rows.append(f"{mu!r}," + ",".join(f"{v:.6e}" for v in vals) + f",{dt:.2f}")
        print(rows[-1])
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "convergence.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
