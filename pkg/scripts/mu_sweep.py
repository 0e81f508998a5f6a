"""Attractor class counts per mu, with a plateau check over the classifier knobs.

    python scripts/mu_sweep.py --out runs/sweep
"""

import argparse
import dataclasses
import itertools
from pathlib import Path

from wcimpulse import attractors, scenarios


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="coupled", choices=sorted(scenarios.BUILTINS))
    ap.add_argument("--mu", type=float, nargs="+", default=None)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.02, 0.035, 0.05, 0.065, 0.08])
    ap.add_argument("--cuts", type=float, nargs="+", default=[20.0, 30.0, 40.0])
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    sc = scenarios.builtin(args.scenario)
    rows = ["mu,transient_cut,merge_radius," + ",".join(attractors.CLASSES) + ",unclassified"]
    for mu in args.mu or sc.mu:
        trajs = {}
        (rep,) = attractors.mu_sweep(sc.build, [mu], sc.states_for(mu), sc.T, sc.classifier, sc.solver,
                                     on_trajectory=lambda m, j, tr: trajs.__setitem__(j, tr))
        print(rep.to_text())
        runs = [trajs[j] for j in sorted(trajs)]
        seen = set()
        for cut, r in itertools.product(args.cuts, args.radii):
            cfg = dataclasses.replace(sc.classifier, transient_cut=cut, merge_radius=r)
            comps = attractors.analyze(runs, cfg)
            counts = attractors.AttractorReport(mu, comps, []).counts
            unclassified = sum(c.cls == attractors.UNCLASSIFIED for c in comps)
            seen.add((tuple(sorted(counts.items())), unclassified))
            rows.append(f"{mu!r},{cut!r},{r!r}," + ",".join(str(counts.get(c, 0)) for c in attractors.CLASSES)
                        + f",{unclassified}")
        print(f"# mu = {mu!r}: {'plateau' if len(seen) == 1 else 'counts vary'} over {len(args.cuts)} cuts "
              f"x {len(args.radii)} radii\n")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "plateau.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
