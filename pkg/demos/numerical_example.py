"""Two-variable walkthrough: detectability, one seeded run of the chart bank, and scoring.

Run with ``python demos/numerical_example.py [seed]``.
"""

import sys

from ifdetect.bank import EXCLUDE_FIRST, BankState, audit_excursions, run
from ifdetect.detectability import IFParams, detectability_report
from ifdetect.simkit import EXAMPLE_DIRECTION, numerical_scenario
from ifdetect.stat_core import fit_model

ALPHA = 0.01


def main(seed: int = 0) -> None:
    sc = numerical_scenario(seed)
    model = fit_model(sc.train)
    params = IFParams(EXAMPLE_DIRECTION, 4.0, 10, 10, 10, is_lower_bound=True)

    rep = detectability_report(model, params, ALPHA)
    win = rep.admissible_windows
    print(f"admissible windows [{win.start}, {win.stop - 1}], W* = {rep.w_star}, W# = {rep.w_sharp}")
    for w, d in rep.delays.items():
        print(f"  W={w:2d}  mu_delay={d.mu_delay}  nu_delay={d.nu_delay}")

    out = run(BankState(model, params, ALPHA, order=EXCLUDE_FIRST), sc.faulty)
    print(f"\n{len(out.confirmed)} confirmed episodes, {out.passes} cleaning passes")
    for ep in out.confirmed:
        truth = next((e for e in sc.schedule if ep.contains(e.mu, e.nu)), None)
        mark = f"contains ({truth.mu}, {truth.nu})" if truth else "contains no true episode"
        print(f"  q={ep.q}: mu in [{ep.mu_lo}, {ep.mu_hi}], nu in [{ep.nu_lo}, {ep.nu_hi}]  {mark}")

    exc = audit_excursions(model, sc.clean, out.windows, ALPHA)
    n_exc = sum(len(v) for v in exc.values())
    print(f"\nfault-free window means outside their acceptance region: {n_exc} (window, time) pairs")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
