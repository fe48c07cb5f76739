"""Closed-loop reactor walkthrough: steady state, a flow-sensor fault train, and the bank verdict.

Run with ``python demos/cstr_walkthrough.py [seed]``.
"""

import sys

import numpy as np

from ifdetect.bank import EXCLUDE_FIRST, BankState, run
from ifdetect.detectability import IFParams, detectability_report
from ifdetect.simkit import CSTR_FAULT_DIRECTION, CstrConfig, cstr_scenario, cstr_simulate, cstr_steady_state
from ifdetect.stat_core import fit_model

ALPHA = 0.01
NAMES = ("C_A", "T", "T_c", "q")


def main(seed: int = 0) -> None:
    cfg = CstrConfig()
    ca, t = cstr_steady_state(cfg)
    x0 = cstr_simulate(cfg, 1, 0, zero_noise=True)[0]
    print(f"steady state C_A = {ca:.4f}, T = {t:.2f}")
    print("measured at steady state: " + ", ".join(f"{n}={v:.4g}" for n, v in zip(NAMES, x0)))

    sc = cstr_scenario(seed, cfg)
    model = fit_model(sc.train)
    print("training std: " + ", ".join(f"{n}={v:.3g}" for n, v in zip(NAMES, np.sqrt(np.diag(model.cov_hat)))))

    params = IFParams(CSTR_FAULT_DIRECTION, 4.0, 10, 10, 10, is_lower_bound=True)
    rep = detectability_report(model, params, ALPHA)
    win = rep.admissible_windows
    print(f"admissible windows [{win.start}, {win.stop - 1}], W* = {rep.w_star}, W# = {rep.w_sharp}")

    out = run(BankState(model, params, ALPHA, order=EXCLUDE_FIRST), sc.faulty)
    hits = sum(any(c.contains(e.mu, e.nu) for c in out.confirmed) for e in sc.schedule)
    print(f"{len(out.confirmed)} confirmed episodes, {hits}/{len(sc.schedule)} true episodes contained")
    for e in sc.schedule:
        print(f"  truth mu={e.mu} nu={e.nu} f={e.magnitude:.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
