"""Guaranteed detectability of intermittent faults by moving-average T^2 charts.

Every condition here is driven by the whitened shift ``s = ||S^-1/2 xi f||`` and
the gain ``a = (N + 1) / (4 delta^2) * s^2``:

* disappearance of episode q is guaranteed detectable iff ``W <= tau_off``;
* appearance with ``W <= min(tau_off_prev, tau_on)`` iff ``s > 2 delta_W``;
* appearance with ``tau_on < W <= tau_off_prev`` iff ``s tau_on / W > 2 delta_W``;
* the whole episode is guaranteed detectable by some W iff
  ``a - 1 > N / min(tau_off_prev, tau_on, tau_off_next)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError, NotDetectableWithW, NotPFDetectable, WindowExceedsPrevQuiet
from .stat_core import ChartConfig, GaussianModel, control_limit

CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class IFParams:
    """One intermittent-fault episode, or lower bounds on its parameters.

    Durations are integer counts of sampling intervals.  ``tau_off_prev`` is the
    inactive duration before the episode and ``tau_off_next`` the one after it.
    """

    direction: tuple
    magnitude: float
    tau_on: int
    tau_off_prev: int
    tau_off_next: int
    is_lower_bound: bool = False

    def __post_init__(self):
        d = tuple(float(v) for v in np.asarray(self.direction, dtype=float).reshape(-1))
        object.__setattr__(self, "direction", d)
        if not self.magnitude > 0:
            raise DomainError(f"fault magnitude must be positive, got {self.magnitude}")
        if not any(d):
            raise DomainError("fault direction must be nonzero")
        for name in ("tau_on", "tau_off_prev", "tau_off_next"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def shift(self) -> np.ndarray:
        return np.asarray(self.direction) * self.magnitude

    @property
    def w_sharp(self) -> int:
        return optimal_window_sharp(self.tau_off_prev, self.tau_on, self.tau_off_next)


class AlarmDelays(NamedTuple):
    mu_delay: int
    nu_delay: int
    k_doublestar_offset: int


def _ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= CEIL_SLACK * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def _whitened(model: GaussianModel, vec) -> float:
    v = np.asarray(vec, dtype=float).reshape(-1)
    if v.shape[0] != model.dim:
        raise DimensionMismatch(f"expected a {model.dim}-vector, got length {v.shape[0]}")
    z = model.chol_inv @ v
    return float(math.sqrt(z @ z))


def whitened_shift(model: GaussianModel, params: IFParams) -> float:
    """Mahalanobis length sqrt((xi f)^T S^-1 (xi f)) of the fault step."""
    return _whitened(model, params.shift)


def _delta2(model: GaussianModel, alpha: float) -> float:
    return control_limit(model, ChartConfig(alpha, 1))


def _gain(model: GaussianModel, shift: float, alpha: float) -> float:
    # (N + 1) / (4 delta^2) * s^2
    return (model.n_train + 1) / (4.0 * _delta2(model, alpha)) * shift * shift


def disappearance_detectable(window: int, tau_off: int) -> bool:
    return window <= tau_off


def appearance_detectable(model: GaussianModel, params: IFParams, cfg: ChartConfig) -> bool:
    """Appearance check for one window length (requires ``W <= tau_off_prev``)."""
    w = cfg.window
    if w > params.tau_off_prev:
        raise WindowExceedsPrevQuiet(f"W={w} exceeds preceding inactive duration {params.tau_off_prev}")
    s = whitened_shift(model, params)
    two_delta_w = 2.0 * math.sqrt(control_limit(model, cfg))
    if w <= params.tau_on:
        return s > two_delta_w
    return s * params.tau_on / w > two_delta_w


def detectable_with_window(model: GaussianModel, params: IFParams, window: int, alpha: float) -> bool:
    """Per-window verdict: both disappearances and the appearance are guaranteed detectable."""
    if not (disappearance_detectable(window, params.tau_off_prev) and disappearance_detectable(window, params.tau_off_next)):
        return False
    return appearance_detectable(model, params, ChartConfig(alpha, window))


def if_detectable(model: GaussianModel, params: IFParams, alpha: float) -> bool:
    """Whether some window length makes the episode guaranteed detectable."""
    a = _gain(model, whitened_shift(model, params), alpha)
    return a - 1.0 > model.n_train / params.w_sharp


def _gt_ge_max(x: float, y: float, z: float) -> bool:
    # x > (>=) max{y, z}: strict against y when y dominates, non-strict against z otherwise
    if y >= z:
        return x > y
    return x >= z


class _WindowInequality:
    """The two-sided reciprocal inequality on 1/W for fixed fault parameters."""

    def __init__(self, model: GaussianModel, params: IFParams, alpha: float):
        n = model.n_train
        self.n = n
        self.a = _gain(model, whitened_shift(model, params), alpha)
        half = n / (2.0 * params.tau_on)
        self.root = (half + math.sqrt(half * half + self.a)) / (params.tau_on * self.a) if self.a > 0 else math.inf
        self.tau_off_min = min(params.tau_off_prev, params.tau_off_next)

    def holds(self, w: int) -> bool:
        x = 1.0 / w
        return (self.a - 1.0) / self.n > x and _gt_ge_max(x, self.root, 1.0 / self.tau_off_min)


def admissible_windows(model: GaussianModel, params: IFParams, alpha: float) -> range:
    """All window lengths satisfying the reciprocal window inequality, as a ``range``.

    The range is empty exactly when :func:`if_detectable` is false.
    """
    ineq = _WindowInequality(model, params, alpha)
    if ineq.a - 1.0 <= 0.0:
        return range(1, 1)
    lo = max(1, math.floor(ineq.n / (ineq.a - 1.0)) + 1)
    hi = min(ineq.tau_off_min, math.ceil(1.0 / ineq.root) - 1)
    # the closed forms can be off by one in floating point; settle the edges
    # against the predicate itself (the admissible set is an interval)
    lo_adj = next((w for w in range(max(1, lo - 2), lo + 3) if ineq.holds(w)), None)
    hi_adj = next((w for w in range(min(hi + 2, ineq.tau_off_min), max(hi - 3, 0), -1) if ineq.holds(w)), None)
    if lo_adj is None or hi_adj is None or lo_adj > hi_adj:
        return range(1, 1)
    return range(lo_adj, hi_adj + 1)


def alarm_delays(model: GaussianModel, params: IFParams, window: int, alpha: float) -> AlarmDelays:
    """Guaranteed appearance and disappearance alarm delays for an admissible window.

    ``mu_delay = ceil(sqrt(W (N + W) / (N + 1)) * 2 delta / s) - 1`` and
    ``nu_delay = W - 1``.  With lower-bound parameters these are upper bounds on
    the true delays.
    """
    if window not in admissible_windows(model, params, alpha):
        raise NotDetectableWithW(f"W={window} is not an admissible window for these fault parameters")
    mu_d = _mu_delay(model, whitened_shift(model, params), window, alpha)
    nu_d = window - 1
    assert mu_d <= min(window, params.tau_on) - 1, (mu_d, window, params.tau_on)
    return AlarmDelays(mu_d, nu_d, nu_d - mu_d)


def _mu_delay(model: GaussianModel, shift: float, window: int, alpha: float) -> int:
    n = model.n_train
    delta = math.sqrt(_delta2(model, alpha))
    x = math.sqrt(window * (n + window) / (n + 1)) * 2.0 * delta / shift
    return _ceil(x) - 1


@dataclass
class PFReport:
    """Permanent-fault specialisation: verdict, smallest admissible window and delays."""

    detectable: bool
    min_window: Optional[int]
    _model: GaussianModel = field(repr=False)
    _shift: float = field(repr=False)
    _alpha: float = field(repr=False)

    def delay(self, window: int) -> int:
        if not self.detectable or window < self.min_window:
            raise NotDetectableWithW(f"W={window} does not guarantee detection of this permanent fault")
        return _mu_delay(self._model, self._shift, window, self._alpha)


def pf_detectable(model: GaussianModel, direction, magnitude: float, alpha: float) -> PFReport:
    s = _whitened(model, np.asarray(direction, dtype=float) * magnitude)
    a = _gain(model, s, alpha)
    ok = (a - 1.0) / model.n_train > 0.0
    w_min = _smallest_window(model.n_train, a) if ok else None
    return PFReport(ok, w_min, model, s, alpha)


def _smallest_window(n: int, a: float) -> int:
    w = max(1, math.floor(n / (a - 1.0)) + 1)
    while w > 1 and (a - 1.0) / n > 1.0 / (w - 1):
        w -= 1
    while not (a - 1.0) / n > 1.0 / w:
        w += 1
    return w


def optimal_window_star(model: GaussianModel, direction, magnitude: float, alpha: float) -> int:
    """Smallest window that can guarantee detection of a fault of this direction and magnitude."""
    rep = pf_detectable(model, direction, magnitude, alpha)
    if not rep.detectable:
        raise NotPFDetectable("the fault is not guaranteed detectable with any window length")
    return rep.min_window


def optimal_window_sharp(tau_off_prev: int, tau_on: int, tau_off_next: int) -> int:
    for v in (tau_off_prev, tau_on, tau_off_next):
        if v < 1:
            raise DomainError("durations must be >= 1")
    return min(tau_off_prev, tau_on, tau_off_next)


@dataclass
class DetectabilityReport:
    detectable: bool
    admissible_windows: range
    delays: dict
    w_star: Optional[int]
    w_sharp: int
    # windows equal to min(tau_off_prev, tau_off_next), admitted by the non-strict branch
    boundary_windows: list = field(default_factory=list)

    @property
    def mu_delay(self) -> dict:
        return {w: d.mu_delay for w, d in self.delays.items()}

    @property
    def nu_delay(self) -> dict:
        return {w: d.nu_delay for w, d in self.delays.items()}

    @property
    def k_doublestar_offset(self) -> dict:
        return {w: d.k_doublestar_offset for w, d in self.delays.items()}

    def to_dict(self) -> dict:
        win = self.admissible_windows
        return {
            "detectable": self.detectable,
            "admissible_windows": [win.start, win.stop - 1] if len(win) else [],
            "w_star": self.w_star,
            "w_sharp": self.w_sharp,
            "boundary_windows": list(self.boundary_windows),
            "delays": {str(w): d._asdict() for w, d in self.delays.items()},
        }


def detectability_report(model: GaussianModel, params: IFParams, alpha: float) -> DetectabilityReport:
    wins = admissible_windows(model, params, alpha)
    delays = {w: alarm_delays(model, params, w, alpha) for w in wins}
    try:
        w_star = optimal_window_star(model, params.direction, params.magnitude, alpha)
    except NotPFDetectable:
        w_star = None
    edge = min(params.tau_off_prev, params.tau_off_next)
    return DetectabilityReport(
        detectable=if_detectable(model, params, alpha),
        admissible_windows=wins,
        delays=delays,
        w_star=w_star,
        w_sharp=params.w_sharp,
        boundary_windows=[w for w in wins if w == edge],
    )
