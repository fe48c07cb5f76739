"""Multi-window bank of MA-T^2 charts with alarm cleaning and fault-time inference.

All charts in the window set run side by side over the same stream.  The alarm
sequences are then cleaned jointly on a snapshot:

1. a gap shorter than the minimum disappearance duration is a missing alarm and
   is filled by merging its two neighbouring alarms;
2. a gap that meets no gap of some other window is filled as well;
3. a closed alarm shorter than the minimum appearance duration is deleted;
4. an alarm that meets no alarm of some other window is deleted.

Steps repeat until nothing changes.  Each surviving alarm of the longest chart
(``W#``) marks one episode; every window bounds its appearance and
disappearance times and the bounds are intersected across windows.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .detectability import AlarmDelays, IFParams, detectability_report
from .errors import ConfigurationError, InconsistentAlarms
from .monitor import AlarmSequence, MovingChart, extract_alarms, t2_series
from .stat_core import ChartConfig, GaussianModel

log = logging.getLogger(__name__)

MAX_PASSES = 100
COMPENSATE_FIRST = "compensate-first"
EXCLUDE_FIRST = "exclude-first"


def min_alarm_durations(window: int, delays: AlarmDelays, params: IFParams) -> tuple[int, int, int]:
    """Shortest alarm durations a guaranteed-detectable episode can produce.

    Args:
        window: chart window length.
        delays: guaranteed delays of that chart.
        params: fault parameters (or their lower bounds).

    Returns:
        ``(min_app, min_disapp, min_prev_disapp)``: the minimum length of the
        alarm raised by the episode, of the quiet gap after it, and of the quiet
        gap before it.
    """
    mu_d, nu_d = delays.mu_delay, delays.nu_delay
    tau_on = params.tau_on
    min_app = max(tau_on + nu_d - 2 * mu_d, window - mu_d, tau_on - mu_d, 1)
    min_disapp = max(params.tau_off_next - nu_d, 1)
    min_prev_disapp = max(params.tau_off_prev - nu_d, 1)
    return min_app, min_disapp, min_prev_disapp


# ---------------------------------------------------------------- state


class BankState:
    """Charts, raw and cleaned alarm sequences and delays for a window set.

    Alarms are stored as ``[on, off]`` pairs with ``off = None`` for an alarm
    still active at the end of the data seen so far.
    """

    def __init__(
        self,
        model: GaussianModel,
        params: IFParams,
        alpha: float,
        windows: Optional[range] = None,
        order: str = COMPENSATE_FIRST,
        record_series: bool = False,
    ):
        if order not in (COMPENSATE_FIRST, EXCLUDE_FIRST):
            raise ConfigurationError(f"unknown cleaning order {order!r}")
        report = detectability_report(model, params, alpha)
        admissible = report.admissible_windows
        if windows is None:
            windows = admissible
        windows = sorted(set(int(w) for w in windows))
        if not windows:
            raise ConfigurationError("the admissible window set is empty for these fault parameters")
        outside = [w for w in windows if w not in admissible]
        if outside:
            raise ConfigurationError(f"windows {outside} are not admissible (admissible: {list(admissible)})")
        self.model = model
        self.params = params
        self.alpha = alpha
        self.order = order
        self.windows = windows
        self.report = report
        self.delays = {w: report.delays[w] for w in windows}
        self.durations = {w: min_alarm_durations(w, self.delays[w], params) for w in windows}
        self.charts = {w: MovingChart(model, ChartConfig(alpha, w)) for w in windows}
        self.flags = {w: [] for w in windows}
        self.record_series = record_series
        self.series = {w: [] for w in windows}
        self.alarms = {w: [] for w in windows}
        self.passes = 0
        self.q = 0
        self.n_seen = 0

    @property
    def w_sharp(self) -> int:
        return self.windows[-1]

    def limit(self, w: int) -> float:
        return self.charts[w].limit

    def step(self, sample) -> dict:
        """Feed one sample to every chart; returns ``{W: (t2, alarm)}`` for the full windows."""
        self.n_seen += 1
        out = {}
        for w, chart in self.charts.items():
            res = chart.step(sample)
            if res is None:
                continue
            self.flags[w].append(res[1])
            if self.record_series:
                self.series[w].append(res[0])
            out[w] = res
        return out

    def feed(self, stream) -> None:
        for x in np.asarray(stream, dtype=float):
            self.step(x)

    def snapshot(self) -> None:
        """Reload the working alarm sequences from the raw chart flags."""
        self.alarms = {
            w: [list(a) for a in extract_alarms(self.flags[w], first_index=w)] for w in self.windows
        }
        self.passes = 0

    def raw_alarms(self) -> dict:
        return {w: extract_alarms(self.flags[w], first_index=w) for w in self.windows}

    def cleaned(self) -> dict:
        return {w: AlarmSequence([tuple(a) for a in self.alarms[w]]) for w in self.windows}


# ---------------------------------------------------------------- interval helpers


def _end(off) -> float:
    return math.inf if off is None else off


def _meets(a_lo, a_hi, b_lo, b_hi) -> bool:
    # half-open [a_lo, a_hi) and [b_lo, b_hi)
    return max(a_lo, b_lo) < min(a_hi, b_hi)


def _gaps(alarms: list) -> list:
    """Quiet intervals ``[off_{i-1}, on_i)`` including the leading and trailing ones."""
    gaps = []
    prev = -math.inf
    for on, off in alarms:
        gaps.append((prev, on))
        prev = _end(off)
    if prev != math.inf:
        gaps.append((prev, math.inf))
    return gaps


def _merge_before(alarms: list, idx: set) -> list:
    # fill the gap in front of each alarm index in idx (idx >= 1)
    out = []
    for i, a in enumerate(alarms):
        if i in idx and out:
            out[-1][1] = a[1]
        else:
            out.append(list(a))
    return out


def _step1(state: BankState) -> bool:
    changed = False
    for w in state.windows:
        _, _, min_gap = state.durations[w]
        # both neighbouring quiet durations are bounded below by the shorter one
        min_gap = min(min_gap, state.durations[w][1])
        al = state.alarms[w]
        bad = {i for i in range(1, len(al)) if al[i][0] - al[i - 1][1] < min_gap}
        if bad:
            log.debug("W=%d: filling %d short gap(s)", w, len(bad))
            state.alarms[w] = _merge_before(al, bad)
            changed = True
    return changed


def _step2(state: BankState) -> bool:
    gaps = {w: _gaps(state.alarms[w]) for w in state.windows}
    todo = {}
    for w in state.windows:
        al = state.alarms[w]
        bad = set()
        for i in range(1, len(al)):
            lo, hi = al[i - 1][1], al[i][0]
            for w2 in state.windows:
                if w2 != w and not any(_meets(lo, hi, g0, g1) for g0, g1 in gaps[w2]):
                    bad.add(i)
                    break
        if bad:
            todo[w] = bad
    for w, bad in todo.items():
        log.debug("W=%d: filling %d gap(s) unmatched by other windows", w, len(bad))
        state.alarms[w] = _merge_before(state.alarms[w], bad)
    return bool(todo)


def compensate_missing(state: BankState) -> BankState:
    """Fill quiet gaps that a guaranteed-detectable episode train cannot produce."""
    _step1(state)
    _step2(state)
    return state


def _step3(state: BankState) -> bool:
    changed = False
    for w in state.windows:
        min_app = state.durations[w][0]
        al = state.alarms[w]
        keep = [a for a in al if a[1] is None or a[1] - a[0] >= min_app]
        if len(keep) != len(al):
            log.debug("W=%d: deleting %d short alarm(s)", w, len(al) - len(keep))
            state.alarms[w] = keep
            changed = True
    return changed


def _step4(state: BankState) -> bool:
    todo = {}
    for w in state.windows:
        bad = set()
        for i, (on, off) in enumerate(state.alarms[w]):
            for w2 in state.windows:
                if w2 != w and not any(_meets(on, _end(off), b0, _end(b1)) for b0, b1 in state.alarms[w2]):
                    bad.add(i)
                    break
        if bad:
            todo[w] = bad
    for w, bad in todo.items():
        log.debug("W=%d: deleting %d alarm(s) unmatched by other windows", w, len(bad))
        state.alarms[w] = [a for i, a in enumerate(state.alarms[w]) if i not in bad]
    return bool(todo)


def exclude_false(state: BankState) -> BankState:
    """Delete alarms that a guaranteed-detectable episode train cannot produce."""
    _step3(state)
    _step4(state)
    return state


def clean(state: BankState) -> bool:
    """Apply the four cleaning steps to a fixpoint; returns False if the pass cap was hit."""
    phases = [(_step1, _step2), (_step3, _step4)]
    if state.order == EXCLUDE_FIRST:
        phases.reverse()
    for n in range(1, MAX_PASSES + 1):
        changed = False
        for phase in phases:
            for fn in phase:
                changed |= fn(state)
        state.passes = n
        if not changed:
            return True
    log.warning("alarm cleaning did not settle within %d passes", MAX_PASSES)
    return False


# ---------------------------------------------------------------- inference


@dataclass
class WindowInterval:
    """Bounds on one episode's appearance and disappearance from a single chart.

    ``None`` marks a side that this chart cannot bound.
    """

    window: int
    mu_lo: Optional[int]
    mu_hi: Optional[int]
    nu_lo: Optional[int]
    nu_hi: Optional[int]
    alarms: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alarms": [list(a) for a in self.alarms],
            "interval": {"mu": [self.mu_lo, self.mu_hi], "nu": [self.nu_lo, self.nu_hi]},
            "flags": list(self.flags),
        }


def _max(*vals):
    v = [x for x in vals if x is not None]
    return max(v) if v else None


def _min(*vals):
    v = [x for x in vals if x is not None]
    return min(v) if v else None


def _check(lo, hi, what: str, where: str) -> None:
    if lo is not None and hi is not None and lo > hi:
        raise InconsistentAlarms(f"{where}: empty {what} interval [{lo}, {hi}]")


def infer_alarm(alarms: list, i: int, delays: AlarmDelays, window: int) -> WindowInterval:
    """Bounds implied by alarm ``i`` of a cleaned sequence and its neighbours.

    With ``prev`` the alarm before and ``next`` the alarm after::

        max(on - mu_d, prev_off + 1)       <= mu <= min(on, off - mu_d - 1)
        max(on + 1 + max(mu_d - nu_d, 0),
            off - nu_d)                    <= nu <= min(off + min(mu_d - nu_d, 0), next_on - W)

    Raises:
        InconsistentAlarms: a lower bound exceeds its upper bound.
    """
    mu_d, nu_d = delays.mu_delay, delays.nu_delay
    on, off = alarms[i]
    prev = alarms[i - 1] if i > 0 else None
    nxt = alarms[i + 1] if i + 1 < len(alarms) else None
    flags = []
    if prev is None:
        flags.append("no_preceding_alarm")
    if off is None:
        flags.append("open_alarm")
    elif nxt is None:
        flags.append("no_following_alarm")
    mu_lo = _max(on - mu_d, None if prev is None else prev[1] + 1)
    mu_hi = _min(on, None if off is None else off - mu_d - 1)
    nu_lo = _max(on + 1 + max(mu_d - nu_d, 0), None if off is None else off - nu_d)
    nu_hi = _min(
        None if off is None else off + min(mu_d - nu_d, 0),
        None if nxt is None else nxt[0] - window,
    )
    where = f"W={window}, alarm [{on}, {off})"
    _check(mu_lo, mu_hi, "appearance", where)
    _check(nu_lo, nu_hi, "disappearance", where)
    used = [a for a in (prev, alarms[i], nxt) if a is not None]
    return WindowInterval(window, mu_lo, mu_hi, nu_lo, nu_hi, [tuple(a) for a in used], flags)


def infer_times(state: BankState, window: int) -> list:
    """Per-alarm bounds for every alarm in the cleaned sequence of one chart."""
    al = state.alarms[window]
    return [infer_alarm(al, i, state.delays[window], window) for i in range(len(al))]


@dataclass
class EpisodeInference:
    q: int
    mu_lo: Optional[int]
    mu_hi: Optional[int]
    nu_lo: Optional[int]
    nu_hi: Optional[int]
    per_window: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    confirmed: bool = True

    def contains(self, mu: int, nu: int) -> bool:
        """Whether ``(mu, nu)`` lies inside both inferred intervals (``None`` is unbounded)."""
        def inside(x, lo, hi):
            return (lo is None or lo <= x) and (hi is None or x <= hi)

        return inside(mu, self.mu_lo, self.mu_hi) and inside(nu, self.nu_lo, self.nu_hi)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "mu_lo": self.mu_lo,
            "mu_hi": self.mu_hi,
            "nu_lo": self.nu_lo,
            "nu_hi": self.nu_hi,
            "confirmed": self.confirmed,
            "per_window": {str(w): iv.to_dict() for w, iv in sorted(self.per_window.items())},
            "flags": list(self.flags),
        }


def intersect_inferences(per_window: dict, q: int = 0) -> EpisodeInference:
    """Coordinate-wise intersection of per-window bounds.

    Args:
        per_window: mapping ``W -> WindowInterval``.
        q: episode index to stamp on the result.

    Raises:
        InconsistentAlarms: the intersection is empty.
    """
    ivs = list(per_window.values())
    mu_lo = _max(*(iv.mu_lo for iv in ivs))
    mu_hi = _min(*(iv.mu_hi for iv in ivs))
    nu_lo = _max(*(iv.nu_lo for iv in ivs))
    nu_hi = _min(*(iv.nu_hi for iv in ivs))
    _check(mu_lo, mu_hi, "appearance", f"episode {q}")
    _check(nu_lo, nu_hi, "disappearance", f"episode {q}")
    flags = sorted({f for iv in ivs for f in iv.flags})
    return EpisodeInference(q, mu_lo, mu_hi, nu_lo, nu_hi, dict(per_window), flags)


def _partner(alarms: list, on: int, off) -> Optional[int]:
    # index of the alarm overlapping [on, off) the most
    best, best_len = None, 0.0
    for j, (b0, b1) in enumerate(alarms):
        lo, hi = max(on, b0), min(_end(off), _end(b1))
        if lo < hi and (hi - lo) > best_len:
            best, best_len = j, hi - lo
    return best


@dataclass
class BankReport:
    episodes: list
    cleaned: dict
    raw: dict
    windows: list
    delays: dict
    passes: int
    settled: bool
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "windows": list(self.windows),
            "delays": {str(w): d._asdict() for w, d in self.delays.items()},
            "cleaning_passes": self.passes,
            "cleaning_settled": self.settled,
            "raw_alarms": {str(w): s.to_list() for w, s in self.raw.items()},
            "cleaned_alarms": {str(w): s.to_list() for w, s in self.cleaned.items()},
            "episodes": [e.to_dict() for e in self.episodes],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @property
    def confirmed(self) -> list:
        return [e for e in self.episodes if e.confirmed]


def _episodes(state: BankState, settled: bool) -> list:
    w_sharp = state.w_sharp
    min_app = state.durations[w_sharp][0]
    out = []
    for i, (on, off) in enumerate(state.alarms[w_sharp]):
        q = len(out) + 1
        per_window = {}
        flags = [] if settled else ["cleaning_not_settled"]
        confirmed = off is not None and off - on >= min_app
        if not confirmed:
            flags.append("unconfirmed")
        inconsistent = False
        for w in state.windows:
            j = i if w == w_sharp else _partner(state.alarms[w], on, off)
            if j is None:
                flags.append(f"no_partner_alarm_W{w}")
                continue
            try:
                per_window[w] = infer_alarm(state.alarms[w], j, state.delays[w], w)
            except InconsistentAlarms as exc:
                log.warning("episode %d: %s", q, exc)
                flags.append(f"inconsistent_W{w}")
                inconsistent = True
        try:
            ep = intersect_inferences(per_window, q)
        except InconsistentAlarms as exc:
            log.warning("%s", exc)
            inconsistent = True
            ep = EpisodeInference(q, None, None, None, None, per_window, [])
        ep.flags = sorted(set(ep.flags) | set(flags) | ({"inconsistent_alarms"} if inconsistent else set()))
        ep.confirmed = confirmed
        out.append(ep)
    state.q = sum(e.confirmed for e in out)
    return out


def run(bank: BankState, stream=None) -> BankReport:
    """Feed ``stream`` (if given), clean a snapshot of all alarm sequences and infer episodes.

    Deterministic for a given stream and configuration.  Inconsistent episodes are
    flagged and reported rather than aborting the run.
    """
    if stream is not None:
        bank.feed(stream)
    bank.snapshot()
    settled = clean(bank)
    episodes = _episodes(bank, settled)
    return BankReport(
        episodes=episodes,
        cleaned=bank.cleaned(),
        raw=bank.raw_alarms(),
        windows=list(bank.windows),
        delays=dict(bank.delays),
        passes=bank.passes,
        settled=settled,
        n_samples=bank.n_seen,
    )


def audit_excursions(model: GaussianModel, clean_stream, windows, alpha: float) -> dict:
    """Times ``k`` at which the fault-free window mean leaves its acceptance region.

    Only usable when the fault-free stream is known (simulation); an empty result
    for every window means the cleaning and inference guarantees apply.
    """
    out = {}
    for w in windows:
        t2 = t2_series(model, clean_stream, w)
        lim = MovingChart(model, ChartConfig(alpha, w)).limit
        out[w] = [int(k) + w for k in np.flatnonzero(t2 > lim)]
    return out
