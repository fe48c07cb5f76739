"""Single-window online moving-average T^2 chart and alarm on/off extraction."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionMismatch
from .stat_core import ChartConfig, GaussianModel, control_limit, hotelling_t2, hotelling_t2_many

RESYNC_PERIOD = 1 << 16


class MovingChart:
    """MA-T^2 chart over the latest ``W`` samples.

    Time indices are 1-based: the first sample fed is ``k = 1`` and the first
    statistic is produced at ``k = W``.  The running window sum uses Neumaier
    compensated summation and is recomputed from the buffer every
    ``RESYNC_PERIOD`` steps.
    """

    def __init__(self, model: GaussianModel, cfg: ChartConfig, limit: Optional[float] = None):
        self.model = model
        self.cfg = cfg
        self.window = cfg.window
        self.limit = control_limit(model, cfg) if limit is None else float(limit)
        self._buf: deque = deque(maxlen=self.window)
        self._sum = np.zeros(model.dim)
        self._comp = np.zeros(model.dim)
        self.steps_seen = 0

    def _accumulate(self, v: np.ndarray) -> None:
        t = self._sum + v
        big = np.abs(self._sum) >= np.abs(v)
        self._comp += np.where(big, (self._sum - t) + v, (v - t) + self._sum)
        self._sum = t

    def _resync(self) -> None:
        self._sum = np.sum(np.asarray(self._buf), axis=0) if self._buf else np.zeros(self.model.dim)
        self._comp = np.zeros(self.model.dim)

    def window_sum(self) -> np.ndarray:
        return self._sum + self._comp

    def step(self, sample) -> Optional[tuple[float, bool]]:
        """Feed one sample; return ``(t2, alarm)`` once the window is full, else ``None``."""
        x = np.asarray(sample, dtype=float).reshape(-1)
        if x.shape[0] != self.model.dim:
            raise DimensionMismatch(f"expected a {self.model.dim}-vector, got length {x.shape[0]}")
        if len(self._buf) == self.window:
            self._accumulate(-self._buf[0])
        self._buf.append(x)
        self._accumulate(x)
        self.steps_seen += 1
        if self.steps_seen % RESYNC_PERIOD == 0:
            self._resync()
        if self.steps_seen < self.window:
            return None
        t2 = hotelling_t2(self.model, self.window_sum() / self.window)
        # T^2 equal to the limit is still in the acceptance region
        return t2, t2 > self.limit


def t2_series(model: GaussianModel, data, window: int) -> np.ndarray:
    """Batch statistic T^2_k(W) for k = W..n (array index 0 is time k = W)."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DimensionMismatch(f"expected an (n, {model.dim}) array, got shape {x.shape}")
    if x.shape[0] < window:
        return np.empty(0)
    csum = np.cumsum(np.vstack([np.zeros((1, model.dim)), x - model.mean_hat]), axis=0)
    means = (csum[window:] - csum[:-window]) / window + model.mean_hat
    return hotelling_t2_many(model, means)


@dataclass
class AlarmSequence:
    """Ordered alarm intervals ``[on, off)`` of one chart; ``off`` is ``None`` for an open alarm."""

    alarms: list = field(default_factory=list)

    def __post_init__(self):
        self.alarms = [(int(a), None if b is None else int(b)) for a, b in self.alarms]
        self.validate()

    def validate(self) -> None:
        prev_off = None
        for idx, (on, off) in enumerate(self.alarms):
            if prev_off is not None and not prev_off < on:
                raise ValueError(f"alarm {idx} starts at {on}, not after previous off time {prev_off}")
            if off is None:
                if idx != len(self.alarms) - 1:
                    raise ValueError("only the final alarm may be open")
            elif not on < off:
                raise ValueError(f"alarm {idx} has on={on} >= off={off}")
            prev_off = off

    def __len__(self):
        return len(self.alarms)

    def __iter__(self):
        return iter(self.alarms)

    def __getitem__(self, i):
        return self.alarms[i]

    def __eq__(self, other):
        if isinstance(other, AlarmSequence):
            return self.alarms == other.alarms
        return self.alarms == list(other)

    @property
    def is_open(self) -> bool:
        return bool(self.alarms) and self.alarms[-1][1] is None

    def to_list(self) -> list:
        return [list(a) for a in self.alarms]


def extract_alarms(flags: Iterable[bool], first_index: int = 1) -> AlarmSequence:
    """Turn a consecutive alarm-flag series into on/off times.

    ``on`` is the first alarming index after the previous ``off``; ``off`` is the
    first non-alarming index after ``on``.

    >>> extract_alarms([False, False, True, True, True, False, False]).alarms
    [(3, 6)]
    """
    out = []
    on = None
    for k, flag in enumerate(flags, start=first_index):
        if flag and on is None:
            on = k
        elif not flag and on is not None:
            out.append((on, k))
            on = None
    if on is not None:
        out.append((on, None))
    return AlarmSequence(out)
