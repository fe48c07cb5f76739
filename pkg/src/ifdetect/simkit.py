"""Ground-truth generators: Gaussian streams, intermittent-fault injection and a closed-loop CSTR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import IntegrationDiverged, OverlappingEpisodes, SingularCovariance

# two-variable process used by the numerical example
EXAMPLE_MEAN = (6.0, 4.0)
EXAMPLE_COV = ((3.0, 2.6), (2.6, 4.0))
EXAMPLE_DIRECTION = (0.2425, 0.9701)


def gen_gaussian_stream(mean, cov, n: int, seed) -> np.ndarray:
    """``n`` independent draws from N(mean, cov) using a Cholesky factor of ``cov``."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(f"covariance is not positive definite: {exc}") from exc
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, mean.shape[0]))
    return mean + z @ chol.T


class Episode(NamedTuple):
    mu: int
    nu: int
    direction: tuple
    magnitude: float


@dataclass
class FaultSchedule:
    """Ordered fault episodes; the fault is active on samples ``mu <= k < nu`` (1-based)."""

    episodes: list = field(default_factory=list)

    def __post_init__(self):
        eps = []
        for e in self.episodes:
            mu, nu, d, f = e
            eps.append(Episode(int(mu), int(nu), tuple(float(v) for v in d), float(f)))
        self.episodes = eps
        prev_nu = None
        for e in eps:
            if not e.mu < e.nu:
                raise OverlappingEpisodes(f"episode appears at {e.mu} but disappears at {e.nu}")
            if prev_nu is not None and not prev_nu < e.mu:
                raise OverlappingEpisodes(f"episode at {e.mu} starts before the previous one ended ({prev_nu})")
            if e.magnitude <= 0:
                raise ValueError("fault magnitude must be positive")
            prev_nu = e.nu

    def __len__(self):
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    def durations(self):
        """Active durations and the inactive durations between consecutive episodes."""
        on = [e.nu - e.mu for e in self.episodes]
        off = [b.mu - a.nu for a, b in zip(self.episodes, self.episodes[1:])]
        return on, off


def inject_faults(stream, schedule: FaultSchedule) -> np.ndarray:
    """Add ``direction * magnitude`` to every sample inside each episode."""
    x = np.array(stream, dtype=float, copy=True)
    n, p = x.shape
    for e in schedule:
        if e.mu < 1 or e.nu - 1 > n:
            raise ValueError(f"episode [{e.mu}, {e.nu}) lies outside a stream of length {n}")
        if len(e.direction) != p:
            raise ValueError(f"fault direction has length {len(e.direction)}, stream has {p} variables")
        x[e.mu - 1 : e.nu - 1] += np.asarray(e.direction) * e.magnitude
    return x


def fault_signal(n: int, p: int, schedule: FaultSchedule) -> np.ndarray:
    return inject_faults(np.zeros((n, p)), schedule)


def random_schedule(
    rng: np.random.Generator,
    n_episodes: int,
    first_mu: int,
    direction,
    magnitude_range=(4.0, 5.0),
    tau_on_range=(15, 26),
    tau_off_range=(15, 26),
) -> tuple[FaultSchedule, int]:
    """Draw episodes whose magnitudes and durations respect the given lower bounds.

    Returns the schedule and the stream length, which ends one inactive duration
    after the final episode disappears.
    """
    eps = []
    mu = first_mu
    for _ in range(n_episodes):
        tau_on = int(rng.integers(tau_on_range[0], tau_on_range[1] + 1))
        tau_off = int(rng.integers(tau_off_range[0], tau_off_range[1] + 1))
        f = float(rng.uniform(*magnitude_range))
        eps.append((mu, mu + tau_on, direction, f))
        mu = mu + tau_on + tau_off
    return FaultSchedule(eps), mu - 1


def acceptance_edge_stream(model, window: int, shift, signs, alpha: float, shrink: float = 1e-9) -> np.ndarray:
    """Fault-free samples whose ``window``-means sit just inside the acceptance region.

    For ``k >= window`` the window mean ending at ``k`` equals
    ``mean_hat + signs[k-1] * (1 - shrink) * delta_W * shift / ||S^-1/2 shift||``,
    i.e. it is pushed along the fault direction (sign +1), against it (-1) or
    left at the mean (0).  These are the extreme fault-free fluctuations the
    detection guarantees must survive.

    Args:
        model: trained Gaussian model providing ``mean_hat`` and ``S``.
        window: window length ``W`` whose acceptance region is targeted.
        shift: fault step ``xi * f`` defining the direction.
        signs: one entry in {-1, 0, 1} per sample.
        alpha: significance level of the chart.
    """
    from .stat_core import ChartConfig, control_limit

    signs = np.asarray(signs, dtype=float)
    shift = np.asarray(shift, dtype=float)
    z = model.chol_inv @ shift
    unit = shift / math.sqrt(z @ z)
    edge = (1.0 - shrink) * math.sqrt(control_limit(model, ChartConfig(alpha, window))) * unit
    means = model.mean_hat + signs[:, None] * edge
    x = np.empty_like(means)
    x[:window] = means[window - 1]
    for k in range(window, len(x)):
        x[k] = x[k - window] + window * (means[k] - means[k - 1])
    return x


class Scenario(NamedTuple):
    train: np.ndarray
    clean: np.ndarray
    faulty: np.ndarray
    schedule: FaultSchedule


def numerical_scenario(
    seed,
    n_train: int = 5000,
    n_episodes: int = 7,
    first_mu: int = 201,
    **schedule_kw,
) -> Scenario:
    """Seeded regeneration of the two-variable intermittent-fault experiment."""
    ss = np.random.SeedSequence(seed)
    s_train, s_test, s_sched = ss.spawn(3)
    schedule, n_test = random_schedule(
        np.random.default_rng(s_sched), n_episodes, first_mu, EXAMPLE_DIRECTION, **schedule_kw
    )
    train = gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, n_train, s_train)
    clean = gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, n_test, s_test)
    return Scenario(train, clean, inject_faults(clean, schedule), schedule)


# --------------------------------------------------------------------------- CSTR


@dataclass(frozen=True)
class CstrConfig:
    """Closed-loop CSTR settings.

    Time is in minutes, concentrations in mol/L, temperatures in K, flow in L/min.
    Physical defaults are the classic first-order exothermic reactor; the two PI
    loops hold ``T`` with the coolant temperature and ``C_A`` with the feed flow.
    """

    q_nominal: float = 100.0  # L/min
    volume: float = 100.0  # L
    c_af: float = 1.0  # mol/L
    t_feed: float = 350.0  # K
    k0: float = 7.2e10  # 1/min
    e_over_r: float = 8750.0  # K
    minus_delta_h: float = 5.0e4  # J/mol
    rho: float = 1000.0  # g/L
    cp: float = 0.239  # J/(g K)
    ua: float = 5.0e4  # J/(min K)
    tc_nominal: float = 300.0  # K
    # PI on T via T_c, and on C_A via q
    kc_temp: float = 1.0  # K/K
    ti_temp: float = 10.0  # min
    kc_conc: float = 100.0  # (L/min)/(mol/L)
    ti_conc: float = 10.0  # min
    # process disturbances on the two state derivatives, held over each sampling interval
    v1_std: float = 0.001  # mol/(L min)
    v2_std: float = 0.1  # K/min
    # sensor noise on the measured [C_A, T, T_c, q]
    meas_std: tuple = (0.002, 0.1, 0.1, 1.15)
    sample_interval: float = 0.5  # min (30 s)
    substeps: int = 10

    def __post_init__(self):
        phys = ("q_nominal", "volume", "c_af", "t_feed", "k0", "e_over_r", "minus_delta_h", "rho", "cp", "ua", "tc_nominal")
        for name in phys:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.substeps < 10:
            raise ValueError("need at least 10 integrator substeps per sampling interval")


def _cstr_rhs(cfg: CstrConfig, ca: float, t: float, tc: float, q: float, v1: float, v2: float):
    r = cfg.k0 * math.exp(-cfg.e_over_r / t) * ca
    dca = q / cfg.volume * (cfg.c_af - ca) - r + v1
    dt = (
        q / cfg.volume * (cfg.t_feed - t)
        + cfg.minus_delta_h / (cfg.rho * cfg.cp) * r
        + cfg.ua / (cfg.volume * cfg.rho * cfg.cp) * (tc - t)
        + v2
    )
    return dca, dt


def cstr_steady_state(cfg: CstrConfig, guess=(0.9, 320.0)) -> tuple[float, float]:
    """Open-loop steady state at nominal inputs (Newton iteration with a numerical Jacobian)."""
    x = np.array(guess, dtype=float)
    for _ in range(100):
        f = np.array(_cstr_rhs(cfg, x[0], x[1], cfg.tc_nominal, cfg.q_nominal, 0.0, 0.0))
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (np.array(_cstr_rhs(cfg, xp[0], xp[1], cfg.tc_nominal, cfg.q_nominal, 0.0, 0.0)) - f) / h
        dx = np.linalg.solve(jac, -f)
        x += dx
        if np.all(np.abs(dx) <= 1e-13 * np.maximum(1.0, np.abs(x))):
            break
    return float(x[0]), float(x[1])


def cstr_simulate(
    cfg: CstrConfig,
    n_steps: int,
    seed,
    sensor_fault_schedule: Optional[FaultSchedule] = None,
    zero_noise: bool = False,
) -> np.ndarray:
    """Simulate the closed-loop reactor and return measured ``[C_A, T, T_c, q]`` per sample.

    The two ODEs are integrated with fixed-step RK4; disturbances ``v1, v2`` and the
    PI outputs are held constant over each sampling interval.  Sensor faults (a
    schedule over the 4 measured variables) are added to the measurements only.
    """
    rng = np.random.default_rng(seed)
    ca_sp, t_sp = cstr_steady_state(cfg)
    ca, t = ca_sp, t_sp
    h = cfg.sample_interval / cfg.substeps
    ts = cfg.sample_interval
    int_t = int_c = 0.0
    if zero_noise:
        dist = np.zeros((n_steps, 2))
        meas = np.zeros((n_steps, 4))
    else:
        dist = rng.standard_normal((n_steps, 2)) * (cfg.v1_std, cfg.v2_std)
        meas = rng.standard_normal((n_steps, 4)) * np.asarray(cfg.meas_std, dtype=float)
    out = np.empty((n_steps, 4))
    # the right-hand side inlined with precomputed coefficients
    inv_v = 1.0 / cfg.volume
    k0, eor, caf, tf = cfg.k0, cfg.e_over_r, cfg.c_af, cfg.t_feed
    heat = cfg.minus_delta_h / (cfg.rho * cfg.cp)
    ua = cfg.ua / (cfg.volume * cfg.rho * cfg.cp)

    def rhs(ca, t, tc, qv, v1, v2):
        r = k0 * math.exp(-eor / t) * ca
        return qv * (caf - ca) - r + v1, qv * (tf - t) + heat * r + ua * (tc - t) + v2

    for k, ((v1, v2), m) in enumerate(zip(dist.tolist(), meas.tolist())):
        # PI control on the sampled states, held until the next sample
        e_t = t_sp - t
        e_c = ca_sp - ca
        int_t += e_t * ts / cfg.ti_temp
        int_c += e_c * ts / cfg.ti_conc
        tc = cfg.tc_nominal + cfg.kc_temp * (e_t + int_t)
        q = cfg.q_nominal + cfg.kc_conc * (e_c + int_c)
        if q <= 0:
            raise IntegrationDiverged(f"feed flow became non-positive at sample {k + 1}")
        out[k] = (ca + m[0], t + m[1], tc + m[2], q + m[3])
        qv = q * inv_v
        try:
            for _ in range(cfg.substeps):
                a1, b1 = rhs(ca, t, tc, qv, v1, v2)
                a2, b2 = rhs(ca + 0.5 * h * a1, t + 0.5 * h * b1, tc, qv, v1, v2)
                a3, b3 = rhs(ca + 0.5 * h * a2, t + 0.5 * h * b2, tc, qv, v1, v2)
                a4, b4 = rhs(ca + h * a3, t + h * b3, tc, qv, v1, v2)
                ca += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
                t += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        except (OverflowError, ZeroDivisionError) as exc:
            raise IntegrationDiverged(f"integration failed at sample {k + 1}: {exc}") from exc
        if not (math.isfinite(ca) and math.isfinite(t)) or not (0.0 <= ca <= 2.0 * cfg.c_af) or not (200.0 < t < 700.0):
            raise IntegrationDiverged(f"state left physical bounds at sample {k + 1}: C_A={ca}, T={t}")
    if sensor_fault_schedule is not None:
        out = inject_faults(out, sensor_fault_schedule)
    return out


CSTR_FAULT_DIRECTION = (0.0, 0.0, 0.0, 1.0)


def cstr_scenario(
    seed,
    cfg: Optional[CstrConfig] = None,
    n_train: int = 5000,
    n_episodes: int = 6,
    first_mu: int = 101,
    **schedule_kw,
) -> Scenario:
    """Seeded intermittent sensor faults on the measured feed flow of the CSTR."""
    cfg = cfg or CstrConfig()
    ss = np.random.SeedSequence(seed)
    s_train, s_test, s_sched = ss.spawn(3)
    schedule_kw.setdefault("tau_on_range", (18, 28))
    schedule_kw.setdefault("tau_off_range", (18, 28))
    schedule, n_test = random_schedule(
        np.random.default_rng(s_sched), n_episodes, first_mu, CSTR_FAULT_DIRECTION, **schedule_kw
    )
    train = cstr_simulate(cfg, n_train, s_train)
    clean = cstr_simulate(cfg, n_test, s_test)
    return Scenario(train, clean, inject_faults(clean, schedule), schedule)
