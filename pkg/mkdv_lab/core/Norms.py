"""Fourier-Lebesgue norms, conserved quantities and space-time norm proxies."""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft

from mkdv_lab.core.Spectral import FourierState, project_low
from mkdv_lab.core.Trajectory import Trajectory

logger = logging.getLogger(__name__)

XSB_MIN_SAMPLES = 8
MOMENTUM_TOLERANCE = 1e-6
MIN_SCHEDULE_LENGTH = 4
# successive increments at least this fraction of the previous one count as a non-summable trend
TREND_RATIO = 0.95
OCTAVE_GROWTH = 2.0


class ScheduleError(ValueError):
    """Truncation schedule unusable for the momentum diagnostic."""


@dataclass(frozen=True)
class NormSpec:
    """``(s, p)`` of ``FL^{s,p}``; with ``b, q`` the space-time norm ``X^{s,b}_{p,q}``."""
    s: float = 0.0
    p: float = 2.0
    b: float | None = None
    q: float | None = None

    def __post_init__(self):
        for name in ('s', 'p', 'b', 'q'):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))
        if math.isnan(self.s) or math.isinf(self.s):
            raise ValueError(f'regularity must be finite, got {self.s}')
        if not self.p >= 1:
            raise ValueError(f'p must be >= 1, got {self.p}')
        if self.q is not None and not self.q >= 1:
            raise ValueError(f'q must be >= 1, got {self.q}')

    @classmethod
    def parse(cls, text: str) -> 'NormSpec':
        """``'s,p'`` or ``'s,b,p,q'``; ``inf`` accepted for p and q."""
        parts = [float(i) for i in text.split(',')]
        if len(parts) == 2:
            return cls(*parts)
        if len(parts) == 4:
            s, b, p, q = parts
            return cls(s, p, b, q)
        raise ValueError(f'norm spec must be "s,p" or "s,b,p,q", got {text!r}')

    @property
    def label(self) -> str:
        if self.b is None:
            return f'FL^({self.s:g},{self.p:g})'
        return f'X^({self.s:g},{self.b:g})_({self.p:g},{self.q if self.q is not None else 2:g})'


def _weighted_lp(magnitude_sq: np.ndarray, weights_sq: np.ndarray, p: float, axis=-1) -> np.ndarray:
    """``(sum (w |c|)^p)^(1/p)`` given ``|c|^2`` and ``w^2``."""
    if p == 2:
        return np.sqrt(np.sum(weights_sq * magnitude_sq, axis=axis))
    weighted = np.sqrt(weights_sq * magnitude_sq)
    if math.isinf(p):
        return np.max(weighted, axis=axis, initial=0.0)
    return np.sum(weighted ** p, axis=axis) ** (1.0 / p)


def fl_norm_coeffs(coeffs: np.ndarray, s: float, p: float) -> np.ndarray:
    """``FL^{s,p}`` norm of symmetric-layout coefficients along the last axis."""
    mode_cap = (coeffs.shape[-1] - 1) // 2
    n = np.arange(-mode_cap, mode_cap + 1, dtype=np.float64)
    weights_sq = (1.0 + n ** 2) ** s
    return _weighted_lp(coeffs.real ** 2 + coeffs.imag ** 2, weights_sq, p)


def fl_norm(state: FourierState, spec: NormSpec) -> float:
    return float(fl_norm_coeffs(state.coeffs, spec.s, spec.p))


def sobolev_norm(state: FourierState, s: float) -> float:
    return fl_norm(state, NormSpec(s, 2))


def coeffs_mass(coeffs: np.ndarray) -> np.ndarray:
    return np.sum(coeffs.real ** 2 + coeffs.imag ** 2, axis=-1)


def coeffs_momentum(coeffs: np.ndarray) -> np.ndarray:
    """``sum_{n>0} n (|c(n)|^2 - |c(-n)|^2)``; exactly zero on symmetric input."""
    mode_cap = (coeffs.shape[-1] - 1) // 2
    if mode_cap == 0:
        return np.zeros(coeffs.shape[:-1])
    power = coeffs.real ** 2 + coeffs.imag ** 2
    positive = power[..., mode_cap + 1:]
    negative = power[..., mode_cap - 1::-1]
    n = np.arange(1, mode_cap + 1, dtype=np.float64)
    return np.sum(n * (positive - negative), axis=-1)


def mass(state: FourierState) -> float:
    return float(coeffs_mass(state.coeffs))


def momentum(state: FourierState) -> float:
    return float(coeffs_momentum(state.coeffs))


def truncated_momentum(state: FourierState, cutoff: int) -> float:
    return momentum(project_low(state, cutoff))


class MomentumVerdict(Enum):
    CONVERGED = 'converged'
    DIVERGING = 'diverging'
    UNDETERMINED = 'undetermined'


@dataclass(frozen=True)
class MomentumSeries:
    truncations: tuple[tuple[int, float], ...]
    verdict: MomentumVerdict
    limit: float | None = None
    tol: float = MOMENTUM_TOLERANCE

    @property
    def cutoffs(self) -> list[int]:
        return [n for n, _ in self.truncations]

    @property
    def values(self) -> list[float]:
        return [value for _, value in self.truncations]

    def verdict_dict(self) -> dict:
        return {'verdict': self.verdict.value, 'limit': self.limit, 'tol': self.tol}


def classify_momentum_series(cutoffs, values, tol: float = MOMENTUM_TOLERANCE) -> tuple[MomentumVerdict, float | None]:
    """Converged if the last three increments are below ``tol (1 + |P_last|)``.

    Diverging if ``|P|`` at least doubles over the last octave of the schedule,
    or if the last three increments share a sign and none shrinks below
    ``TREND_RATIO`` of its predecessor.
    """
    values = np.asarray(values, dtype=np.float64)
    last = float(values[-1])
    increments = np.diff(values)[-3:]
    if np.all(np.abs(increments) < tol * (1.0 + abs(last))):
        return MomentumVerdict.CONVERGED, last

    octave = [k for k, n in enumerate(cutoffs) if 2 * n <= cutoffs[-1]]
    if octave:
        reference = abs(values[octave[-1]])
        if reference > 0 and abs(last) >= OCTAVE_GROWTH * reference:
            return MomentumVerdict.DIVERGING, None

    signs = np.sign(increments)
    if signs[0] != 0 and np.all(signs == signs[0]):
        magnitudes = np.abs(increments)
        if np.all(magnitudes[1:] >= TREND_RATIO * magnitudes[:-1]):
            return MomentumVerdict.DIVERGING, None
    return MomentumVerdict.UNDETERMINED, None


def momentum_limit_diagnostic(state: FourierState, schedule, tol: float = MOMENTUM_TOLERANCE) -> MomentumSeries:
    schedule = [int(n) for n in schedule]
    if len(schedule) < MIN_SCHEDULE_LENGTH:
        raise ScheduleError(f'schedule needs at least {MIN_SCHEDULE_LENGTH} truncations, got {len(schedule)}')
    if schedule[0] < 0 or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ScheduleError(f'schedule must be non-negative and strictly increasing, got {schedule}')
    if schedule[-1] > state.mode_cap:
        logger.warning('Truncations above the mode cap %s repeat the full momentum', state.mode_cap)
    values = [truncated_momentum(state, n) for n in schedule]
    verdict, limit = classify_momentum_series(schedule, values, tol)
    return MomentumSeries(tuple(zip(schedule, values)), verdict, limit, tol)


def raised_cosine_window(times: np.ndarray) -> np.ndarray:
    """``w(t) = (1 - cos(2 pi (t - t0) / span)) / 2``, vanishing at both ends."""
    times = np.asarray(times, dtype=np.float64)
    span = times[-1] - times[0]
    if not span > 0:
        raise ValueError('window needs a positive time span')
    return 0.5 * (1.0 - np.cos(2 * np.pi * (times - times[0]) / span))


def _modulation_grid(samples: int, dt: float) -> tuple[np.ndarray, float]:
    """Angular frequencies of the discrete time transform and the ``dsigma / 2pi`` weight."""
    return 2 * np.pi * scipy.fft.fftfreq(samples, dt), 1.0 / (samples * dt)


def _lq_in_time(values_sq: np.ndarray, weight: float, q: float) -> np.ndarray:
    if math.isinf(q):
        return np.sqrt(np.max(values_sq, axis=0))
    return (weight * np.sum(values_sq ** (q / 2), axis=0)) ** (1.0 / q)


def window_modulation_norm(times: np.ndarray, b: float, q: float = 2.0) -> float:
    """``|| <sigma>^b w^(sigma) ||_{L^q}`` on the same grid ``xsb_norm`` uses."""
    times = np.asarray(times, dtype=np.float64)
    dt = times[1] - times[0]
    sigma, weight = _modulation_grid(times.size, dt)
    transform = dt * scipy.fft.fft(raised_cosine_window(times))
    values_sq = (1.0 + sigma ** 2) ** b * (transform.real ** 2 + transform.imag ** 2)
    return float(_lq_in_time(values_sq[:, None], weight, q)[0])


def xsb_norm(traj: Trajectory, spec: NormSpec) -> float:
    """Windowed discrete proxy for ``|| <n>^s <tau - n^3>^b F(w u) ||_{l^p_n L^q_tau}``.

    The time transform is taken of ``v = S(-t) u`` so the modulation variable is
    ``sigma = tau - n^3`` directly. This is an upper-bound proxy for the
    restriction norm, not the continuum functional.
    """
    if len(traj) < XSB_MIN_SAMPLES:
        raise ValueError(f'space-time norm needs at least {XSB_MIN_SAMPLES} samples, got {len(traj)}')
    b = spec.b if spec.b is not None else 0.0
    q = spec.q if spec.q is not None else 2.0
    cubes = traj.modes.astype(np.float64) ** 3
    interaction = traj.coeffs * np.exp(-1j * np.outer(traj.times, cubes))
    window = raised_cosine_window(traj.times)
    transform = traj.dt * scipy.fft.fft(window[:, None] * interaction, axis=0)
    sigma, weight = _modulation_grid(len(traj), traj.dt)
    values_sq = (1.0 + sigma[:, None] ** 2) ** b * (transform.real ** 2 + transform.imag ** 2)
    per_mode = _lq_in_time(values_sq, weight, q)
    weights_sq = (1.0 + traj.modes.astype(np.float64) ** 2) ** spec.s
    return float(_weighted_lp(per_mode ** 2, weights_sq, spec.p))


def trajectory_fl_norms(traj: Trajectory, spec: NormSpec) -> np.ndarray:
    return fl_norm_coeffs(traj.coeffs, spec.s, spec.p)


def distance_series(a: Trajectory, b: Trajectory, spec: NormSpec) -> np.ndarray:
    """Per-slice ``FL^{s,p}`` distance of two trajectories sampled on the same times."""
    if a.coeffs.shape != b.coeffs.shape:
        raise ValueError(f'trajectory shapes differ: {a.coeffs.shape} and {b.coeffs.shape}')
    return fl_norm_coeffs(a.coeffs - b.coeffs, spec.s, spec.p)


def scaling_critical_regularity(p: float) -> float:
    """Regularity at which ``FL^{s,p}`` is scale invariant for mKdV."""
    return -1.0 / p


def sobolev_scaling_index(s: float, p: float) -> float:
    """Sobolev regularity with the same scaling as ``FL^{s,p}``."""
    return s + 1.0 / p - 0.5


def lwp_admissible(s: float, p: float) -> bool:
    """Range of local well-posedness of the renormalised equation in ``FL^{s,p}``."""
    if 0.5 <= s < 0.75:
        return 1 <= p < 4.0 / (3.0 - 4.0 * s)
    return s >= 0.75 and 1 <= p < math.inf


def energy_estimate_admissible(s: float, p: float) -> bool:
    if 0.5 <= s < 5.0 / 6.0:
        return 2 <= p < 6.0 / (5.0 - 6.0 * s)
    return s >= 5.0 / 6.0 and 2 <= p < math.inf


def apriori_admissible(s: float, p: float) -> bool:
    return 2 <= p < math.inf and 0 < s < 1.0 - 1.0 / p
