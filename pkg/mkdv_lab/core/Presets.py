"""Named initial conditions: ``kind`` or ``kind:arg1,arg2,...``."""
import math
from dataclasses import dataclass

import numpy as np

from mkdv_lab.core.Spectral import FourierState, japanese_bracket, mode_numbers, symmetrize

RANDOM_SMOOTH_AMPLITUDE = 0.1
RANDOM_SMOOTH_WIDTH = 4
RANDOM_SMOOTH_CLIP = 0.5

# kind -> (required argument count, optional argument count)
PRESET_ARITY = {
    'zero': (0, 0),
    'plane_wave': (3, 0),
    'gaussian_bump': (2, 1),
    'random_smooth': (2, 2),
    'one_sided': (1, 0),
    'one_sided_real': (1, 0),
    'symmetric_decay': (1, 0),
}


@dataclass(frozen=True)
class ICPreset:
    kind: str
    args: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in PRESET_ARITY:
            raise ValueError(f'unknown initial condition {self.kind!r}; known: {sorted(PRESET_ARITY)}')
        required, optional = PRESET_ARITY[self.kind]
        if not required <= len(self.args) <= required + optional:
            raise ValueError(f'{self.kind} takes {required} to {required + optional} arguments, got {len(self.args)}')
        args = tuple(float(i) for i in self.args)
        if not all(math.isfinite(i) for i in args):
            raise ValueError(f'{self.kind} arguments must be finite, got {args}')
        object.__setattr__(self, 'args', args)

    @classmethod
    def parse(cls, text: str) -> 'ICPreset':
        kind, _, rest = text.strip().partition(':')
        args = tuple(float(i) for i in rest.split(',')) if rest.strip() else ()
        return cls(kind.strip(), args)

    def __str__(self):
        if not self.args:
            return self.kind
        return f"{self.kind}:{','.join(format(i, 'g') for i in self.args)}"


def plane_wave_state(mode_cap: int, N: int, a: complex, s: float, time: float = 0.0) -> FourierState:
    """``N^{-s} a e^{iNx}``."""
    if abs(N) > mode_cap:
        raise ValueError(f'plane wave mode {N} outside |n| <= {mode_cap}')
    amplitude = a * abs(N) ** (-s) if N else a
    return FourierState.from_modes(mode_cap, {N: amplitude}, time)


def build_initial_state(preset: ICPreset, mode_cap: int) -> FourierState:
    kind, args = preset.kind, preset.args
    modes = mode_numbers(mode_cap)
    if kind == 'zero':
        return FourierState.zeros(mode_cap)

    if kind == 'plane_wave':
        N, a, s = args
        if N != int(N):
            raise ValueError(f'plane wave mode must be an integer, got {N}')
        return plane_wave_state(mode_cap, int(N), a, s)

    if kind == 'gaussian_bump':
        # coefficients of the periodised bump amp * exp(-(x - pi)^2 / (2 width^2)) e^{i carrier x}
        width, amp = args[:2]
        carrier = args[2] if len(args) > 2 else 0.0
        if not width > 0:
            raise ValueError(f'bump width must be positive, got {width}')
        shifted = modes - carrier
        parity = np.where(modes % 2 == 0, 1.0, -1.0)
        coeffs = amp * width / math.sqrt(2 * math.pi) * np.exp(-0.5 * (shifted * width) ** 2) * parity
        return FourierState(coeffs.astype(np.complex128), real_valued=carrier == 0)

    if kind == 'random_smooth':
        decay, seed = args[:2]
        amplitude = args[2] if len(args) > 2 else RANDOM_SMOOTH_AMPLITUDE
        width = int(args[3]) if len(args) > 3 else RANDOM_SMOOTH_WIDTH
        if width > mode_cap:
            raise ValueError(f'random_smooth width {width} exceeds the mode cap {mode_cap}')
        rng = np.random.default_rng(int(seed))
        active = (np.abs(modes) >= 1) & (np.abs(modes) <= width)
        draws = rng.standard_normal(modes.size) + 1j * rng.standard_normal(modes.size)
        coeffs = np.where(active, amplitude * np.exp(-decay * np.abs(modes)) * draws, 0)
        magnitude = np.abs(coeffs)
        coeffs = np.where(magnitude > RANDOM_SMOOTH_CLIP, coeffs * RANDOM_SMOOTH_CLIP / np.maximum(magnitude, 1e-300),
                          coeffs)
        return FourierState(coeffs)

    if kind == 'one_sided':
        (alpha,) = args
        coeffs = np.where(modes >= 1, np.maximum(modes, 1).astype(np.float64) ** (-alpha), 0)
        return FourierState(coeffs.astype(np.complex128))

    if kind == 'one_sided_real':
        (alpha,) = args
        coeffs = np.where(modes != 0, 0.5 * np.maximum(np.abs(modes), 1).astype(np.float64) ** (-alpha), 0)
        return FourierState(coeffs.astype(np.complex128), real_valued=True)

    (alpha,) = args
    coeffs = japanese_bracket(modes) ** (-alpha)
    return FourierState(symmetrize(coeffs.astype(np.complex128)), real_valued=True)


def one_sided_momentum(alpha: float, cutoff: int) -> float:
    """Exact ``P(P_{<=N} u0)`` for ``c(n) = n^{-alpha}``, ``n >= 1``: ``sum n^{1 - 2 alpha}``."""
    n = np.arange(1, cutoff + 1, dtype=np.float64)
    return float(np.sum(n ** (1 - 2 * alpha)))
