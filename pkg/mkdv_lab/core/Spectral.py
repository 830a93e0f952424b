"""Fourier representation of 2pi-periodic functions.

Convention: ``u(x) = sum_n c(n) e^{inx}`` with ``c(n) = (1/2pi) int u e^{-inx} dx``,
so the mass ``sum |c(n)|^2`` is the normalised L2 norm squared. Coefficients are
stored on the symmetric range ``n = -M..M`` with ``coeffs[i]`` holding ``c(i - M)``.
"""
import csv
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

REAL_TOLERANCE = 1e-14


class AliasingError(ValueError):
    """Grid too coarse for the requested mode cap."""


def _as_readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def is_conjugate_symmetric(coeffs: np.ndarray, tol: float = REAL_TOLERANCE) -> bool:
    if coeffs.size == 0:
        return True
    return bool(np.max(np.abs(coeffs - np.conj(coeffs[::-1]))) <= tol)


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Projects onto conjugate-symmetric coefficients (real-valued functions)."""
    return 0.5 * (coeffs + np.conj(coeffs[::-1]))


def mode_numbers(mode_cap: int) -> np.ndarray:
    return np.arange(-mode_cap, mode_cap + 1)


@dataclass(frozen=True, eq=False)
class FourierState:
    """One time slice of a solution, as Fourier coefficients on ``|n| <= M``."""
    coeffs: np.ndarray
    time: float = 0.0
    real_valued: bool = False

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 1 or coeffs.size % 2 == 0:
            raise ValueError(f'coefficients must have odd length 2M+1, got shape {coeffs.shape}')
        if self.real_valued and not is_conjugate_symmetric(coeffs):
            raise ValueError('state flagged real_valued is not conjugate symmetric')
        object.__setattr__(self, 'coeffs', _as_readonly(coeffs))
        object.__setattr__(self, 'time', float(self.time))
        object.__setattr__(self, 'real_valued', bool(self.real_valued))

    @property
    def mode_cap(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.mode_cap)

    def __len__(self):
        return self.coeffs.size

    def coeff(self, n: int) -> complex:
        if abs(n) > self.mode_cap:
            return 0j
        return complex(self.coeffs[n + self.mode_cap])

    def with_coeffs(self, coeffs: np.ndarray, real_valued: bool | None = None) -> 'FourierState':
        if real_valued is None:
            real_valued = self.real_valued
        if real_valued:
            coeffs = symmetrize(np.asarray(coeffs, dtype=np.complex128))
        return FourierState(coeffs, self.time, real_valued)

    def at_time(self, time: float) -> 'FourierState':
        return FourierState(self.coeffs, time, self.real_valued)

    @classmethod
    def zeros(cls, mode_cap: int, time: float = 0.0) -> 'FourierState':
        if mode_cap < 0:
            raise ValueError(f'mode cap must be non-negative, got {mode_cap}')
        return cls(np.zeros(2 * mode_cap + 1, dtype=np.complex128), time, real_valued=True)

    @classmethod
    def from_modes(cls, mode_cap: int, values: dict, time: float = 0.0, real_valued: bool = False) -> 'FourierState':
        coeffs = np.zeros(2 * mode_cap + 1, dtype=np.complex128)
        for n, value in values.items():
            if abs(n) > mode_cap:
                raise ValueError(f'mode {n} outside |n| <= {mode_cap}')
            coeffs[n + mode_cap] = value
        return cls(coeffs, time, real_valued)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples at the equispaced points ``x_j = 2 pi j / K``."""
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError(f'samples must be a non-empty 1-d sequence, got shape {samples.shape}')
        object.__setattr__(self, 'samples', _as_readonly(samples))

    @property
    def size(self) -> int:
        return self.samples.size

    @property
    def points(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.size) / self.size


def padded_grid_size(mode_cap: int) -> int:
    """Grid size on which cubic products of mode-cap-M states are alias free."""
    return scipy.fft.next_fast_len(4 * mode_cap + 1)


def pad_coeffs(coeffs: np.ndarray, size: int) -> np.ndarray:
    """Places symmetric-layout coefficients into an FFT-ordered buffer of length ``size``."""
    mode_cap = (coeffs.shape[-1] - 1) // 2
    buffer = np.zeros(coeffs.shape[:-1] + (size,), dtype=np.complex128)
    buffer[..., mode_numbers(mode_cap) % size] = coeffs
    return buffer


def truncate_coeffs(buffer: np.ndarray, mode_cap: int) -> np.ndarray:
    return buffer[..., mode_numbers(mode_cap) % buffer.shape[-1]]


def to_physical(state: FourierState, size: int) -> GridFunction:
    """Evaluates the trigonometric polynomial at ``size`` equispaced points."""
    if size < 2 * state.mode_cap + 1:
        raise AliasingError(f'{size} grid points cannot represent {2 * state.mode_cap + 1} modes')
    return GridFunction(scipy.fft.ifft(pad_coeffs(state.coeffs, size), norm='forward'))


def to_fourier(grid: GridFunction, mode_cap: int, time: float = 0.0) -> FourierState:
    if grid.size < 2 * mode_cap + 1:
        raise AliasingError(f'{grid.size} grid points cannot represent {2 * mode_cap + 1} modes')
    coeffs = truncate_coeffs(scipy.fft.fft(grid.samples, norm='forward'), mode_cap)
    return FourierState(coeffs, time)


def project_low(state: FourierState, cutoff: int) -> FourierState:
    """Dirichlet projection onto ``|n| <= cutoff``."""
    if cutoff < 0:
        raise ValueError(f'cutoff must be non-negative, got {cutoff}')
    return FourierState(np.where(np.abs(state.modes) <= cutoff, state.coeffs, 0), state.time, state.real_valued)


def project_high(state: FourierState, cutoff: int) -> FourierState:
    if cutoff < 0:
        raise ValueError(f'cutoff must be non-negative, got {cutoff}')
    return FourierState(np.where(np.abs(state.modes) > cutoff, state.coeffs, 0), state.time, state.real_valued)


def derivative(state: FourierState, order: int = 1) -> FourierState:
    if order < 0:
        raise ValueError(f'derivative order must be non-negative, got {order}')
    symbol = 1j * state.modes
    coeffs = state.coeffs.copy()
    # repeated multiplication keeps (2i)^3 = -8i exact
    for _ in range(order):
        coeffs = coeffs * symbol
    return FourierState(coeffs, state.time, state.real_valued)


def conjugate_reflect(state: FourierState) -> FourierState:
    """Coefficients of the complex conjugate function: ``c(n) -> conj(c(-n))``."""
    return FourierState(np.conj(state.coeffs[::-1]), state.time, state.real_valued)


def is_real_valued(state: FourierState, tol: float = REAL_TOLERANCE) -> bool:
    return is_conjugate_symmetric(state.coeffs, tol)


def dealiased_triple_product(a: FourierState, b: FourierState, c: FourierState) -> FourierState:
    """Coefficients of the pointwise product ``a*b*c`` on ``|n| <= M``.

    Evaluated on at least 4M+1 points, so the retained modes equal the exact
    discrete convolution.
    """
    mode_cap = a.mode_cap
    if b.mode_cap != mode_cap or c.mode_cap != mode_cap:
        raise ValueError(f'mode caps differ: {a.mode_cap}, {b.mode_cap}, {c.mode_cap}')
    size = padded_grid_size(mode_cap)
    physical = scipy.fft.ifft(pad_coeffs(np.stack([a.coeffs, b.coeffs, c.coeffs]), size), norm='forward', axis=-1)
    product = physical[0] * physical[1] * physical[2]
    coeffs = truncate_coeffs(scipy.fft.fft(product, norm='forward'), mode_cap)
    real_valued = a.real_valued and b.real_valued and c.real_valued
    return FourierState(symmetrize(coeffs) if real_valued else coeffs, a.time, real_valued)


def japanese_bracket(n) -> np.ndarray:
    """``<n> = (1 + n^2)^(1/2)``."""
    return np.sqrt(1.0 + np.asarray(n, dtype=np.float64) ** 2)


def _format_float(value: float) -> str:
    return format(float(value), '.17g')


def state_to_csv(state: FourierState, file_path: str):
    """Writes ``n,re,im`` rows."""
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(file_path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(('n', 're', 'im'))
        for n, value in zip(state.modes, state.coeffs):
            writer.writerow((int(n), _format_float(value.real), _format_float(value.imag)))


def state_from_csv(file_path: str, time: float = 0.0) -> FourierState:
    with open(file_path, newline='') as f:
        reader = csv.DictReader(f)
        missing = [i for i in ('n', 're', 'im') if i not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f'{file_path}: missing columns {", ".join(missing)}, expected n,re,im')
        rows = [row for row in reader]
    return _state_from_rows([(int(r['n']), float(r['re']), float(r['im'])) for r in rows], time)


def state_to_json(state: FourierState) -> str:
    return json.dumps({
        'mode_cap': state.mode_cap,
        'time': state.time,
        'coeffs': [[int(n), float(v.real), float(v.imag)] for n, v in zip(state.modes, state.coeffs)],
    })


def state_from_json(text: str) -> FourierState:
    data = json.loads(text)
    state = _state_from_rows([(int(n), float(re), float(im)) for n, re, im in data['coeffs']], data['time'])
    if state.mode_cap != data['mode_cap']:
        raise ValueError(f"mode_cap {data['mode_cap']} does not match {len(data['coeffs'])} coefficients")
    return state


def _state_from_rows(rows: list, time: float) -> FourierState:
    mode_cap = max((abs(n) for n, _, _ in rows), default=0)
    values = {n: complex(re, im) for n, re, im in rows}
    if len(values) != 2 * mode_cap + 1:
        raise ValueError(f'expected {2 * mode_cap + 1} distinct modes, got {len(values)}')
    return FourierState.from_modes(mode_cap, values, time)


def load_state(file_path: str) -> FourierState:
    """Reads a state from ``.csv`` or ``.json``."""
    if file_path.endswith('.json'):
        with open(file_path) as f:
            return state_from_json(f.read())
    return state_from_csv(file_path)
