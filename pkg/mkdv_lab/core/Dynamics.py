"""Nonlinearities of the mKdV family, resonance algebra and the time integrator.

All three equations are written as ``d/dt c(n) = i n^3 c(n) + F(c)(n)`` where
``F`` carries the sign of the cubic term:

* mkdv:  ``F = sign * (|u|^2 u_x)^``
* mkdv1: ``F = sign * ((|u|^2 - mu) u_x)^``, ``mu`` the mass
* mkdv2: mkdv1 minus ``sign * i P c``, ``P`` the momentum
"""
import logging
import math
import operator
from dataclasses import dataclass

import numpy as np
import scipy.fft

from mkdv_lab.core.Equations import EquationSpec, Variant
from mkdv_lab.core.Norms import NormSpec, coeffs_mass, coeffs_momentum, fl_norm_coeffs
from mkdv_lab.core.Spectral import (FourierState, japanese_bracket, mode_numbers, pad_coeffs, padded_grid_size,
                                    to_physical, truncate_coeffs)
from mkdv_lab.core.Trajectory import Trajectory

logger = logging.getLogger(__name__)

DIRECT_SUM_MAX_MODES = 64
PHI_ARRAY_LIMIT = 2 ** 19
MASS_DRIFT_LIMIT = 0.01
J1_ROW_CHUNK = 256


class DirectSumRefused(ValueError):
    """Mode cap too large for the O(M^3) direct convolution."""


class SolverAbort(RuntimeError):
    """Integration stopped; ``trajectory`` holds the slices saved so far."""

    def __init__(self, diagnostic: str, trajectory: Trajectory | None = None):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.trajectory = trajectory


class NonFiniteStateError(SolverAbort):
    pass


def phi_resonance(n1: int, n2: int, n3: int) -> int:
    """``3 (n1+n2)(n1+n3)(n2+n3) = (n1+n2+n3)^3 - n1^3 - n2^3 - n3^3``.

    Sign follows ``n^3 - sum n_j^3``; the opposite convention differs only by
    sign. Python integers, so no overflow for any input.
    """
    n1, n2, n3 = operator.index(n1), operator.index(n2), operator.index(n3)
    return 3 * (n1 + n2) * (n1 + n3) * (n2 + n3)


def phi_resonance_array(n1, n2, n3) -> np.ndarray:
    """Vectorised ``phi_resonance`` in int64; refuses ``|n_j| > 2^19``."""
    n1, n2, n3 = (np.asarray(i, dtype=np.int64) for i in (n1, n2, n3))
    for values in (n1, n2, n3):
        if values.size and np.max(np.abs(values)) > PHI_ARRAY_LIMIT:
            raise OverflowError(f'|n_j| above {PHI_ARRAY_LIMIT} may overflow int64; use phi_resonance')
    return 3 * (n1 + n2) * (n1 + n3) * (n2 + n3)


def lambda_membership(n: int, n1: int, n2: int, n3: int) -> bool:
    """Whether ``(n1, n2, n3)`` is a non-resonant triple for output mode ``n``."""
    return n == n1 + n2 + n3 and phi_resonance(n1, n2, n3) != 0


def _cubic_term(coeffs: np.ndarray, wavenumbers: np.ndarray, size: int) -> np.ndarray:
    """``(|u|^2 u_x)^`` on the retained modes, alias free on ``size >= 4M+1`` points."""
    mode_cap = (coeffs.shape[-1] - 1) // 2
    physical = scipy.fft.ifft(pad_coeffs(np.stack([coeffs, wavenumbers * coeffs]), size), norm='forward', axis=-1)
    u, ux = physical[0], physical[1]
    return truncate_coeffs(scipy.fft.fft((u.real ** 2 + u.imag ** 2) * ux, norm='forward'), mode_cap)


def _rhs(coeffs: np.ndarray, wavenumbers: np.ndarray, equation: EquationSpec, size: int) -> np.ndarray:
    # leading axes are independent members of an ensemble
    out = _cubic_term(coeffs, wavenumbers, size)
    if equation.variant in (Variant.MKDV1, Variant.MKDV2):
        out = out - np.expand_dims(coeffs_mass(coeffs), -1) * wavenumbers * coeffs
    if equation.variant == Variant.MKDV2:
        out = out - 1j * np.expand_dims(coeffs_momentum(coeffs), -1) * coeffs
    return equation.sign * out


def nonlinearity(state: FourierState, equation: EquationSpec) -> FourierState:
    """Dealiased right-hand side of the chosen equation, sign included."""
    wavenumbers = 1j * state.modes
    coeffs = _rhs(state.coeffs, wavenumbers, equation, padded_grid_size(state.mode_cap))
    return state.with_coeffs(coeffs)


@dataclass(frozen=True, eq=False)
class NonlinearityParts:
    """Terms of ``(|u|^2 u_x)^`` with no sign applied.

    ``(|u|^2 u_x)^ = nonresonant - resonant + momentum_part + mean_part``.
    """
    nonresonant: FourierState
    resonant: FourierState
    momentum_part: FourierState
    mean_part: FourierState

    def recombine(self, equation: EquationSpec) -> FourierState:
        coeffs = self.nonresonant.coeffs - self.resonant.coeffs
        if equation.variant in (Variant.MKDV, Variant.MKDV1):
            coeffs = coeffs + self.momentum_part.coeffs
        if equation.variant == Variant.MKDV:
            coeffs = coeffs + self.mean_part.coeffs
        return FourierState(equation.sign * coeffs, self.nonresonant.time)


def decompose_nonlinearity(state: FourierState) -> NonlinearityParts:
    """Direct O(M^3) evaluation of the non-resonant sum and the diagonal terms.

    The non-resonant term is ``sum i n3 c(n1) conj(c(-n2)) c(n3)`` over triples
    with ``n1+n2+n3 = n`` and no vanishing pairwise sum.
    """
    mode_cap = state.mode_cap
    if mode_cap > DIRECT_SUM_MAX_MODES:
        raise DirectSumRefused(f'direct summation is limited to M <= {DIRECT_SUM_MAX_MODES}, got M = {mode_cap}; '
                               f'use nonlinearity() for the dealiased pseudo-spectral path')
    modes = state.modes
    c = state.coeffs
    conj_reflected = np.conj(c[::-1])
    n1, n2, n3 = np.meshgrid(modes, modes, modes, indexing='ij')
    total = n1 + n2 + n3
    keep = (np.abs(total) <= mode_cap) & (phi_resonance_array(n1, n2, n3) != 0)
    i1, i2, i3 = n1[keep] + mode_cap, n2[keep] + mode_cap, n3[keep] + mode_cap
    terms = 1j * n3[keep] * c[i1] * conj_reflected[i2] * c[i3]
    slots = total[keep] + mode_cap
    length = 2 * mode_cap + 1
    nonresonant = (np.bincount(slots, weights=terms.real, minlength=length)
                   + 1j * np.bincount(slots, weights=terms.imag, minlength=length))

    power = c.real ** 2 + c.imag ** 2
    resonant = 1j * modes * power * c
    momentum_part = 1j * coeffs_momentum(c) * c
    mean_part = coeffs_mass(c) * 1j * modes * c
    return NonlinearityParts(*(FourierState(i, state.time) for i in (nonresonant, resonant, momentum_part, mean_part)))


def j1_shell_sums(n: int, s: float, p: float, k_max: int) -> np.ndarray:
    """Contribution of each shell ``max(|n1|, |n2|) = k``, ``k = 0..k_max``.

    Terms are ``(<n>^s |n3| / (|phi|^(1/2) prod <n_j>^s))^(p')`` over non-resonant
    triples with ``n3 = n - n1 - n2``. For ``p = 1`` the per-shell maximum is
    returned instead of the sum.
    """
    if p < 1:
        raise ValueError(f'p must be >= 1, got {p}')
    if k_max < 0:
        raise ValueError(f'truncation radius must be non-negative, got {k_max}')
    exponent = None if p == 1 else p / (p - 1)
    shells = np.zeros(k_max + 1)
    axis = np.arange(-k_max, k_max + 1)
    bracket_n = float(japanese_bracket(n))
    for start in range(0, axis.size, J1_ROW_CHUNK):
        n1, n2 = np.meshgrid(axis[start:start + J1_ROW_CHUNK], axis, indexing='ij')
        n3 = n - n1 - n2
        phi = phi_resonance_array(n1, n2, n3)
        keep = phi != 0
        n1, n2, n3, phi = n1[keep], n2[keep], n3[keep], phi[keep]
        brackets = japanese_bracket(n1) * japanese_bracket(n2) * japanese_bracket(n3)
        base = (bracket_n ** s) * np.abs(n3) / (np.sqrt(np.abs(phi).astype(np.float64)) * brackets ** s)
        shell = np.maximum(np.abs(n1), np.abs(n2))
        if exponent is None:
            np.maximum.at(shells, shell, base)
        else:
            shells += np.bincount(shell, weights=base ** exponent, minlength=k_max + 1)
    return shells


def j1_multiplier_sum(n: int, s: float, p: float, truncation: int) -> float:
    """Raw ``J'_1(n)`` truncated to ``|n1|, |n2| <= truncation``; max term when ``p = 1``."""
    shells = j1_shell_sums(n, s, p, truncation)
    return float(np.max(shells)) if p == 1 else float(np.sum(shells))


def cumulative_j1(n: int, s: float, p: float, truncations) -> list[float]:
    """``j1_multiplier_sum`` for every truncation from one pass over the largest."""
    truncations = [int(k) for k in truncations]
    shells = j1_shell_sums(n, s, p, max(truncations))
    running = np.maximum.accumulate(shells) if p == 1 else np.cumsum(shells)
    return [float(running[k]) for k in truncations]


def linear_propagator(state: FourierState, t: float) -> FourierState:
    """Free flow ``c(n) -> e^{i n^3 t} c(n)``."""
    cubes = state.modes.astype(np.float64) ** 3
    return FourierState(state.coeffs * np.exp(1j * cubes * t), state.time + t, state.real_valued)


def interaction_representation(traj: Trajectory) -> Trajectory:
    """``v(t) = S(-t) u(t)``."""
    cubes = traj.modes.astype(np.float64) ** 3
    return traj.with_coeffs(traj.coeffs * np.exp(-1j * np.outer(traj.times, cubes)))


class IntegratingFactorRK4:
    """Classical RK4 on ``w = e^{-i n^3 t} c`` (Lawson form).

    The dispersive phase is applied exactly through precomputed exponentials, so
    the time step is limited by the nonlinearity only.
    """

    def __init__(self, equation: EquationSpec, mode_cap: int, time_step: float):
        self.equation = equation
        self.mode_cap = mode_cap
        self.time_step = time_step
        self.padded_size = padded_grid_size(mode_cap)
        modes = mode_numbers(mode_cap)
        self.wavenumbers = 1j * modes
        cubes = modes.astype(np.float64) ** 3
        self.exp_lin_full = np.exp(1j * cubes * time_step)
        self.exp_lin_half = np.exp(0.5j * cubes * time_step)

    def rhs(self, coeffs: np.ndarray) -> np.ndarray:
        return _rhs(coeffs, self.wavenumbers, self.equation, self.padded_size)

    def step(self, coeffs: np.ndarray) -> np.ndarray:
        dt = self.time_step
        half = self.exp_lin_half
        full = self.exp_lin_full
        k1 = self.rhs(coeffs)
        k2 = self.rhs(half * (coeffs + 0.5 * dt * k1))
        k3 = self.rhs(half * coeffs + 0.5 * dt * k2)
        k4 = self.rhs(full * coeffs + dt * half * k3)
        return full * coeffs + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)

    def forward_integrate(self, coeffs: np.ndarray, num_step: int = 1) -> np.ndarray:
        for _ in range(num_step):
            coeffs = self.step(coeffs)
        return coeffs


def _check_finite(coeffs: np.ndarray, time: float):
    if not np.all(np.isfinite(coeffs)):
        bad = int(np.count_nonzero(~np.isfinite(coeffs)))
        raise NonFiniteStateError(f'{bad} non-finite coefficients at t = {time:.6g}')


def step(state: FourierState, equation: EquationSpec, dt: float) -> FourierState:
    """One fourth-order step of size ``dt``."""
    if not dt > 0:
        raise ValueError(f'time step must be positive, got {dt}')
    _check_finite(state.coeffs, state.time)
    coeffs = IntegratingFactorRK4(equation, state.mode_cap, dt).step(state.coeffs)
    _check_finite(coeffs, state.time + dt)
    return FourierState(coeffs, state.time + dt)


def stability_limit(state: FourierState) -> float:
    """Heuristic step bound ``0.5 / (M max|u|^2 + 1)``."""
    peak = float(np.max(np.abs(to_physical(state, padded_grid_size(state.mode_cap)).samples)))
    return 0.5 / (state.mode_cap * peak ** 2 + 1.0)


def step_count(T: float, dt: float) -> int:
    if not T > 0 or not dt > 0:
        raise ValueError(f'T and dt must be positive, got T={T}, dt={dt}')
    steps = round(T / dt)
    if steps < 1 or not math.isclose(steps * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f'dt = {dt} does not divide T = {T}')
    return steps


def sampling_stride(num_steps: int, target_samples: int) -> int:
    """Largest divisor of ``num_steps`` keeping at least ``target_samples`` intervals."""
    stride = max(1, num_steps // max(1, target_samples))
    while num_steps % stride:
        stride -= 1
    return stride


def solve(ic: FourierState, equation: EquationSpec, T: float, dt: float, save_every: int = 1) -> Trajectory:
    """Integrates from ``ic`` over ``[t0, t0 + T]`` keeping every ``save_every``-th step.

    Raises ``SolverAbort`` (carrying the partial trajectory) when the mass moves
    by more than 1% in a single step, ``NonFiniteStateError`` on overflow.
    """
    return solve_ensemble([ic], equation, T, dt, save_every)[0]


def solve_ensemble(ics, equation: EquationSpec, T: float, dt: float, save_every: int = 1) -> list[Trajectory]:
    """``solve`` for several initial states at once, one integrator pass over the stacked coefficients.

    All members share the mode cap and start time. The first member to abort
    stops the whole ensemble; its partial trajectory travels with the exception.
    """
    ics = list(ics)
    if not ics:
        raise ValueError('ensemble needs at least one initial state')
    first = ics[0]
    if any(ic.mode_cap != first.mode_cap or ic.time != first.time for ic in ics):
        raise ValueError('ensemble members must share the mode cap and the start time')
    num_steps = step_count(T, dt)
    if save_every < 1 or num_steps % save_every:
        raise ValueError(f'save_every = {save_every} must divide the {num_steps} steps')
    limit = min(stability_limit(ic) for ic in ics)
    if dt > limit:
        logger.warning('dt = %.3g exceeds the stability heuristic %.3g for M = %s', dt, limit, first.mode_cap)
    for ic in ics:
        _check_finite(ic.coeffs, ic.time)

    integrator = IntegratingFactorRK4(equation, first.mode_cap, dt)
    coeffs = np.stack([ic.coeffs for ic in ics])
    saved = [coeffs.copy()]
    previous_mass = coeffs_mass(coeffs)

    def trajectory(member: int, diagnostic: str = '') -> Trajectory:
        return Trajectory(first.time + np.arange(len(saved)) * dt * save_every,
                          np.stack([slice_[member] for slice_ in saved]), equation, dt * save_every, dt,
                          integrator.padded_size, aborted=bool(diagnostic), diagnostic=diagnostic)

    def where(member: int) -> str:
        return f' in member {member}' if len(ics) > 1 else ''

    for k in range(1, num_steps + 1):
        coeffs = integrator.step(coeffs)
        time = first.time + k * dt
        finite = np.all(np.isfinite(coeffs), axis=-1)
        if not np.all(finite):
            member = int(np.argmin(finite))
            diagnostic = f'non-finite coefficients at t = {time:.6g} (step {k}){where(member)}'
            raise NonFiniteStateError(diagnostic, trajectory(member, diagnostic))
        current_mass = coeffs_mass(coeffs)
        drift = np.abs(current_mass - previous_mass)
        drifting = drift > MASS_DRIFT_LIMIT * previous_mass
        if np.any(drifting):
            member = int(np.argmax(drifting))
            diagnostic = (f'mass drift {drift[member] / previous_mass[member]:.3g} in one step '
                          f'at t = {time:.6g} (step {k}){where(member)}; reduce dt')
            raise SolverAbort(diagnostic, trajectory(member, diagnostic))
        previous_mass = current_mass
        if k % save_every == 0:
            saved.append(coeffs)

    logger.debug('Solved %s: %s steps, M = %s, %s members, %s samples', equation, num_steps, first.mode_cap,
                 len(ics), len(saved))
    return [trajectory(member) for member in range(len(ics))]


def residual_check(traj: Trajectory) -> np.ndarray:
    """L2 norm of ``(c_{k+1} - c_{k-1}) / 2h + (in)^3 c_k - F(c_k)`` at interior samples."""
    if len(traj) < 3:
        raise ValueError(f'residual needs at least 3 samples, got {len(traj)}')
    modes = traj.modes
    wavenumbers = 1j * modes
    cubed_symbol = -1j * modes.astype(np.float64) ** 3
    size = padded_grid_size(traj.mode_cap)
    coeffs = traj.coeffs
    residuals = []
    for k in range(1, len(traj) - 1):
        centered = (coeffs[k + 1] - coeffs[k - 1]) / (2 * traj.dt)
        residual = centered + cubed_symbol * coeffs[k] - _rhs(coeffs[k], wavenumbers, traj.equation, size)
        residuals.append(fl_norm_coeffs(residual, 0.0, 2.0))
    return np.array(residuals)


def sup_distance(a: Trajectory, b: Trajectory, spec: NormSpec = NormSpec(0.5, 2)) -> float:
    """``sup_t || a(t) - b(t) ||_{FL^{s,p}}``."""
    return float(np.max(fl_norm_coeffs(a.coeffs - b.coeffs, spec.s, spec.p)))
