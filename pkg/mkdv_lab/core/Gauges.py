"""Gauge transformations between the mKdV, mKdV1 and mKdV2 flows.

G1 translates by ``sign * mu * t`` (``c(n) -> e^{-i sign n mu t} c(n)``), mapping
mKdV solutions to mKdV1 solutions. G2 is the global phase ``e^{-i sign P t}``,
mapping mKdV1 solutions to mKdV2 solutions. Both are realised on the Fourier
side, slice by slice.
"""
import logging

import numpy as np

from mkdv_lab.core.Equations import EquationSpec, GaugeKind, GaugeSpec
from mkdv_lab.core.Norms import coeffs_mass, coeffs_momentum
from mkdv_lab.core.Trajectory import Trajectory

logger = logging.getLogger(__name__)


class GaugeMismatchError(ValueError):
    pass


def gauge_phases(spec: GaugeSpec, times: np.ndarray, modes: np.ndarray) -> np.ndarray:
    """Unimodular multipliers of shape ``(len(times), len(modes))``."""
    if spec.which == GaugeKind.G1:
        angle = -spec.sign * spec.scalar * np.outer(times, modes.astype(np.float64))
    else:
        angle = np.broadcast_to((-spec.sign * spec.scalar * times)[:, None], (times.size, modes.size))
    if spec.inverse:
        angle = -angle
    return np.exp(1j * angle)


def _check_sign(traj: Trajectory, sign: int):
    if sign != traj.equation.sign:
        raise GaugeMismatchError(f'gauge sign {sign:+d} does not match the equation sign {traj.equation.sign:+d}')


def _push(traj: Trajectory, spec: GaugeSpec) -> Trajectory:
    equation = EquationSpec(spec.target_variant(traj.equation.variant), traj.equation.sign)
    return traj.with_coeffs(traj.coeffs * gauge_phases(spec, traj.times, traj.modes),
                            equation=equation, gauges=traj.gauges + (spec,))


def apply_gauge1(traj: Trajectory, sign: int, mu: float | None = None) -> Trajectory:
    """Moving-frame translation; ``mu`` defaults to the mass of the initial slice."""
    _check_sign(traj, sign)
    if mu is None:
        mu = float(coeffs_mass(traj.coeffs[0]))
    return _push(traj, GaugeSpec(GaugeKind.G1, sign, mu))


def apply_gauge2(traj: Trajectory, sign: int, P0: float | None = None) -> Trajectory:
    """Global phase rotation; ``P0`` defaults to the momentum of the initial slice."""
    _check_sign(traj, sign)
    if P0 is None:
        P0 = float(coeffs_momentum(traj.coeffs[0]))
    return _push(traj, GaugeSpec(GaugeKind.G2, sign, P0))


def invert_gauge(traj: Trajectory, spec: GaugeSpec) -> Trajectory:
    """Undoes ``spec``.

    On a gauged trajectory ``spec`` must equal the most recently applied gauge,
    which is then popped. On an ungauged trajectory the inverse map is applied
    and recorded.
    """
    _check_sign(traj, spec.sign)
    if not traj.gauges:
        logger.debug('Inverting %s on an ungauged trajectory', spec.which.value)
        return _push(traj, spec.inverted())
    top = traj.gauges[-1]
    if not top.matches(spec):
        raise GaugeMismatchError(f'cannot invert {spec.to_dict()}: last applied gauge is {top.to_dict()}')
    equation = EquationSpec(spec.inverted().target_variant(traj.equation.variant), traj.equation.sign)
    return traj.with_coeffs(traj.coeffs * np.conj(gauge_phases(top, traj.times, traj.modes)),
                            equation=equation, gauges=traj.gauges[:-1])
