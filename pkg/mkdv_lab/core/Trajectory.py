import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from mkdv_lab.__version__ import __version__
from mkdv_lab.core.Equations import EquationSpec, GaugeSpec
from mkdv_lab.core.Spectral import FourierState, mode_numbers, state_from_csv, state_to_csv

MANIFEST_NAME = 'manifest.json'
STATES_DIR = 'states'


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution: ``coeffs[k]`` is the slice at ``times[k]``.

    ``dt`` is the sample spacing; ``solver_dt`` the integrator step when the
    trajectory was produced by the solver. ``gauges`` is the stack of gauge
    transformations applied since, innermost first.
    """
    times: np.ndarray
    coeffs: np.ndarray
    equation: EquationSpec
    dt: float
    solver_dt: float | None = None
    padded_size: int | None = None
    gauges: tuple[GaugeSpec, ...] = field(default_factory=tuple)
    aborted: bool = False
    diagnostic: str = ''

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64)
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 2 or coeffs.shape[1] % 2 == 0:
            raise ValueError(f'coefficients must have shape (samples, 2M+1), got {coeffs.shape}')
        if times.shape != (coeffs.shape[0],):
            raise ValueError(f'{times.size} times for {coeffs.shape[0]} slices')
        if self.dt <= 0:
            raise ValueError(f'sample spacing must be positive, got {self.dt}')
        if times.size > 1 and not np.allclose(np.diff(times), self.dt, rtol=1e-9, atol=1e-12):
            raise ValueError('trajectory times are not uniformly spaced by dt')
        times.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'coeffs', coeffs)
        object.__setattr__(self, 'dt', float(self.dt))
        object.__setattr__(self, 'gauges', tuple(self.gauges))

    def __len__(self):
        return self.times.size

    @property
    def mode_cap(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.mode_cap)

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self) else 0.0

    def state(self, index: int) -> FourierState:
        return FourierState(self.coeffs[index], self.times[index])

    @property
    def states(self) -> tuple[FourierState, ...]:
        return tuple(self.state(k) for k in range(len(self)))

    @property
    def initial(self) -> FourierState:
        return self.state(0)

    @property
    def final(self) -> FourierState:
        return self.state(-1)

    def with_coeffs(self, coeffs: np.ndarray, **changes) -> 'Trajectory':
        return replace(self, coeffs=coeffs, **changes)

    @classmethod
    def from_states(cls, states, equation: EquationSpec, **metadata) -> 'Trajectory':
        states = list(states)
        if not states:
            raise ValueError('a trajectory needs at least one state')
        caps = {s.mode_cap for s in states}
        if len(caps) != 1:
            raise ValueError(f'states have different mode caps: {sorted(caps)}')
        times = np.array([s.time for s in states])
        dt = metadata.pop('dt', None)
        if dt is None:
            dt = float(times[1] - times[0]) if len(states) > 1 else 1.0
        return cls(times, np.stack([s.coeffs for s in states]), equation, dt, **metadata)


def trajectory_manifest(traj: Trajectory) -> dict:
    return {
        'dt': traj.dt,
        'T': traj.span,
        'M': traj.mode_cap,
        'samples': len(traj),
        't0': float(traj.times[0]),
        'equation': traj.equation.to_dict(),
        'solver_dt': traj.solver_dt,
        'padded_size': traj.padded_size,
        'gauges': [g.to_dict() for g in traj.gauges],
        'aborted': traj.aborted,
        'diagnostic': traj.diagnostic,
        'version': __version__,
    }


def _state_file(index: int) -> str:
    return os.path.join(STATES_DIR, f'state_{index:06d}.csv')


def save_trajectory(traj: Trajectory, directory: str, extra: dict | None = None):
    """Writes ``manifest.json`` plus one ``states/state_NNNNNN.csv`` per slice."""
    os.makedirs(os.path.join(directory, STATES_DIR), exist_ok=True)
    for k, state in enumerate(traj.states):
        state_to_csv(state, os.path.join(directory, _state_file(k)))
    manifest = {**trajectory_manifest(traj), **(extra or {})}
    with open(os.path.join(directory, MANIFEST_NAME), 'w') as f:
        f.write(json.dumps(manifest, indent=4, sort_keys=True))


def load_trajectory(directory: str) -> Trajectory:
    with open(os.path.join(directory, MANIFEST_NAME)) as f:
        manifest = json.load(f)
    t0, dt = manifest['t0'], manifest['dt']
    states = [state_from_csv(os.path.join(directory, _state_file(k)), t0 + k * dt)
              for k in range(manifest['samples'])]
    return Trajectory.from_states(
        states,
        EquationSpec.from_dict(manifest['equation']),
        dt=dt,
        solver_dt=manifest.get('solver_dt'),
        padded_size=manifest.get('padded_size'),
        gauges=tuple(GaugeSpec.from_dict(g) for g in manifest.get('gauges', [])),
        aborted=manifest.get('aborted', False),
        diagnostic=manifest.get('diagnostic', ''),
    )
