"""Trap configuration and the force signals that can be injected into it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .halo import WindTrack, wind_angle


def _vec3(value, name) -> tuple[float, float, float]:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.repeat(arr, 3)
    if arr.size != 3:
        raise ValueError(f"{name} must have 3 components")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return tuple(float(a) for a in arr)


@dataclass(frozen=True)
class GasEnvironment:
    pressure: float  # Pa
    gas_mass: float  # kg
    gas_velocity: float  # m/s


@dataclass(frozen=True)
class TrapConfig:
    """Physical identity of a levitated sensor.

    ``omega`` and ``gamma`` are angular frequencies (rad/s) per axis, gamma
    being the energy damping rate; ``temp_cm`` is the centre-of-mass bath
    temperature per axis.  ``detector_rotation`` is the misalignment of the
    lab x-y detectors relative to the normal modes.
    """

    mass: float
    omega: tuple[float, float, float]
    gamma: tuple[float, float, float]
    temp_cm: tuple[float, float, float]
    detector_rotation: float = 0.0
    gas: GasEnvironment | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))
        object.__setattr__(self, "gamma", _vec3(self.gamma, "gamma"))
        object.__setattr__(self, "temp_cm", _vec3(self.temp_cm, "temp_cm"))
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if min(self.omega) <= 0:
            raise ValueError("omega must be positive on every axis")
        if min(self.gamma) < 0:
            raise ValueError("gamma must be non-negative")
        if min(self.temp_cm) < 0:
            raise ValueError("temp_cm must be non-negative")
        if not -math.pi / 2 < self.detector_rotation <= math.pi / 2:
            raise ValueError("detector_rotation must lie in (-pi/2, pi/2]")


@dataclass(frozen=True)
class Constant:
    vector: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "vector", _vec3(self.vector, "vector"))


@dataclass(frozen=True)
class Impulse:
    delta_p: tuple[float, float, float]
    t0: float

    def __post_init__(self):
        object.__setattr__(self, "delta_p", _vec3(self.delta_p, "delta_p"))


@dataclass(frozen=True)
class Harmonic:
    """F(t) = amplitude * cos(freq * t + phase) along ``direction``; freq in rad/s."""

    amplitude: float
    freq: float
    phase: float = 0.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        d = _vec3(self.direction, "direction")
        if abs(math.sqrt(sum(c * c for c in d)) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class DirectionalStochastic:
    """White force noise along (cos psi, sin psi, 0).

    ``s_force`` is the one-sided force PSD in N^2/Hz.  ``psi`` is either a
    fixed angle or a :class:`WindTrack`, evaluated at the run epoch.
    """

    s_force: float
    psi: Union[float, WindTrack] = 0.0

    def __post_init__(self):
        if not self.s_force >= 0:
            raise ValueError("s_force must be non-negative")

    def angle(self, epoch: float = 0.0) -> float:
        if isinstance(self.psi, WindTrack):
            return wind_angle(self.psi, epoch)
        return float(self.psi)


@dataclass(frozen=True)
class UncorrelatedBath:
    """Independent white force noise per axis, one-sided PSD in N^2/Hz."""

    s_force: tuple[float, float, float]

    def __post_init__(self):
        s = _vec3(self.s_force, "s_force")
        if min(s) < 0:
            raise ValueError("s_force must be non-negative")
        object.__setattr__(self, "s_force", s)


ForceSignal = Union[Constant, Impulse, Harmonic, DirectionalStochastic, UncorrelatedBath]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled 3D motion.

    ``positions`` and ``velocities`` have shape (3, n_samples).  ``dt`` is
    the sampling interval; ``integrator_dt`` the step the integrator used.
    ``rotation`` is the cumulative detector-frame rotation applied to x-y.
    """

    dt: float
    positions: np.ndarray
    velocities: np.ndarray
    seed: int
    trap: TrapConfig
    signals: tuple = ()
    integrator_dt: float | None = None
    rotation: float = 0.0
    backend: str = ""
    epoch: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        # read-only views; trajectories can be hundreds of MB so avoid copies
        pos = np.asarray(self.positions, dtype=float).view()
        vel = np.asarray(self.velocities, dtype=float).view()
        if pos.shape != vel.shape or pos.ndim != 2 or pos.shape[0] != 3:
            raise ValueError("positions and velocities must both have shape (3, n)")
        pos.flags.writeable = False
        vel.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "signals", tuple(self.signals))

    @property
    def n_samples(self) -> int:
        return self.positions.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt
