"""Three-level lambda-system model and piecewise-constant dynamics.

The system has two lower levels |1>, |2> coupled to an upper level |3>
(the direct 1<->2 transition is forbidden). A scalar control multiplies
the coupling operator, the pulse is piecewise constant, and the figure of
merit is the expectation of a diagonal observable in the final state,
which reduces to ``J = P_{1->2} - penalty * P_{1->3}`` after
normalization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import HERMITIAN_TOL, hermiticity_defect

__all__ = [
    "OrderingViolationError",
    "normalize_observable",
    "PiecewiseControl",
    "LambdaSystem",
    "default_system",
    "propagate",
    "objective",
    "transition_prob",
    "gradient",
    "objective_and_gradient",
    "finite_diff_gradient",
]


class OrderingViolationError(ValueError):
    """Raised when observable weights do not satisfy o2 > o1 > o3."""


def normalize_observable(raw) -> tuple[tuple[float, float, float], float]:
    """Map observable weights (o1, o2, o3) to the canonical (0, 1, -penalty).

    The affine map ``(O - o1 I) / (o2 - o1)`` does not move critical points
    of the landscape, so optimization problems are stated in the normalized
    form. Requires the strict ordering o2 > o1 > o3.

    Returns the normalized triple and the penalty (``-o3`` after the map,
    always positive).
    """
    o1, o2, o3 = (float(x) for x in raw)
    if not (o2 > o1 > o3):
        raise OrderingViolationError(
            f"observable weights must satisfy o2 > o1 > o3, got ({o1}, {o2}, {o3})"
        )
    scale = o2 - o1
    normalized = (0.0, 1.0, (o3 - o1) / scale)
    return normalized, -normalized[2]


@dataclass(frozen=True)
class PiecewiseControl:
    """Piecewise-constant control: ordered (duration, amplitude) segments.

    Durations are strictly positive; the horizon is their sum. Segment
    grids may be non-uniform so that special switching times (e.g. the
    escape pulse's 2*pi/omega1) can sit exactly on a boundary.
    """

    durations: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        durations = np.array(self.durations, dtype=float)
        amplitudes = np.array(self.amplitudes, dtype=float)
        if durations.ndim != 1 or amplitudes.ndim != 1:
            raise ValueError("durations and amplitudes must be 1-D")
        if durations.shape != amplitudes.shape:
            raise ValueError("durations and amplitudes must have equal length")
        if durations.size == 0:
            raise ValueError("control needs at least one segment")
        if not np.all(np.isfinite(durations)) or not np.all(np.isfinite(amplitudes)):
            raise ValueError("control entries must be finite")
        if np.any(durations <= 0.0):
            raise ValueError("all segment durations must be strictly positive")
        durations.setflags(write=False)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def uniform(cls, total_time: float, amplitudes) -> "PiecewiseControl":
        """Build a control on a uniform grid: len(amplitudes) equal segments."""
        amplitudes = np.asarray(amplitudes, dtype=float)
        m = amplitudes.size
        if m == 0:
            raise ValueError("control needs at least one segment")
        if total_time <= 0.0:
            raise ValueError("total_time must be positive")
        return cls(np.full(m, float(total_time) / m), amplitudes)

    @property
    def segments(self) -> int:
        return int(self.durations.size)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.durations))

    @property
    def boundaries(self) -> np.ndarray:
        """Segment boundary times t_0 = 0 < t_1 < ... < t_M."""
        return np.concatenate(([0.0], np.cumsum(self.durations)))

    def scaled(self, factor: float) -> "PiecewiseControl":
        """Same grid, amplitudes multiplied by ``factor``."""
        return PiecewiseControl(self.durations, self.amplitudes * float(factor))

    def with_amplitudes(self, amplitudes) -> "PiecewiseControl":
        """Same grid, new amplitude vector."""
        return PiecewiseControl(self.durations, amplitudes)


@dataclass(frozen=True)
class LambdaSystem:
    """Lambda-system data: level energies, coupling operator, initial level,
    diagonal observable and its penalty weight.

    ``observable`` is the stored diagonal triple (normalized to
    ``(0, 1, -penalty)`` unless constructed otherwise); ``penalty`` is the
    weight of the unwanted 1->3 transfer in the normalized objective.
    Levels are 1-indexed throughout the public API.
    """

    energies: np.ndarray
    coupling: np.ndarray
    observable: np.ndarray
    penalty: float
    initial_level: int = 1

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float)
        coupling = np.array(self.coupling, dtype=complex)
        observable = np.array(self.observable, dtype=float)
        for arr in (energies, coupling, observable):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "observable", observable)

    @classmethod
    def create(
        cls,
        energies=(0.0, 1.0, 2.5),
        v13: complex = 1.0,
        v23: complex = 1.7,
        penalty: float = 5.0,
        raw_observable=None,
        initial_level: int = 1,
        v12: complex = 0.0,
        validate: bool = True,
    ) -> "LambdaSystem":
        """Assemble and validate a lambda system.

        By default the observable is the normalized ``(0, 1, -penalty)``;
        passing ``raw_observable`` instead stores the raw triple (its
        penalty is still the one the normalized form would carry).
        ``v12`` must stay zero for a physical lambda system; it exists so
        negative-control checks can inject a forbidden coupling together
        with ``validate=False``.
        """
        coupling = np.array(
            [
                [0.0, v12, v13],
                [np.conjugate(v12), 0.0, v23],
                [np.conjugate(v13), np.conjugate(v23), 0.0],
            ],
            dtype=complex,
        )
        if raw_observable is not None:
            _, penalty = normalize_observable(raw_observable)
            observable = np.asarray(raw_observable, dtype=float)
        else:
            penalty = float(penalty)
            if penalty < 0.0:
                raise ValueError("penalty must be nonnegative")
            observable = np.array([0.0, 1.0, -penalty])
        system = cls(
            energies=np.asarray(energies, dtype=float),
            coupling=coupling,
            observable=observable,
            penalty=penalty,
            initial_level=int(initial_level),
        )
        if validate:
            system.validate()
        return system

    def validate(self) -> None:
        """Check the lambda-structure invariants; raise ValueError on failure."""
        if self.energies.shape != (3,):
            raise ValueError("energies must be a triple")
        if self.coupling.shape != (3, 3):
            raise ValueError("coupling must be 3x3")
        if hermiticity_defect(self.coupling) > HERMITIAN_TOL:
            raise ValueError("coupling operator must be Hermitian")
        v = self.coupling
        if v[0, 1] != 0 or v[1, 0] != 0:
            raise ValueError("lambda structure requires V12 = V21 = 0")
        if np.any(np.diag(v) != 0):
            raise ValueError("lambda structure requires zero diagonal coupling")
        if v[0, 2] == 0 or v[1, 2] == 0:
            raise ValueError("controllability requires V13 != 0 and V23 != 0")
        w1, w2 = self.omega1, self.omega2
        if not (w1 > 0.0 and w2 > 0.0 and w2 < w1):
            raise ValueError(
                f"transition frequencies must satisfy 0 < omega2 < omega1, "
                f"got omega1={w1}, omega2={w2}"
            )
        if self.initial_level not in (1, 2, 3):
            raise ValueError("initial_level must be 1, 2 or 3")
        o1, o2, o3 = self.observable
        # o3 == o1 is the penalty-free boundary (pure transfer study);
        # raw observables fed through normalize_observable stay strict.
        if not (o2 > o1 >= o3):
            raise ValueError(
                f"observable weights must satisfy o2 > o1 >= o3, got ({o1}, {o2}, {o3})"
            )

    @property
    def omega1(self) -> float:
        """Frequency of the allowed 1->3 transition."""
        return float(self.energies[2] - self.energies[0])

    @property
    def omega2(self) -> float:
        """Frequency of the allowed 2->3 transition."""
        return float(self.energies[2] - self.energies[1])

    @property
    def h0(self) -> np.ndarray:
        """Free Hamiltonian diag(energies) as a complex matrix."""
        return np.diag(self.energies).astype(complex)

    @property
    def initial_index(self) -> int:
        """0-based index of the initial level."""
        return self.initial_level - 1


def default_system(penalty: float = 5.0) -> LambdaSystem:
    """The package's reference parameters: energies (0, 1, 2.5), V13=1, V23=1.7."""
    return LambdaSystem.create(penalty=penalty)


def _segment_unitaries(system: LambdaSystem, control: PiecewiseControl) -> np.ndarray:
    """Exact per-segment propagators exp(-i (H0 + c_k V) dt_k), shape (M, 3, 3)."""
    amplitudes = control.amplitudes
    h = system.h0[None, :, :] + amplitudes[:, None, None] * system.coupling[None, :, :]
    values, vectors = np.linalg.eigh(h)
    phases = np.exp(-1j * values * control.durations[:, None])
    units = (vectors * phases[:, None, :]) @ np.conjugate(np.transpose(vectors, (0, 2, 1)))
    # Zero-amplitude segments have an exactly diagonal generator; write the
    # diagonal exponential directly so the free propagator carries no
    # off-diagonal roundoff (the zero control must be an exact critical point).
    for k in np.flatnonzero(amplitudes == 0.0):
        units[k] = np.diag(np.exp(-1j * system.energies * control.durations[k]))
    return units


def propagate(
    system: LambdaSystem, control: PiecewiseControl
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate the system through every control segment.

    Returns
    -------
    (U_T, prefixes)
        The final propagator and the cached prefix products
        ``W_l = U_l ... U_1`` for l = 1..M, shape (M, 3, 3). The prefixes
        feed the analytic gradient, which needs one propagation only.
    """
    units = _segment_unitaries(system, control)
    m = units.shape[0]
    prefixes = np.empty_like(units)
    acc = units[0]
    prefixes[0] = acc
    for k in range(1, m):
        acc = units[k] @ acc
        prefixes[k] = acc
    return prefixes[-1], prefixes


def objective(system: LambdaSystem, control: PiecewiseControl) -> float:
    """Final-state expectation of the observable, Tr[U rho0 U^dag O]."""
    u_final, _ = propagate(system, control)
    column = u_final[:, system.initial_index]
    return float(np.dot(system.observable, np.abs(column) ** 2))


def transition_prob(
    system: LambdaSystem, control: PiecewiseControl, i: int, f: int
) -> float:
    """Transition probability |<f|U_T|i>|^2 between 1-indexed levels."""
    for level in (i, f):
        if level not in (1, 2, 3):
            raise IndexError(f"level index {level} outside 1..3")
    u_final, _ = propagate(system, control)
    return float(np.abs(u_final[f - 1, i - 1]) ** 2)


def _gradient_from_prefixes(
    system: LambdaSystem,
    control: PiecewiseControl,
    prefixes: np.ndarray,
) -> np.ndarray:
    u_final = prefixes[-1]
    i0 = system.initial_index
    column = u_final[:, i0]
    weighted = u_final.conj().T @ (system.observable * column)
    forward = prefixes[:, :, i0]
    backward = prefixes @ weighted
    overlap = np.einsum("la,ab,lb->l", backward.conj(), system.coupling, forward)
    return 2.0 * control.durations * np.imag(overlap)


def gradient(system: LambdaSystem, control: PiecewiseControl) -> np.ndarray:
    """Analytic objective gradient with respect to the segment amplitudes.

    Implements ``dJ/dc_l = 2 dt_l Im Tr[W_l^dag V W_l rho0 U_T^dag O U_T]``,
    the leading-order-in-dt expression; the finite-difference comparison
    tolerance therefore shrinks with the grid spacing.
    """
    _, prefixes = propagate(system, control)
    return _gradient_from_prefixes(system, control, prefixes)


def objective_and_gradient(
    system: LambdaSystem, control: PiecewiseControl
) -> tuple[float, np.ndarray]:
    """Objective and analytic gradient from a single propagation."""
    u_final, prefixes = propagate(system, control)
    column = u_final[:, system.initial_index]
    value = float(np.dot(system.observable, np.abs(column) ** 2))
    return value, _gradient_from_prefixes(system, control, prefixes)


def finite_diff_gradient(
    system: LambdaSystem, control: PiecewiseControl, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient, the independent check on :func:`gradient`."""
    if h <= 0.0:
        raise ValueError("step h must be positive")
    base = control.amplitudes
    grad = np.empty_like(base)
    for l in range(base.size):
        bumped = base.copy()
        bumped[l] = base[l] + h
        plus = objective(system, control.with_amplitudes(bumped))
        bumped[l] = base[l] - h
        minus = objective(system, control.with_amplitudes(bumped))
        grad[l] = (plus - minus) / (2.0 * h)
    return grad
