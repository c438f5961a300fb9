"""Plants, controllers and quantized feedback loops.

Every plant exposes ``n``, ``m`` and a batch-capable ``step(x, u)``: ``x``
may be a single state ``(n,)`` or a stack ``(N, n)``; ``u`` is ``(m,)`` or
``(N, m)``.  Cell-map builders rely on this to evaluate all cell centers
in one call.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DivergenceError, DomainError, SolverError
from .quantization import QuantizerSpec, VectorQuantizerSpec, requantize, requantize_vector

__all__ = [
    "DiscreteLTI",
    "ContinuousODE",
    "SampledODE",
    "QuantizedLoop",
    "CostKind",
    "CostDiscretization",
    "CostSpec",
    "Trace",
    "step_discrete",
    "integrate_rk4",
    "discretize_zoh",
    "lqr_gain",
    "loop_step",
    "simulate",
    "stage_cost_raw",
    "linear_ode",
    "double_integrator",
    "harmonic_oscillator",
    "dc_motor",
    "terminal_amplitude",
]


def _as_matrix(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class DiscreteLTI:
    """``x(k+1) = A x(k) + B u(k)``; ``T`` is the sampling period (metadata)."""

    A: np.ndarray
    B: np.ndarray
    T: float | None = None

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if B.size == 0:
            B = np.zeros((A.shape[0], 0))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise DomainError(f"inconsistent shapes A{A.shape} B{B.shape}")
        if not np.all(np.isfinite(B)):
            raise DomainError("B has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x, u):
        return step_discrete(self, x, u)


def step_discrete(model: DiscreteLTI, x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape[-1] != model.n or (model.m and u.shape[-1] != model.m):
        raise DomainError(f"dimension mismatch: x{x.shape} u{u.shape} for n={model.n}, m={model.m}")
    out = x @ model.A.T
    if model.m:
        out = out + u @ model.B.T
    return out


@dataclass(frozen=True)
class ContinuousODE:
    """Vector field ``f(x, u)``; ``f`` must accept stacked ``(N, n)``/``(N, m)`` arrays.

    Linear systems also carry ``Ac``/``Bc`` so they can be ZOH-discretized.
    """

    f: Callable
    n: int
    m: int
    Ac: np.ndarray | None = None
    Bc: np.ndarray | None = None
    name: str = "ode"


def linear_ode(Ac, Bc, name="linear") -> ContinuousODE:
    Ac = _as_matrix(Ac, "Ac")
    Bc = np.asarray(Bc, dtype=float).reshape(Ac.shape[0], -1)

    def f(x, u):
        return x @ Ac.T + u @ Bc.T

    return ContinuousODE(f, Ac.shape[0], Bc.shape[1], Ac, Bc, name)


def double_integrator() -> ContinuousODE:
    return linear_ode([[0, 1], [0, 0]], [[0], [1]], "double-integrator")


def harmonic_oscillator(omega: float = 1.0) -> ContinuousODE:
    return linear_ode([[0, 1], [-omega**2, 0]], [[0], [1]], "harmonic-oscillator")


def dc_motor(tau: float = 0.283, k: float = 0.906, form: str = "position") -> ContinuousODE:
    """DC motor, ``x1`` angle and ``x2`` angular velocity.

    ``form="position"`` uses ``x2' = -x1/tau + (k/tau) u`` as written for the
    minimum-time example; ``form="velocity"`` is the textbook armature model
    ``x2' = -x2/tau + (k/tau) u``.
    """
    if form == "position":
        Ac = [[0, 1], [-1 / tau, 0]]
    elif form == "velocity":
        Ac = [[0, 1], [0, -1 / tau]]
    else:
        raise DomainError(f"unknown dc-motor form {form!r}")
    return linear_ode(Ac, [[0], [k / tau]], "dc-motor")


def integrate_rk4(ode: ContinuousODE, x, u, T: float, substeps: int = 4):
    """Classical fixed-step RK4 over ``[0, T]`` with ``u`` held constant."""
    if not T > 0 or substeps < 1:
        raise DomainError("need T > 0 and substeps >= 1")
    x = np.asarray(x, dtype=float)
    u = np.broadcast_to(np.asarray(u, dtype=float), x.shape[:-1] + (ode.m,))
    h = T / substeps
    f = ode.f
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(substeps):
            k1 = f(x, u)
            k2 = f(x + 0.5 * h * k1, u)
            k3 = f(x + 0.5 * h * k2, u)
            k4 = f(x + h * k3, u)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise DivergenceError("RK4 produced a non-finite state")
    return x


@dataclass(frozen=True)
class SampledODE:
    """A continuous plant sampled every ``T`` seconds under zero-order hold."""

    ode: ContinuousODE
    T: float
    substeps: int = 4

    @property
    def n(self) -> int:
        return self.ode.n

    @property
    def m(self) -> int:
        return self.ode.m

    def step(self, x, u):
        return integrate_rk4(self.ode, x, u, self.T, self.substeps)


def discretize_zoh(Ac, Bc, T: float):
    """Exact zero-order-hold discretization via the augmented matrix exponential.

    Returns ``(Ad, Bd)`` with ``Ad = exp(Ac T)`` and
    ``Bd = int_0^T exp(Ac s) Bc ds``.
    """
    if not T > 0:
        raise DomainError("sampling period must be positive")
    Ac = _as_matrix(Ac, "Ac")
    Bc = np.asarray(Bc, dtype=float).reshape(Ac.shape[0], -1)
    n, m = Bc.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = Ac
    aug[:n, n:] = Bc
    # scipy's expm is Pade with scaling-and-squaring
    E = scipy.linalg.expm(aug * T)
    return E[:n, :n], E[:n, n:]


def lqr_gain(Ad, Bd, Q, R, tol: float = 1e-12, max_iter: int = 1_000_000):
    """Infinite-horizon discrete LQR gain, ``u = -K x``.

    Iterates the Riccati recursion from ``P = Q`` until successive iterates
    differ by less than ``tol`` in max norm.
    """
    A = _as_matrix(Ad, "Ad")
    B = np.asarray(Bd, dtype=float).reshape(A.shape[0], -1)
    Q = _as_matrix(Q, "Q")
    R = _as_matrix(R, "R")
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        S = R + BtP @ B
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(S, BtP @ A)
        if not np.all(np.isfinite(P_next)):
            raise SolverError("Riccati iteration diverged")
        if np.max(np.abs(P_next - P)) < tol:
            P = P_next
            break
        P = P_next
    else:
        raise SolverError(f"Riccati iteration did not converge in {max_iter} steps")
    return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


@dataclass(frozen=True)
class QuantizedLoop:
    """Plant with optional state feedback and converter stages.

    ``ad`` quantizes only the measurement fed to the controller; the plant
    always advances from its true state.  ``da`` quantizes the control,
    either the actuator signal ``u`` (``da_on="input"``) or the product
    ``B u`` (``da_on="bu"``, for a linear plant).  ``roundoff`` rounds the
    stored state itself after every update, modelling a fixed-point state
    register.
    """

    plant: object
    gain: np.ndarray | None = None
    ad: VectorQuantizerSpec | None = None
    da: QuantizerSpec | None = None
    roundoff: VectorQuantizerSpec | None = None
    da_on: str = "input"

    def __post_init__(self):
        if self.gain is not None:
            K = np.atleast_2d(np.asarray(self.gain, dtype=float))
            if K.shape != (self.plant.m, self.plant.n):
                raise DomainError(f"gain shape {K.shape} != ({self.plant.m}, {self.plant.n})")
            object.__setattr__(self, "gain", K)
        if self.ad is not None and len(self.ad) != self.plant.n:
            raise DomainError("A/D dimension does not match the state")
        if self.roundoff is not None and len(self.roundoff) != self.plant.n:
            raise DomainError("round-off quantizer dimension does not match the state")
        if self.da_on not in ("input", "bu"):
            raise DomainError(f"da_on must be 'input' or 'bu', got {self.da_on!r}")
        if self.da_on == "bu" and not isinstance(self.plant, DiscreteLTI):
            raise DomainError("quantizing B*u needs a DiscreteLTI plant")

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m

    def without_quantizers(self) -> "QuantizedLoop":
        return QuantizedLoop(self.plant, self.gain)

    def control(self, x, u_ext=None):
        """Control actually applied at state ``x`` (after the D/A stage)."""
        x = np.asarray(x, dtype=float)
        if u_ext is not None and self.gain is not None:
            raise DomainError("loop has a feedback gain; an external control is ambiguous")
        if u_ext is not None:
            u = np.broadcast_to(np.asarray(u_ext, dtype=float), x.shape[:-1] + (self.m,))
        elif self.gain is not None:
            meas = requantize_vector(x, self.ad) if self.ad is not None else x
            u = -(meas @ self.gain.T)
        elif self.m == 0:
            u = np.zeros(x.shape[:-1] + (0,))
        else:
            raise DomainError("loop has no feedback gain and no external control was given")
        if self.da is not None and self.da_on == "input":
            u = requantize(u, self.da)
        return np.asarray(u, dtype=float)

    def step(self, x, u_ext=None):
        return loop_step(self, x, u_ext)


def loop_step(loop: QuantizedLoop, x, u_ext=None):
    """One sampling period of the loop from the true state ``x``."""
    x = np.asarray(x, dtype=float)
    u = loop.control(x, u_ext)
    if loop.da is not None and loop.da_on == "bu":
        nxt = x @ loop.plant.A.T + requantize(u @ loop.plant.B.T, loop.da)
    else:
        nxt = loop.plant.step(x, u)
    if loop.roundoff is not None:
        nxt = requantize_vector(nxt, loop.roundoff)
    return nxt


class CostKind(enum.Enum):
    QUADRATIC_X1U = "quadratic-x1u"
    MINIMUM_TIME = "minimum-time"


@dataclass(frozen=True)
class CostDiscretization:
    """Bin the raw one-step cost into ``levels`` equal bins over ``[lo, hi]``.

    A cost in bin ``j`` is relabelled ``label_offset + j``; the default
    offset equals ``levels`` so 16 bins give the labels 16..31.
    """

    levels: int
    lo: float
    hi: float
    label_offset: float | None = None

    def __post_init__(self):
        if self.levels < 1 or not self.lo < self.hi:
            raise DomainError("cost discretization needs levels >= 1 and lo < hi")
        if self.label_offset is None:
            object.__setattr__(self, "label_offset", float(self.levels))

    def apply(self, raw):
        width = (self.hi - self.lo) / self.levels
        j = np.clip(np.floor((np.asarray(raw) - self.lo) / width), 0, self.levels - 1)
        return self.label_offset + j


@dataclass(frozen=True)
class CostSpec:
    kind: CostKind = CostKind.QUADRATIC_X1U
    period: float = 1.0
    discretize: CostDiscretization | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind(self.kind))
        if self.kind is CostKind.MINIMUM_TIME and not self.period > 0:
            raise DomainError("minimum-time cost needs a positive period")

    @property
    def uniform(self) -> bool:
        return self.kind is CostKind.MINIMUM_TIME and self.discretize is None


def stage_cost_raw(x, u, spec: CostSpec):
    """Undiscretized one-step cost; broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if spec.kind is CostKind.MINIMUM_TIME:
        return np.full(np.broadcast_shapes(x.shape[:-1], u.shape[:-1]), spec.period)
    return x[..., 0] ** 2 + np.sum(u**2, axis=-1)


@dataclass
class Trace:
    """Closed-loop run: ``states`` is ``(steps+1, n)``, ``controls`` ``(steps, m)``,
    ``costs`` the per-step raw costs (empty when no cost was requested)."""

    states: np.ndarray
    controls: np.ndarray
    costs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.costs))

    def __len__(self):
        return len(self.states)


def simulate(loop: QuantizedLoop, x0, steps: int, cost: CostSpec | None = None,
             guard: tuple | None = None, u_ext=None) -> Trace:
    """Iterate :func:`loop_step` ``steps`` times from ``x0``.

    With a round-off stage the initial state is first rounded onto the
    register lattice.  ``guard`` is a ``(lo, hi)`` box; leaving it raises
    :class:`DivergenceError`.
    """
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != loop.n:
        raise DomainError(f"x0 has {x.shape[0]} components, plant has {loop.n}")
    if loop.roundoff is not None:
        x = requantize_vector(x, loop.roundoff)
    states = np.empty((steps + 1, loop.n))
    controls = np.empty((steps, loop.m))
    costs = np.empty(steps if cost is not None else 0)
    states[0] = x
    for k in range(steps):
        u = loop.control(x, u_ext)
        controls[k] = u
        if cost is not None:
            costs[k] = stage_cost_raw(x, u, cost)
        x = loop_step(loop, x, u_ext)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"state became non-finite at step {k + 1}")
        if guard is not None and (np.any(x < guard[0]) or np.any(x > guard[1])):
            raise DivergenceError(f"state left the guard box at step {k + 1}: {x}")
        states[k + 1] = x
    return Trace(states, controls, costs)


def terminal_amplitude(trace: Trace, window: int = 200) -> float:
    """Largest absolute state component over the last ``window`` samples."""
    return float(np.max(np.abs(trace.states[-window:])))
