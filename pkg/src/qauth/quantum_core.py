"""Dense density-matrix simulation for the 1-3 qubit authentication circuits.

States carry register labels (``"C"``, ``"T"``, ``"A"``) instead of relying on
positional ordering. The first label is the most significant bit of the basis
index, so a ``("C", "T")`` state has basis order ``|c t>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
ZX = Z @ X
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def controlled(gate: np.ndarray, on_value: int = 1) -> np.ndarray:
    """4x4 gate acting as ``gate`` on the second qubit when the first equals ``on_value``."""
    if on_value == 1:
        return np.kron(P0, I2) + np.kron(P1, gate)
    return np.kron(P0, gate) + np.kron(P1, I2)


CX = controlled(X)
CZX = controlled(ZX)
ANTI_CX = controlled(X, on_value=0)


class QuantumStateError(ValueError):
    pass


@dataclass(frozen=True)
class QuantumState:
    """Immutable labeled density matrix over 1-3 qubits."""

    matrix: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))
        n = len(self.labels)
        if n < 1 or n > 3:
            raise QuantumStateError("supports 1 to 3 qubits")
        if len(set(self.labels)) != n:
            raise QuantumStateError(f"duplicate register labels {self.labels}")
        if m.shape != (2**n, 2**n):
            raise QuantumStateError(f"matrix shape {m.shape} does not match {n} qubits")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @classmethod
    def from_ket(cls, ket: Sequence[complex], labels: Sequence[str]) -> "QuantumState":
        v = np.asarray(ket, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), tuple(labels))

    @classmethod
    def basis(cls, bits: Sequence[int], labels: Sequence[str]) -> "QuantumState":
        index = int("".join(str(int(b)) for b in bits), 2)
        ket = np.zeros(2 ** len(bits), dtype=complex)
        ket[index] = 1.0
        return cls.from_ket(ket, labels)

    @classmethod
    def maximally_mixed(cls, labels: Sequence[str]) -> "QuantumState":
        d = 2 ** len(labels)
        return cls(np.eye(d, dtype=complex) / d, tuple(labels))

    def check(self) -> None:
        """Raise :class:`QuantumStateError` unless the matrix is a valid density matrix."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise QuantumStateError("matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise QuantumStateError(f"trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < PSD_TOL:
            raise QuantumStateError("matrix is not positive semidefinite")

    def is_valid(self) -> bool:
        try:
            self.check()
        except QuantumStateError:
            return False
        return True

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    def tensor(self, other: "QuantumState") -> "QuantumState":
        return QuantumState(np.kron(self.matrix, other.matrix), self.labels + other.labels)

    def reorder(self, labels: Sequence[str]) -> "QuantumState":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise QuantumStateError(f"cannot reorder {self.labels} to {labels}")
        n = self.num_qubits
        perm = [self.labels.index(lab) for lab in labels]
        t = self.matrix.reshape((2,) * (2 * n))
        t = t.transpose(perm + [p + n for p in perm])
        return QuantumState(t.reshape(self.dim, self.dim), labels)

    def apply(self, op: np.ndarray, on: Sequence[str]) -> "QuantumState":
        """Conjugate by ``op`` acting on registers ``on`` (in the given order)."""
        return self.apply_kraus([op], on)

    def apply_kraus(self, kraus: Sequence[np.ndarray], on: Sequence[str]) -> "QuantumState":
        on = tuple(on)
        for lab in on:
            if lab not in self.labels:
                raise QuantumStateError(f"unknown register {lab!r}")
        rest = tuple(lab for lab in self.labels if lab not in on)
        work = self.reorder(on + rest)
        full = [np.kron(k, np.eye(2 ** len(rest))) for k in kraus]
        out = sum(k @ work.matrix @ k.conj().T for k in full)
        return QuantumState(out, on + rest).reorder(self.labels)

    def partial_trace(self, register: str | Sequence[str]) -> "QuantumState":
        """Trace out one register (or several) and return the reduced state."""
        drop = (register,) if isinstance(register, str) else tuple(register)
        for lab in drop:
            if lab not in self.labels:
                raise QuantumStateError(f"unknown register {lab!r}")
        keep = tuple(lab for lab in self.labels if lab not in drop)
        if not keep:
            raise QuantumStateError("cannot trace out every register")
        work = self.reorder(keep + drop)
        dk, dd = 2 ** len(keep), 2 ** len(drop)
        t = work.matrix.reshape(dk, dd, dk, dd)
        return QuantumState(np.einsum("ajbj->ab", t), keep)


@dataclass(frozen=True)
class MeasurementResult:
    outcome: int
    post_state: QuantumState
    probability: float


def outcome_probabilities(state: QuantumState, register: str) -> np.ndarray:
    """Computational-basis outcome probabilities ``[p0, p1]`` for one register."""
    reduced = state.partial_trace([lab for lab in state.labels if lab != register])
    p = np.clip(np.real(np.diag(reduced.matrix)), 0.0, 1.0)
    return p / p.sum()


def measure(state: QuantumState, register: str, rng: np.random.Generator | None = None,
            outcome: int | None = None) -> MeasurementResult:
    """Projective Z measurement of ``register``.

    With ``outcome`` given the result is forced (post-selected); otherwise it is
    sampled from ``rng``, or the most likely outcome is taken when ``rng`` is None.
    """
    probs = outcome_probabilities(state, register)
    if outcome is None:
        outcome = int(rng.random() < probs[1]) if rng is not None else int(np.argmax(probs))
    prob = float(probs[outcome])
    if prob <= 0.0:
        raise QuantumStateError(f"outcome {outcome} has zero probability")
    proj = P1 if outcome else P0
    post = state.apply(proj, [register])
    return MeasurementResult(outcome, QuantumState(post.matrix / prob, post.labels), prob)


# -- gates and circuit stages -------------------------------------------------

def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("unitary must be a square matrix")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > tol:
        raise ValueError("matrix is not unitary")


def generation_stage(m: int, h_error: float = 0.0, gate_error: float = 0.0) -> QuantumState:
    """Prepare the CT pair ``(|00> + (-1)^m |11>)/sqrt(2)``.

    ``m = 0`` applies CX, ``m = 1`` applies CZX. Nonzero ``h_error`` and
    ``gate_error`` insert depolarizing channels after the Hadamard on C and after
    the controlled gate.
    """
    if m not in (0, 1):
        raise ValueError(f"gate choice must be 0 or 1, got {m!r}")
    state = QuantumState.basis([0, 0], ("C", "T")).apply(H, ["C"])
    if h_error:
        state = depolarizing(state, h_error, ["C"])
    state = state.apply(CZX if m else CX, ["C", "T"])
    if gate_error:
        state = depolarizing(state, gate_error, ["C", "T"])
    return state


def verification_stage(state: QuantumState, rng: np.random.Generator | None = None, *,
                       gate_error: float = 0.0, h_error: float = 0.0,
                       outcome: int | None = None) -> MeasurementResult:
    """Anti-controlled X on T, Hadamard on C, then measure C."""
    state = state.apply(ANTI_CX, ["C", "T"])
    if gate_error:
        state = depolarizing(state, gate_error, ["C", "T"])
    state = state.apply(H, ["C"])
    if h_error:
        state = depolarizing(state, h_error, ["C"])
    return measure(state, "C", rng, outcome)


def protocol_half_stage(state: QuantumState, rng: np.random.Generator | None = None, *,
                        gate_error: float = 0.0, outcome: int | None = None) -> MeasurementResult:
    """X on C controlled by T, then measure C (expected outcome 0)."""
    state = state.apply(CX, ["T", "C"])
    if gate_error:
        state = depolarizing(state, gate_error, ["C", "T"])
    return measure(state, "C", rng, outcome)


# -- noise channels -----------------------------------------------------------

def _check_prob(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def _check_time(t: float, const: float, name: str) -> None:
    if t < 0:
        raise ValueError(f"storage time must be non-negative, got {t!r}")
    if not const > 0:
        raise ValueError(f"{name} must be positive, got {const!r}")


def damping_gamma(t: float, T1: float) -> float:
    _check_time(t, T1, "T1")
    return -np.expm1(-t / T1)


def dephasing_lambda(t: float, T2: float) -> float:
    _check_time(t, T2, "T2")
    return -np.expm1(-t / T2)


def depolarizing(state: QuantumState, p: float, on: Sequence[str]) -> QuantumState:
    """Mix the registers ``on`` toward the maximally mixed state with weight ``p``."""
    _check_prob(p)
    on = tuple(on)
    rest = tuple(lab for lab in state.labels if lab not in on)
    mixed = QuantumState.maximally_mixed(on)
    replaced = mixed.tensor(state.partial_trace(on)) if rest else mixed
    replaced = replaced.reorder(state.labels)
    return QuantumState((1 - p) * state.matrix + p * replaced.matrix, state.labels)


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    _check_prob(gamma, "gamma")
    return [np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
            np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)]


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    # off-diagonals scale by (1 - lam)
    _check_prob(lam, "lambda")
    return [np.sqrt(1 - lam / 2) * I2, np.sqrt(lam / 2) * Z]


def amplitude_damping(state: QuantumState, t: float, T1: float, on: str) -> QuantumState:
    return state.apply_kraus(amplitude_damping_kraus(damping_gamma(t, T1)), [on])


def phase_damping(state: QuantumState, t: float, T2: float, on: str) -> QuantumState:
    return state.apply_kraus(phase_damping_kraus(dephasing_lambda(t, T2)), [on])


def readout_flip(probabilities: np.ndarray, p: float) -> np.ndarray:
    """Classical bit-flip on measured outcome probabilities ``[p0, p1]``."""
    _check_prob(p)
    p0, p1 = probabilities
    return np.array([p0 * (1 - p) + p1 * p, p1 * (1 - p) + p0 * p])


def apply_noise_channel(state: QuantumState, channel: str, on: Sequence[str] | str, *,
                        p: float | None = None, t: float | None = None,
                        T1: float | None = None, T2: float | None = None) -> QuantumState:
    """Apply a named channel: ``depolarizing``, ``amplitude_damping`` or ``phase_damping``.

    ``readout_flip`` acts on classical outcomes and is exposed separately as
    :func:`readout_flip`.
    """
    on = (on,) if isinstance(on, str) else tuple(on)
    if channel == "depolarizing":
        return depolarizing(state, p, on)
    if channel == "amplitude_damping":
        for lab in on:
            state = amplitude_damping(state, t, T1, lab)
        return state
    if channel == "phase_damping":
        for lab in on:
            state = phase_damping(state, t, T2, lab)
        return state
    raise ValueError(f"unknown channel {channel!r}")


# -- attacker models -----------------------------------------------------------

def haar_random_qubit(rng: np.random.Generator, label: str = "T") -> QuantumState:
    """Haar-distributed pure qubit from two normalized complex Gaussians."""
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return QuantumState.from_ket(z, (label,))


def haar_random_unitary(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix with phase correction."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def tamper_oracle(m: int, g_ta: np.ndarray, rho_a: QuantumState) -> QuantumState:
    """Joint attacker evolution ``G_TA`` on target and a one-qubit register A.

    Returns the CA state left after tracing out T. Its C marginal is ``I/2`` for
    every unitary and every attacker state.
    """
    check_unitary(g_ta)
    if rho_a.num_qubits != 1:
        raise ValueError("attacker register must be a single qubit")
    rho_a.check()
    overall = generation_stage(m).tensor(QuantumState(rho_a.matrix, ("A",)))
    overall = overall.apply(g_ta, ["T", "A"])
    return overall.partial_trace("T")
