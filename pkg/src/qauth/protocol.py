"""User-server CX/CZX authentication: sessions, transcripts and threshold acceptance."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import quantum_core as qc
from ._kernels import get_backend
from .noise_models import (HardwareParams, LossCause, LossEvent, afc_efficiency,
                           transmission_prob)
from .timing import SessionTiming


class Role(str, enum.Enum):
    LEGITIMATE = "legitimate"
    # target replaced by a Haar-random qubit before verification
    ATTACKER = "attacker"
    # joint Haar-random unitary on target and a one-qubit attacker register
    TAMPER = "tamper"


@dataclass(frozen=True)
class GateChoiceKey:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.int8).reshape(-1)
        if b.size == 0 or not np.isin(b, (0, 1)).all():
            raise ValueError("gate-choice key must be a non-empty bit string")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    def __len__(self):
        return self.bits.size

    @classmethod
    def random(cls, lam: int, rng: np.random.Generator) -> "GateChoiceKey":
        return cls(rng.integers(0, 2, lam, dtype=np.int8))


@dataclass(frozen=True)
class Transcript:
    S: np.ndarray
    outcomes: np.ndarray
    expected: np.ndarray
    losses: tuple[Optional[LossEvent], ...] = field(repr=False)
    role: Role = Role.LEGITIMATE

    def __len__(self):
        return self.S.size

    @property
    def n_lost(self) -> int:
        return sum(ev is not None for ev in self.losses)


@dataclass(frozen=True)
class AcceptanceVerdict:
    r01: float
    mu: float
    accepted: bool
    # Chebyshev bound on forgery success; None when mu is at or below the lower bound
    bound: Optional[float]
    method: str = "static"

    @property
    def vacuous(self) -> bool:
        return self.bound is None


# -- closed-form statistics ---------------------------------------------------

def r01(transcript) -> float:
    """Fraction of rounds whose outcome matched the expected bit."""
    s = transcript.S if isinstance(transcript, Transcript) else np.asarray(transcript)
    if s.size == 0:
        raise ValueError("empty transcript")
    return float(np.mean(s))


def mu_lower_bound(lam: int) -> float:
    """Smallest threshold for which the Chebyshev forgery bound is non-trivial."""
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam!r}")
    return 0.5 + 1.0 / math.sqrt(2 * lam)


def chebyshev_bound(lam: int, mu: float) -> float:
    """Upper bound ``1 / (2 lam (mu - 1/2)^2)`` on P(attacker rate >= mu)."""
    if mu < mu_lower_bound(lam) - 1e-15:
        raise ValueError(f"mu={mu!r} is at or below 1/2 + 1/sqrt(2 lambda); the bound is vacuous")
    return 1.0 / (2 * lam * (mu - 0.5) ** 2)


def accept_condition_a(transcript, mu: float) -> AcceptanceVerdict:
    """Accept when the match rate reaches ``mu``."""
    if not 0.5 < mu <= 1.0:
        raise ValueError(f"mu must lie in (1/2, 1], got {mu!r}")
    rate = r01(transcript)
    lam = len(transcript)
    bound = chebyshev_bound(lam, mu) if mu > mu_lower_bound(lam) else None
    return AcceptanceVerdict(rate, mu, rate >= mu, bound)


# -- session simulation ---------------------------------------------------------

def _stage_factors(timing: SessionTiming, params: HardwareParams):
    eta = transmission_prob(timing.d, params.tau_db_per_km)
    fiber = np.full(timing.lam, eta * eta)
    detector = np.full(timing.lam, params.p_detect ** 2)
    memory = (np.asarray(afc_efficiency(timing.t_store_user, params), dtype=float)
              * np.asarray(afc_efficiency(timing.t_store_server, params), dtype=float))
    return fiber, detector, memory


def _loss_cause(u: float, fiber: float, detector: float) -> LossCause:
    # sequential attribution with the same uniform that decided the loss
    if u >= fiber:
        return LossCause.FIBER
    if u >= fiber * detector:
        return LossCause.DETECTOR
    return LossCause.MEMORY


def simulate_batch(keys: np.ndarray, timing: SessionTiming, params: HardwareParams,
                   role: Role | str, rng: np.random.Generator, *, mode: int = 0,
                   backend: str | None = None, chunk: int = 1 << 20):
    """Simulate ``keys.shape[0]`` independent sessions sharing one schedule.

    Returns ``(outcomes, lost, u_loss)``, each of shape ``keys.shape``. The
    random stream is consumed in a fixed order, so a given ``rng`` state always
    yields the same arrays regardless of ``backend`` or ``chunk``.
    """
    role = Role(role)
    if role is Role.TAMPER:
        raise ValueError("the tamper role is simulated shot by shot; use run_session")
    keys = np.atleast_2d(np.asarray(keys, dtype=np.int8))
    n_sess, lam = keys.shape
    if lam != timing.lam:
        raise ValueError(f"key length {lam} does not match schedule length {timing.lam}")
    params.validate()
    kernel = get_backend(backend)
    fiber, detector, memory = _stage_factors(timing, params)
    survival = fiber * detector * memory
    t_user, t_server = timing.t_store_user, timing.t_store_server

    total = n_sess * lam
    u_loss = rng.random(total)
    sub_bit = rng.integers(0, 2, total, dtype=np.int8)
    u_out = rng.random(total)
    tamper = 1 if role is Role.ATTACKER else 0
    haar = None
    if tamper:
        g = rng.standard_normal((total, 4))
        haar = g[:, :2] + 1j * g[:, 2:]

    flat_m = keys.reshape(-1)
    outcomes = np.empty(total, dtype=np.int8)
    lost = np.empty(total, dtype=np.int8)
    per = max(1, chunk // lam) * lam
    for start in range(0, total, per):
        stop = min(total, start + per)
        reps = (stop - start) // lam
        sl = slice(start, stop)
        o, l, _ = kernel(
            flat_m[sl], mode,
            np.tile(t_user, reps), np.tile(t_server, reps), np.tile(survival, reps),
            u_loss[sl], sub_bit[sl], u_out[sl],
            tamper, haar[sl] if tamper else None, None, None,
            params.h_error_c, params.cx_error, params.czx_error, params.readout_error_c,
            params.T1, params.T2,
        )
        outcomes[sl] = o
        lost[sl] = l
    shape = (n_sess, lam)
    return outcomes.reshape(shape), lost.reshape(shape).astype(bool), u_loss.reshape(shape)


def expected_outcomes(keys: np.ndarray, mode: int = 0) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int8)
    return keys.copy() if mode == 0 else np.zeros_like(keys)


def _tamper_shot(m: int, params: HardwareParams, rng: np.random.Generator) -> int:
    """Proof-level attacker on one round: random joint unitary, verify with A's qubit.

    Storage and fiber noise are not applied; only gate and readout errors.
    """
    rho_a = qc.haar_random_qubit(rng, "A")
    g = qc.haar_random_unitary(rng, 4)
    ca = qc.tamper_oracle(m, g, rho_a)
    ct = _as_target(ca)
    res = qc.verification_stage(ct, rng, gate_error=params.cx_error, h_error=params.h_error_c)
    probs = qc.readout_flip(np.array([1 - res.outcome, res.outcome], float), params.readout_error_c)
    return int(rng.random() < probs[1])


def _as_target(state: qc.QuantumState) -> qc.QuantumState:
    # the attacker returns a qubit of A in place of T
    return qc.QuantumState(state.matrix, tuple("T" if lab == "A" else lab for lab in state.labels))


def run_session(key: GateChoiceKey, timing: SessionTiming, params: HardwareParams,
                role: Role | str, rng: np.random.Generator, *, lost_policy: str = "substitute",
                backend: str | None = None) -> Transcript:
    """Run the ``lambda``-round protocol for one user and return its transcript.

    Lost photons get a uniformly random outcome (``lost_policy="substitute"``)
    or are dropped from the transcript (``"discard"``).
    """
    role = Role(role)
    if lost_policy not in ("substitute", "discard"):
        raise ValueError(f"unknown lost_policy {lost_policy!r}")
    if len(key) != timing.lam:
        raise ValueError(f"key length {len(key)} does not match schedule length {timing.lam}")
    bits = key.bits
    if role is Role.TAMPER:
        outcomes = np.array([_tamper_shot(int(m), params, rng) for m in bits], dtype=np.int8)
        lost = np.zeros(timing.lam, dtype=bool)
        u_loss = np.zeros(timing.lam)
    else:
        o, l, u = simulate_batch(bits[None, :], timing, params, role, rng, backend=backend)
        outcomes, lost, u_loss = o[0], l[0], u[0]

    fiber, detector, _ = _stage_factors(timing, params)
    losses = tuple(
        LossEvent(_loss_cause(u_loss[i], fiber[i], detector[i]), i) if lost[i] else None
        for i in range(timing.lam)
    )
    expected = expected_outcomes(bits)
    S = (outcomes == expected).astype(np.int8)
    if lost_policy == "discard":
        keep = ~lost
        S, outcomes, expected = S[keep], outcomes[keep], expected[keep]
    return Transcript(S, outcomes, expected, losses, role)
