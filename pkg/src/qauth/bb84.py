"""BB84 key distribution with embedded entanglement-based authentication.

The symmetric scheme authenticates each party with CX-only pairs over a
bidirectional channel. The asymmetric scheme uses a one-way channel: Bob proves
his identity by publishing verification outcomes ``F'`` that must match Alice's
gate-choice key, and checks Alice with the half circuit (expected outcome 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import get_backend
from .noise_models import HardwareParams, dark_count_prob, transmission_prob
from .protocol import AcceptanceVerdict, GateChoiceKey, accept_condition_a, r01

QBER_ABORT = 0.11

ADVERSARIES = ("none", "forge_alice", "forge_bob", "intercept_resend")


@dataclass(frozen=True)
class PositionKey:
    """Secret slot positions of the authenticating qubits within a stream."""

    positions: tuple[int, ...]
    stream_length: int

    def __post_init__(self):
        pos = tuple(sorted(int(p) for p in self.positions))
        object.__setattr__(self, "positions", pos)
        if len(set(pos)) != len(pos):
            raise ValueError("positions must be distinct")
        if pos and (pos[0] < 0 or pos[-1] >= self.stream_length):
            raise ValueError(f"positions must lie within [0, {self.stream_length})")

    def __len__(self):
        return len(self.positions)

    @classmethod
    def random(cls, count: int, stream_length: int, rng: np.random.Generator) -> "PositionKey":
        if count > stream_length:
            raise ValueError("more positions than stream slots")
        return cls(tuple(rng.choice(stream_length, count, replace=False)), stream_length)


@dataclass(frozen=True)
class Bb84Stream:
    """Slot-tagged qubit stream: data qubits carry (bit, basis), AU slots a pool index."""

    is_au: np.ndarray
    bits: np.ndarray
    bases: np.ndarray
    au_index: np.ndarray

    @classmethod
    def build(cls, key: PositionKey, rng: np.random.Generator) -> "Bb84Stream":
        n = key.stream_length
        is_au = np.zeros(n, dtype=bool)
        is_au[list(key.positions)] = True
        au_index = np.full(n, -1)
        au_index[is_au] = np.arange(is_au.sum())
        bits = rng.integers(0, 2, n, dtype=np.int8)
        bases = rng.integers(0, 2, n, dtype=np.int8)
        bits[is_au] = -1
        bases[is_au] = -1
        return cls(is_au, bits, bases, au_index)

    @property
    def data_slots(self) -> np.ndarray:
        return np.flatnonzero(~self.is_au)


@dataclass(frozen=True)
class SiftResult:
    alice_key: np.ndarray
    bob_key: np.ndarray
    matching: np.ndarray
    qber: float
    sent: int

    @property
    def sifted_fraction(self) -> float:
        return self.matching.size / self.sent if self.sent else 0.0


@dataclass(frozen=True)
class SchemeResult:
    verdict_on_alice: AcceptanceVerdict
    verdict_on_bob: AcceptanceVerdict
    sift: Optional[SiftResult]
    aborted: bool
    pool_block: int
    # asymmetric scheme only: Bob's published verification outcomes
    f_prime: Optional[np.ndarray] = None


# -- plain BB84 -------------------------------------------------------------------

def _detected(n: int, params: HardwareParams, rng: np.random.Generator):
    """Which slots Bob registers, and which of those are dark counts."""
    survive = transmission_prob(params.distance_km, params.tau_db_per_km) * params.p_detect
    u = rng.random(n)
    dark = rng.random(n) < dark_count_prob(params.t_window, params.f_dark)
    arrived = u < survive
    return arrived | dark, dark & ~arrived


def _transmit(bits, bases, bob_bases, eavesdrop, params, rng):
    """Send BB84 states through the channel; return Bob's bits and detection mask."""
    n = bits.size
    send_bits, send_bases = bits, bases
    if eavesdrop:
        eve_bases = rng.integers(0, 2, n, dtype=np.int8)
        coin = rng.integers(0, 2, n, dtype=np.int8)
        send_bits = np.where(eve_bases == bases, bits, coin).astype(np.int8)
        send_bases = eve_bases
    detected, dark = _detected(n, params, rng)
    coin = rng.integers(0, 2, n, dtype=np.int8)
    bob_bits = np.where(bob_bases == send_bases, send_bits, coin).astype(np.int8)
    bob_bits = np.where(dark, rng.integers(0, 2, n, dtype=np.int8), bob_bits)
    return bob_bits, detected


def _sift(alice_bits, alice_bases, bob_bits, bob_bases, detected, sent) -> SiftResult:
    match = np.flatnonzero((alice_bases == bob_bases) & detected)
    a, b = alice_bits[match], bob_bits[match]
    qber = float(np.mean(a != b)) if match.size else float("nan")
    return SiftResult(a, b, match, qber, sent)


def bb84_round(stream_length: int, params: HardwareParams, eavesdropper: bool,
               rng: np.random.Generator) -> SiftResult:
    """One BB84 exchange of ``stream_length`` qubits with basis sifting."""
    if stream_length < 2:
        raise ValueError("stream_length must be at least 2")
    bits = rng.integers(0, 2, stream_length, dtype=np.int8)
    bases = rng.integers(0, 2, stream_length, dtype=np.int8)
    bob_bases = rng.integers(0, 2, stream_length, dtype=np.int8)
    bob_bits, detected = _transmit(bits, bases, bob_bases, eavesdropper, params, rng)
    return _sift(bits, bases, bob_bits, bob_bases, detected, stream_length)


def bb84_state(bit: int, basis: int) -> np.ndarray:
    """Density matrix of the BB84 state encoding ``bit`` in basis Z (0) or X (1)."""
    if basis == 0:
        ket = np.array([1.0, 0.0]) if bit == 0 else np.array([0.0, 1.0])
    else:
        ket = np.array([1.0, 1.0 if bit == 0 else -1.0]) / np.sqrt(2)
    return np.outer(ket, ket.conj()).astype(complex)


# -- authenticating qubits -----------------------------------------------------------

def _run_au(m, mode, tamper, params, rng, eve_bases=None, backend=None):
    """Push AU pairs through the one-leg channel and the chosen circuit."""
    n = m.size
    survive = transmission_prob(params.distance_km, params.tau_db_per_km) * params.p_detect
    survival = np.full(n, survive)
    zeros = np.zeros(n)
    u_loss = rng.random(n)
    sub_bit = rng.integers(0, 2, n, dtype=np.int8)
    u_out = rng.random(n)
    haar = u_eve = None
    if tamper == 1:
        g = rng.standard_normal((n, 4))
        haar = g[:, :2] + 1j * g[:, 2:]
    elif tamper == 2:
        u_eve = rng.random(n)
    # pre-shared pairs sit in memories of unknown duration; storage damping is not modelled
    outcome, _, _ = get_backend(backend)(
        m.astype(np.int8), mode, zeros, zeros, survival, u_loss, sub_bit, u_out,
        tamper, haar, eve_bases, u_eve,
        params.h_error_c, params.cx_error, params.czx_error, params.readout_error_c,
        np.inf, np.inf,
    )
    return outcome


def _verdict(S: np.ndarray, mu: float, classifier) -> AcceptanceVerdict:
    if classifier is None:
        return accept_condition_a(S, mu)
    from .classifier import forward, preprocess
    score = float(forward(classifier, preprocess(S))[0])
    return AcceptanceVerdict(r01(S), 0.5, score >= 0.5, None, method="dnn")


def _check_adversary(adversary: str) -> None:
    if adversary not in ADVERSARIES:
        raise ValueError(f"unknown adversary {adversary!r}; expected one of {ADVERSARIES}")


def symmetric_session(n: int, lam: int, K_ab: PositionKey, K_ba: PositionKey,
                      params: HardwareParams, adversary: str, rng: np.random.Generator, *,
                      mu: float = 1.0, classifier=None, backend: str | None = None
                      ) -> list[SchemeResult]:
    """Run ``n`` authenticated BB84 rounds with the symmetric (CX-only) scheme.

    Alice hides ``lam`` targets at ``K_ab`` in her stream to Bob; Bob returns
    ``lam`` controls, ordered by ``K_ba``. Each round consumes a disjoint
    block of ``4 lam`` pre-shared qubits.
    """
    _check_adversary(adversary)
    if len(K_ab) != lam or len(K_ba) != lam:
        raise ValueError("position keys must hold lambda positions each")
    results = []
    for block in range(n):
        stream = Bb84Stream.build(K_ab, rng)
        m = np.zeros(lam, dtype=np.int8)
        size = K_ab.stream_length
        eve = adversary == "intercept_resend"
        eve_bases = rng.integers(0, 2, size, dtype=np.int8) if eve else None

        # Alice's targets reach Bob, who checks them against his controls
        tamper_ab = 1 if adversary == "forge_alice" else (2 if eve else 0)
        au_eve = eve_bases[stream.is_au] if eve else None
        out_ab = _run_au(m, 0, tamper_ab, params, rng, au_eve, backend)
        # Bob's controls reach Alice; measuring or replacing the control of a
        # CX pair acts like doing so on the target
        tamper_ba = 1 if adversary == "forge_bob" else (2 if eve else 0)
        ba_eve = rng.integers(0, 2, lam, dtype=np.int8) if eve else None
        out_ba = _run_au(m, 0, tamper_ba, params, rng, ba_eve, backend)

        v_alice = _verdict((out_ab == 0).astype(np.int8), mu, classifier)
        v_bob = _verdict((out_ba == 0).astype(np.int8), mu, classifier)

        sift = None
        aborted = not (v_alice.accepted and v_bob.accepted)
        if not aborted:
            sift = _data_exchange(stream, params, adversary, eve_bases, rng)
            aborted = bool(sift.matching.size == 0 or sift.qber > QBER_ABORT)
        results.append(SchemeResult(v_alice, v_bob, sift, aborted, block))
    return results


def _data_exchange(stream: Bb84Stream, params, adversary, eve_bases, rng) -> SiftResult:
    slots = stream.data_slots
    bits, bases = stream.bits[slots], stream.bases[slots]
    bob_bases = rng.integers(0, 2, slots.size, dtype=np.int8)
    if adversary == "intercept_resend":
        e = eve_bases[slots]
        coin = rng.integers(0, 2, slots.size, dtype=np.int8)
        sent_bits = np.where(e == bases, bits, coin).astype(np.int8)
        detected, dark = _detected(slots.size, params, rng)
        coin = rng.integers(0, 2, slots.size, dtype=np.int8)
        bob_bits = np.where(bob_bases == e, sent_bits, coin).astype(np.int8)
        bob_bits = np.where(dark, rng.integers(0, 2, slots.size, dtype=np.int8), bob_bits)
    else:
        bob_bits, detected = _transmit(bits, bases, bob_bases, False, params, rng)
    return _sift(bits, bases, bob_bits, bob_bases, detected, slots.size)


def asymmetric_session(n: int, lam: int, K: PositionKey, F: GateChoiceKey,
                       params: HardwareParams, adversary: str, rng: np.random.Generator, *,
                       mu: float = 1.0, classifier=None, backend: str | None = None
                       ) -> list[SchemeResult]:
    """Run ``n`` authenticated BB84 rounds with the one-way asymmetric scheme.

    Alice embeds ``2 lam`` targets at ``K`` prepared with gate choices ``F``.
    Bob verifies the first ``lam`` pairs and publishes the outcomes ``F'``;
    he runs the half circuit on the rest and accepts Alice on the rate of 0s.
    """
    _check_adversary(adversary)
    if len(K) != 2 * lam:
        raise ValueError(f"position key must hold 2*lambda={2 * lam} positions, got {len(K)}")
    if len(F) != 2 * lam:
        raise ValueError(f"gate-choice key must hold 2*lambda={2 * lam} bits, got {len(F)}")
    f_first, f_second = F.bits[:lam], F.bits[lam:]
    results = []
    for block in range(n):
        stream = Bb84Stream.build(K, rng)
        eve = adversary == "intercept_resend"
        eve_bases = rng.integers(0, 2, K.stream_length, dtype=np.int8) if eve else None
        au_eve = eve_bases[stream.is_au] if eve else None
        tamper = 1 if adversary == "forge_alice" else (2 if eve else 0)

        f_prime = _run_au(f_first, 0, tamper, params, rng,
                          au_eve[:lam] if eve else None, backend)
        if adversary == "forge_bob":
            f_prime = rng.integers(0, 2, lam, dtype=np.int8)
        half = _run_au(f_second, 1, tamper, params, rng,
                       au_eve[lam:] if eve else None, backend)

        v_bob = _verdict((f_prime == f_first).astype(np.int8), mu, classifier)
        v_alice = _verdict((half == 0).astype(np.int8), mu, classifier)
        sift = None
        aborted = not (v_alice.accepted and v_bob.accepted)
        if not aborted:
            sift = _data_exchange(stream, params, adversary, eve_bases, rng)
            aborted = bool(sift.matching.size == 0 or sift.qber > QBER_ABORT)
        results.append(SchemeResult(v_alice, v_bob, sift, aborted, block, f_prime))
    return results


def slot_marginal(kind: str) -> np.ndarray:
    """Density matrix of one transmitted slot averaged over what an outsider does not know.

    ``kind="data"`` averages the four BB84 states; ``kind="au"`` is the target
    marginal of a freshly generated pair (either gate choice).
    """
    if kind == "data":
        return sum(bb84_state(b, s) for b in (0, 1) for s in (0, 1)) / 4
    if kind == "au":
        from .quantum_core import generation_stage
        return sum(generation_stage(m).partial_trace("C").matrix for m in (0, 1)) / 2
    raise ValueError(f"unknown slot kind {kind!r}")
