"""Reproducible experiment drivers behind the command-line interface.

Every session draws from its own stream, derived from the master seed and a
counter tuple, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import bb84, classifier as clf
from .config import RunConfig, Scheme, s_to_us
from .protocol import (GateChoiceKey, Role, mu_lower_bound, run_session, simulate_batch)
from .timing import build_schedule

MU_GRID = np.round(np.arange(0.50, 1.0001, 0.01), 2)


def session_rng(master: int, *counter: int) -> np.random.Generator:
    """Independent stream for session ``counter`` under ``master``."""
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=tuple(counter)))


def session_seed(master: int, *counter: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=tuple(counter)).generate_state(1, np.uint64)[0])


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def micro(t: float) -> float:
    """Seconds to microseconds without binary-scaling artifacts."""
    return float(s_to_us(t))


def write_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def workers() -> int:
    try:
        return max(1, int(os.environ.get("QAUTH_WORKERS", "1")))
    except ValueError:
        return 1


# -- simulate / sweep -------------------------------------------------------------------

RESULT_HEADER = ["scheme", "party", "distance_km", "wait_time_us", "lambda", "replicate",
                 "r01", "std", "seed", "verdict"]


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    party: str
    distance: float
    wait_time: float
    lam: int
    replicate: str
    r01: float
    std: float
    seed: int
    verdict: str

    def as_list(self):
        return [self.scheme, self.party, self.distance, micro(self.wait_time), self.lam,
                self.replicate, self.r01, self.std, self.seed, self.verdict]


def _replicate(args):
    cfg, point, d, T, rep = args
    rng = session_rng(cfg.seed, point, rep)
    hw = cfg.hardware.with_(distance_km=d)
    lam = cfg.lam
    if cfg.scheme is Scheme.USER_SERVER:
        timing = build_schedule(lam, T, d, hw)
        role = Role.ATTACKER if cfg.attacker else Role.LEGITIMATE
        t = run_session(GateChoiceKey.random(lam, rng), timing, hw, role, rng,
                        lost_policy=cfg.lost_policy)
        rate = float(t.S.mean()) if len(t) else float("nan")
        return [("user", rate, rate >= cfg.mu)]
    adversary = "forge_alice" if cfg.attacker else "none"
    if cfg.scheme is Scheme.SYMMETRIC:
        length = 5 * lam
        res = bb84.symmetric_session(1, lam, bb84.PositionKey.random(lam, length, rng),
                                     bb84.PositionKey.random(lam, length, rng), hw,
                                     adversary, rng, mu=cfg.mu)[0]
    else:
        length = 6 * lam
        res = bb84.asymmetric_session(1, lam, bb84.PositionKey.random(2 * lam, length, rng),
                                      GateChoiceKey.random(2 * lam, rng), hw, adversary,
                                      rng, mu=cfg.mu)[0]
    return [("alice", res.verdict_on_alice.r01, res.verdict_on_alice.accepted),
            ("bob", res.verdict_on_bob.r01, res.verdict_on_bob.accepted)]


def simulate(cfg: RunConfig) -> list[ResultRow]:
    """Per-replicate rows followed by one aggregate row per (point, party)."""
    points = [(d, T) for d in cfg.distances for T in cfg.wait_times]
    jobs = [(cfg, p, d, T, rep) for p, (d, T) in enumerate(points) for rep in range(cfg.replicates)]
    n_workers = workers()
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            outs = list(pool.map(_replicate, jobs, chunksize=4))
    else:
        outs = [_replicate(j) for j in jobs]
    rows = []
    scheme = cfg.scheme.value
    for (_, p, d, T, rep), out in zip(jobs, outs):
        for party, rate, ok in out:
            rows.append(ResultRow(scheme, party, d, T, cfg.lam, str(rep), rate, 0.0,
                                  session_seed(cfg.seed, p, rep), "accept" if ok else "reject"))
    agg = []
    for p, (d, T) in enumerate(points):
        for party in dict.fromkeys(r.party for r in rows):
            vals = np.array([r.r01 for r in rows
                             if r.party == party and r.distance == d and r.wait_time == T])
            mean = float(np.mean(vals))
            std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            agg.append(ResultRow(scheme, party, d, T, cfg.lam, "mean", mean, std, cfg.seed,
                                 "accept" if mean >= cfg.mu else "reject"))
    return rows + agg


def rows_to_csv(rows: list[ResultRow]) -> str:
    return write_csv(RESULT_HEADER, (r.as_list() for r in rows))


def figure_series(rows: list[ResultRow]) -> dict[str, str]:
    """Plot-ready data for r01 against storage time and against distance."""
    agg = [r for r in rows if r.replicate == "mean"]
    vs_time = sorted(agg, key=lambda r: (r.distance, r.wait_time))
    vs_dist = sorted(agg, key=lambda r: (r.wait_time, r.distance))
    return {
        "r01_vs_storage_time": write_csv(
            ["storage_time_us", "r01", "r01_std", "distance_km"],
            ([micro(r.wait_time), r.r01, r.std, r.distance] for r in vs_time)),
        "r01_vs_distance": write_csv(
            ["distance_km", "r01", "r01_std", "storage_time_us"],
            ([r.distance, r.r01, r.std, micro(r.wait_time)] for r in vs_dist)),
    }


# -- classifier datasets ------------------------------------------------------------------

def transcripts(cfg: RunConfig, role: Role, count: int, stream: int,
                d: float | None = None, T: float | None = None) -> np.ndarray:
    """``count`` transcripts S (rows) at one operating point."""
    d = cfg.distances[0] if d is None else d
    T = cfg.wait_times[0] if T is None else T
    hw = cfg.hardware.with_(distance_km=d)
    timing = build_schedule(cfg.lam, T, d, hw)
    rng = session_rng(cfg.seed, 7919, stream)
    keys = rng.integers(0, 2, (count, cfg.lam), dtype=np.int8)
    outcomes, _, _ = simulate_batch(keys, timing, hw, role, rng)
    return (outcomes == keys).astype(np.int8)


def build_dataset(cfg: RunConfig) -> tuple[clf.Dataset, np.ndarray]:
    """Balanced user/attacker dataset of block-mean features, plus the raw rate per row."""
    users = transcripts(cfg, Role.LEGITIMATE, cfg.n_users, 0)
    attackers = transcripts(cfg, Role.ATTACKER, cfg.n_attackers, 1)
    S = np.vstack([users, attackers])
    y = np.r_[np.ones(cfg.n_users), np.zeros(cfg.n_attackers)]
    prov = (f"lambda={cfg.lam};d={cfg.distances[0]};T={cfg.wait_times[0]};seed={cfg.seed};"
            f"users={cfg.n_users};attackers={cfg.n_attackers}")
    return clf.Dataset(clf.preprocess(S), y, prov), S.mean(axis=1)


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    idx = session_rng(seed, 104729).permutation(n)
    n_val = int(round(val_fraction * n))
    return idx[n_val:], idx[:n_val]


def train_classifier(cfg: RunConfig):
    """Generate data, train (optionally selecting the architecture), evaluate held-out."""
    data, _ = build_dataset(cfg)
    tr_idx, val_idx = split_indices(len(data), cfg.val_fraction, cfg.seed)
    train_set = clf.Dataset(data.X[tr_idx], data.y[tr_idx], data.provenance)
    val_set = clf.Dataset(data.X[val_idx], data.y[val_idx], data.provenance)
    rng = session_rng(cfg.seed, 15485863)
    if cfg.select_architecture:
        best, _ = clf.hyperparameter_select(clf.DEFAULT_CANDIDATES, train_set, rng,
                                            epochs=cfg.epochs, validation=val_set)
        return best, data
    model = clf.init_model(clf.DEFAULT_SIZES, rng)
    return clf.train(model, train_set, cfg.epochs, rng, validation=val_set), data


def static_accuracy(rates: np.ndarray, labels: np.ndarray, mu: float) -> float:
    return float(np.mean((rates >= mu - 1e-12) == (labels == 1)))


def best_static_mu(rates: np.ndarray, labels: np.ndarray, grid=MU_GRID) -> tuple[float, float]:
    """Threshold on the grid with the highest accuracy (smallest mu on ties)."""
    accs = [static_accuracy(rates, labels, mu) for mu in grid]
    k = int(np.argmax(accs))
    return float(grid[k]), float(accs[k])


@dataclass(frozen=True)
class Comparison:
    static_mu: float
    static_train_accuracy: float
    static_accuracy: float
    static_vacuous: bool
    dnn_accuracy: float
    dnn_auc: float
    static_sweep: list[tuple[float, float]]


def compare_methods(cfg: RunConfig, trained=None) -> Comparison:
    """Static threshold (tuned on the training split) against the DNN, both on held-out data."""
    result, data = trained if trained is not None else train_classifier(cfg)
    _, rates = build_dataset(cfg)
    tr_idx, val_idx = split_indices(len(data), cfg.val_fraction, cfg.seed)
    mu, tr_acc = best_static_mu(rates[tr_idx], data.y[tr_idx])
    held = static_accuracy(rates[val_idx], data.y[val_idx], mu)
    sweep = [(float(m), static_accuracy(rates[val_idx], data.y[val_idx], m)) for m in MU_GRID]
    rep = result.val_curve[-1]
    return Comparison(mu, tr_acc, held, mu <= mu_lower_bound(cfg.lam), rep.accuracy, rep.auc,
                      sweep)
