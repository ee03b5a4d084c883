"""Per-photon local-time ledger for one user-server session.

Photons are emitted at the source rate, stored by the user until the whole
batch has arrived plus a wait ``T``, and returned first-in first-out. The
server keeps each control qubit in memory from emission until its partner
returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .noise_models import HardwareParams, LossEvent


@dataclass(frozen=True)
class PhotonRecord:
    shot_index: int
    t_emit: float
    t_arrive_user: float
    t_store_user: float
    t_store_server: float
    t_return: float
    loss: Optional[LossEvent] = None


@dataclass(frozen=True)
class SessionTiming:
    lam: int
    T_wait: float
    d: float
    records: tuple[PhotonRecord, ...] = field(repr=False)

    def __len__(self):
        return self.lam

    @property
    def t_store_user(self) -> np.ndarray:
        return np.array([r.t_store_user for r in self.records])

    @property
    def t_store_server(self) -> np.ndarray:
        return np.array([r.t_store_server for r in self.records])

    @property
    def span(self) -> float:
        """Time from the first emission to the last photon's return."""
        return max(r.t_return for r in self.records) - self.records[0].t_emit


def one_way_delay(d_km: float, params: HardwareParams) -> float:
    return d_km * 1e3 / params.v_fiber


def build_schedule(lam: int, T_wait: float, d: float, params: HardwareParams) -> SessionTiming:
    """Build the timing ledger for ``lam`` shots over a ``d`` km link."""
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam!r}")
    if T_wait < 0 or d < 0:
        raise ValueError("wait time and distance must be non-negative")
    period = 1.0 / params.f_source
    prop = one_way_delay(d, params)
    records = []
    for i in range(lam):
        t_emit = i * period
        t_arrive = t_emit + prop + params.t_drive_store
        t_user = (lam - 1 - i) * period + T_wait + params.t_drive_recover
        t_return = t_arrive + t_user + prop
        records.append(PhotonRecord(
            shot_index=i,
            t_emit=t_emit,
            t_arrive_user=t_arrive,
            t_store_user=t_user,
            t_store_server=t_return - t_emit,
            t_return=t_return,
        ))
    return SessionTiming(lam, T_wait, d, tuple(records))


def storage_times(timing: SessionTiming) -> list[tuple[float, float]]:
    """(user storage, server storage) per shot, in shot order."""
    return [(r.t_store_user, r.t_store_server) for r in timing.records]
