"""Physical-layer loss models: fiber, detectors, dark counts and AFC memories."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, fields, replace

import numpy as np

log = logging.getLogger(__name__)

_SQRT_PI_4LN2 = math.sqrt(math.pi / (4 * math.log(2)))
_SQRT_8LN2 = math.sqrt(8 * math.log(2))


@dataclass(frozen=True)
class HardwareParams:
    """Simulation constants. Defaults are the reference hardware values.

    Times are in seconds, frequencies in Hz, distances in km.
    """

    tau_db_per_km: float = 0.17
    distance_km: float = 1.0
    v_fiber: float = 2.08e8
    f_source: float = 33e6
    f_dark: float = 10.0
    t_window: float = 25e-9
    p_detect: float = 0.95
    T1: float = 223.44e-6
    T2: float = 295.35e-6
    comb_finesse: float = 40.0
    alpha_l: float = 1.0
    R1: float = 0.96
    R2: float = 0.99
    comb_linewidth: float = 3.0e3
    t_drive_store: float = 30e-9
    t_drive_recover: float = 30e-9
    cx_error: float = 6.0e-3
    czx_error: float = 6.4e-3
    h_error_c: float = 1.48e-4
    readout_error_c: float = 2.16e-2
    # True bypasses the AFC model with a lossless memory
    ideal_memory: bool = False

    _PROBS = ("p_detect", "R1", "R2", "cx_error", "czx_error", "h_error_c", "readout_error_c")
    _POSITIVE = ("v_fiber", "f_source", "t_window", "T1", "T2", "comb_linewidth")
    _NONNEG = ("tau_db_per_km", "distance_km", "f_dark", "alpha_l", "t_drive_store",
               "t_drive_recover")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in self._PROBS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        for name in self._POSITIVE:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in self._NONNEG:
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if not self.comb_finesse >= 1:
            raise ValueError(f"comb_finesse must be >= 1, got {self.comb_finesse!r}")

    @classmethod
    def noiseless(cls, **overrides) -> "HardwareParams":
        """Lossless, error-free hardware with infinite coherence times."""
        base = dict(tau_db_per_km=0.0, p_detect=1.0, f_dark=0.0, T1=math.inf, T2=math.inf,
                    cx_error=0.0, czx_error=0.0, h_error_c=0.0, readout_error_c=0.0,
                    ideal_memory=True)
        base.update(overrides)
        return cls(**base)

    def with_(self, **changes) -> "HardwareParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class LossCause(enum.Enum):
    FIBER = "fiber"
    DETECTOR = "detector"
    MEMORY = "memory"
    DARK_COUNT_SUBSTITUTION = "dark_count_substitution"


@dataclass(frozen=True)
class LossEvent:
    cause: LossCause
    shot_index: int


def transmission_prob(d: float, tau: float) -> float:
    """Single-photon fiber transmission ``10**(-d*tau/10)``."""
    if d < 0 or tau < 0:
        raise ValueError(f"distance and attenuation must be non-negative, got {d!r}, {tau!r}")
    return 10.0 ** (-d * tau / 10.0)


def dark_count_prob(t_w: float, f_dark: float) -> float:
    """Poisson probability of at least one dark count within the capture window."""
    if t_w < 0 or f_dark < 0:
        raise ValueError(f"window and dark-count rate must be non-negative, got {t_w!r}, {f_dark!r}")
    if math.isinf(f_dark):
        return 1.0 if t_w > 0 else 0.0
    return -math.expm1(-t_w * f_dark)


def effective_absorption(params: HardwareParams) -> float:
    """Effective comb absorption depth, the alpha*l of the comb divided by the finesse."""
    if params.comb_finesse <= 0:
        raise ValueError("comb finesse must be positive")
    return params.alpha_l / params.comb_finesse * _SQRT_PI_4LN2


def effective_linewidth(params: HardwareParams) -> float:
    return 2 * math.pi * params.comb_linewidth / _SQRT_8LN2


def afc_efficiency_peak(params: HardwareParams) -> float:
    """Storage-time-independent prefactor of the cavity-enhanced AFC efficiency."""
    a = effective_absorption(params)
    denom = (1 - math.sqrt(params.R1 * params.R2) * math.exp(-a)) ** 4
    if denom == 0.0:
        raise ValueError("degenerate cavity: R1*R2 = 1 with zero absorption")
    return 4 * a * a * math.exp(-2 * a) * (1 - params.R1) ** 2 * params.R2 / denom


def afc_efficiency(t, params: HardwareParams):
    """Cavity-enhanced AFC storage-and-retrieval efficiency after storage time ``t``.

    Accepts a scalar or an array of times. Values above 1 (possible for some
    parameter choices) are clamped with a warning.
    """
    if params.ideal_memory:
        return np.ones_like(t, dtype=float) if np.ndim(t) else 1.0
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("storage time must be non-negative")
    eb = effective_linewidth(params)
    eta = afc_efficiency_peak(params) * np.exp(-(t_arr * eb) ** 2)
    if np.any(eta > 1.0):
        log.warning("AFC efficiency %.4g exceeds 1 for these parameters; clamped", float(eta.max()))
        eta = np.minimum(eta, 1.0)
    return float(eta) if eta.ndim == 0 else eta


def link_survival(params: HardwareParams) -> float:
    """Fiber and detector factors for one shot: two fiber legs, two detections."""
    eta = transmission_prob(params.distance_km, params.tau_db_per_km)
    return eta * eta * params.p_detect * params.p_detect


def shot_survival_prob(record, params: HardwareParams) -> float:
    """Probability that the photon pair of one shot survives every lossy stage.

    Product of fiber transmission on both legs, detection at user and server,
    and AFC efficiency of the user (target) and server (control) memories.
    """
    t_user = getattr(record, "t_store_user", None)
    t_server = getattr(record, "t_store_server", None)
    if t_user is None or t_server is None:
        raise ValueError("photon record is missing storage times")
    return (link_survival(params) * afc_efficiency(t_user, params)
            * afc_efficiency(t_server, params))


def survival_probs(t_user: np.ndarray, t_server: np.ndarray, params: HardwareParams) -> np.ndarray:
    """Vectorized :func:`shot_survival_prob` over per-shot storage times."""
    return (link_survival(params) * np.asarray(afc_efficiency(t_user, params))
            * np.asarray(afc_efficiency(t_server, params)))


def sample_loss(p: float, rng: np.random.Generator) -> bool:
    """Bernoulli draw: True when the photon survives (probability ``p``)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"survival probability must lie in [0, 1], got {p!r}")
    return bool(rng.random() < p)
