"""Strategy parameters and their default settings."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

VARIANTS = ("lmmaes", "maes", "sigma-es", "lmmaes-storage")


def default_population_size(n: int) -> int:
    return 4 + int(math.floor(3 * math.log(n)))


def recombination_weights(mu: int) -> tuple[np.ndarray, float]:
    """Log-linear positive weights for the ``mu`` best samples.

    Returns the normalized weights and the effective parent number
    ``1 / sum(w**2)``.
    """
    if mu < 1:
        raise ValueError(f"mu must be >= 1, got {mu}")
    raw = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w = raw / raw.sum()
    return w, float(1.0 / np.sum(w * w))


@dataclass(frozen=True)
class HyperParameters:
    """Constants of one strategy variant.

    Only the fields relevant to ``variant`` are populated; the others stay
    ``None``. ``clamped`` names the rates that were capped at construction.
    """

    variant: str
    n: int
    lam: int
    mu: int
    weights: np.ndarray
    mueff: float
    c_sigma: float
    d_sigma: float = 2.0
    # lmmaes
    m: Optional[int] = None
    c_d: Optional[np.ndarray] = None
    c_c: Optional[np.ndarray] = None
    # maes / lmmaes-storage
    c1: Optional[float] = None
    cmu: Optional[float] = None
    path_version: str = "new"
    csigma_rule: str = "cma"
    m_max: Optional[int] = None
    cc: Optional[float] = None
    clamped: tuple = field(default=())

    def effective(self) -> dict:
        """Flat ``name -> value`` view of the populated fields, for log headers."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or (f.name == "clamped" and not value):
                continue
            if isinstance(value, np.ndarray):
                value = ";".join(repr(float(v)) for v in value)
            elif isinstance(value, tuple):
                value = ";".join(value)
            elif isinstance(value, float):
                value = repr(value)
            out[f.name] = value
        return out


def _as_rates(value, length: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.size == 1:
        arr = np.full(length, arr[0])
    if arr.shape != (length,):
        raise ValueError(f"{name} needs {length} entries, got {arr.size}")
    return arr


def default_hyperparameters(n: int, variant: str = "lmmaes", **overrides) -> HyperParameters:
    """Default constants for ``variant`` in dimension ``n``.

    Any field can be overridden by keyword. Overriding ``lam`` (or ``mu``)
    re-derives the weights and every rate that depends on them. Rates are
    clamped to at most 1, and the limited-memory path rate (shared by
    ``lmmaes`` and ``sigma-es``) to at most 0.5. Explicit zero rates are
    accepted for degenerate test setups.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    n = int(n)
    if n < 2:
        raise ValueError(f"default hyperparameters need n >= 2, got {n}")
    known = {f.name for f in fields(HyperParameters)} - {"variant", "n", "weights", "mueff", "clamped"}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown hyperparameter(s): {', '.join(sorted(unknown))}")

    lam = int(overrides.pop("lam", default_population_size(n)))
    mu = int(overrides.pop("mu", lam // 2))
    if lam < 2 or not 1 <= mu <= lam:
        raise ValueError(f"need lam >= 2 and 1 <= mu <= lam, got lam={lam}, mu={mu}")
    w, mueff = recombination_weights(mu)
    p = dict(variant=variant, n=n, lam=lam, mu=mu, weights=w, mueff=mueff)
    caps = {}

    if variant in ("lmmaes", "sigma-es"):
        p["c_sigma"] = 2.0 * lam / n
        caps["c_sigma"] = 0.5
    if variant == "lmmaes":
        m = int(overrides.pop("m", default_population_size(n)))
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        i = np.arange(m)
        p["m"] = m
        p["c_d"] = 1.0 / (1.5**i * n)
        p["c_c"] = lam / (4.0**i * n)
        for name in ("c_d", "c_c"):
            if name in overrides:
                p[name] = _as_rates(overrides.pop(name), m, name)
    elif variant == "maes":
        rule = overrides.pop("csigma_rule", "cma")
        if rule not in ("cma", "lm"):
            raise ValueError(f"csigma_rule must be 'cma' or 'lm', got {rule!r}")
        p["csigma_rule"] = rule
        if rule == "cma":
            p["c_sigma"] = (mueff + 2.0) / (n + mueff + 5.0)
        else:
            p["c_sigma"] = 2.0 * lam / n
            caps["c_sigma"] = 0.5
        c1 = overrides.pop("c1", 2.0 / ((n + 1.3) ** 2 + mueff))
        p["c1"] = c1
        p["cmu"] = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    elif variant == "lmmaes-storage":
        m_max = int(overrides.pop("m_max", default_population_size(n)))
        if m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {m_max}")
        p["m_max"] = m_max
        p["c1"] = 1.0 / n
        p["c_sigma"] = 1.0 / m_max
        p["cc"] = 1.0 / n
        p["d_sigma"] = 0.5

    p.update(overrides)
    if p.get("path_version", "new") not in ("new", "old"):
        raise ValueError("path_version must be 'new' or 'old'")

    clamped = []
    for name in ("c_sigma", "c1", "cmu", "cc"):
        value = p.get(name)
        if value is None:
            continue
        cap = caps.get(name, 1.0)
        if value > cap:
            log.debug("clamping %s=%g to %g (n=%d, variant=%s)", name, value, cap, n, variant)
            p[name] = cap
            clamped.append(name)
        elif value < 0:
            raise ValueError(f"{name} must be non-negative, got {value}")
    for name in ("c_d", "c_c"):
        value = p.get(name)
        if value is None:
            continue
        if np.any(value < 0):
            raise ValueError(f"{name} entries must be non-negative")
        if np.any(value > 1.0):
            log.debug("clamping %s entries above 1 (n=%d)", name, n)
            p[name] = np.minimum(value, 1.0)
            clamped.append(name)
    if p.get("d_sigma", 2.0) <= 0:
        raise ValueError("d_sigma must be positive")
    return HyperParameters(**p, clamped=tuple(clamped))
