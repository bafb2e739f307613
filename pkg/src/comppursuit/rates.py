"""Service rates and network utility.

A :class:`Pattern` is one flat transmission scheme: per extended AP a
power density, an on/off activity bit and a served UE.  An
:class:`Allocation` splits the band into subbands, one pattern per
subband.  Rates use the Shannon formula in bits/s/Hz (base-2 logs);
utilities operate on the resulting bits/s rate vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ChannelParams, ExtendedApSet

NO_UE = -1  # sentinel for "serves nobody"


@dataclass
class Pattern:
    """One flat per-subband scheme over the extended AP set.

    ``power`` (W/Hz), ``active`` (bool) and ``served`` (UE index or
    ``NO_UE``) are indexed by extended AP id.
    """

    power: np.ndarray
    active: np.ndarray
    served: np.ndarray

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=float)
        self.active = np.asarray(self.active, dtype=bool)
        self.served = np.asarray(self.served, dtype=int)

    def copy(self) -> "Pattern":
        return Pattern(self.power.copy(), self.active.copy(), self.served.copy())

    def serving_mask(self) -> np.ndarray:
        return self.active & (self.served != NO_UE)


def silent_pattern(m: int) -> Pattern:
    return Pattern(np.zeros(m), np.zeros(m, dtype=bool), np.full(m, NO_UE))


def validate_pattern(pattern: Pattern, exts: ExtendedApSet, params: ChannelParams,
                     atol: float = 0.0) -> None:
    """Raise ValueError if a pattern breaks any scheme invariant.

    Checks power bounds, the one-active-per-involvement-set rule, that
    inactive or idle transmitters carry no power, and that every served
    UE is inside the transmitter's extended neighborhood.
    """
    p, d, u = pattern.power, pattern.active, pattern.served
    if not (p.shape == d.shape == u.shape == (exts.m,)):
        raise ValueError("pattern arrays must all have one entry per extended AP")
    if np.any(p < -atol) or np.any(p > params.pmax + atol):
        raise ValueError("power outside [0, pmax]")
    if np.any(p[~d] != 0.0):
        raise ValueError("inactive AP with nonzero power")
    if np.any(p[u == NO_UE] != 0.0):
        raise ValueError("AP serving nobody must carry zero power")
    for i in range(exts.n_physical):
        if int(np.sum(d[exts.involvement[i]])) > 1:
            raise ValueError(f"physical AP {i} appears in more than one active transmitter")
    serving = pattern.serving_mask()
    ids = np.flatnonzero(serving)
    if ids.size and not np.all(exts.member[ids, u[ids]]):
        raise ValueError("AP serving a UE outside its neighborhood")


@dataclass
class Allocation:
    """Bandwidth split over patterns: sum(beta) equals the band width W (Hz)."""

    patterns: list[Pattern]
    beta: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if len(self.patterns) != self.beta.size:
            raise ValueError("one beta per pattern required")
        if np.any(self.beta < 0):
            raise ValueError("beta must be non-negative")

    @property
    def total_bandwidth(self) -> float:
        return float(np.sum(self.beta))


@dataclass(frozen=True)
class TrafficProfile:
    """Poisson packet arrivals: per-UE rate (packets/s) and mean size (bits)."""

    lam: np.ndarray
    d_bits: float

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        if np.any(self.lam < 0):
            raise ValueError("arrival rates must be non-negative")
        if self.d_bits <= 0:
            raise ValueError("mean packet size must be positive")


@dataclass(frozen=True)
class UtilitySpec:
    """Utility choice: 'sojourn-time', 'sum-rate' or 'log-sum-rate'.

    ``epsilon_grad`` (bits/s) floors the stability margin inside the
    gradient so the linearization stays finite in the unstable region.
    """

    kind: str = "sojourn-time"
    epsilon_grad: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sojourn-time", "sum-rate", "log-sum-rate"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.epsilon_grad <= 0:
            raise ValueError("epsilon_grad must be positive")


def interference_totals(pattern: Pattern, exts: ExtendedApSet) -> np.ndarray:
    """Received power density per UE from all active transmitters."""
    return pattern.power @ exts.g_ext


def spectral_efficiency(pattern: Pattern, ext_ap: int, ue: int, exts: ExtendedApSet,
                        n0: float) -> float:
    """Shannon spectral efficiency (bits/s/Hz) of one extended link.

    The serving gain is mode-dependent (coherent pairs add amplitudes);
    every other active transmitter interferes with its plain power sum.
    """
    tot = float(interference_totals(pattern, exts)[ue])
    own = float(pattern.power[ext_ap] * exts.g_ext[ext_ap, ue])
    sig = float(pattern.power[ext_ap] * exts.h_serving[ext_ap, ue])
    return float(np.log2(1.0 + sig / (n0 + tot - own)))


def pattern_rates(pattern: Pattern, exts: ExtendedApSet, n0: float) -> np.ndarray:
    """Per-UE service rate density (bits/s/Hz) under one pattern."""
    rates = np.zeros(exts.n_ues)
    ids = np.flatnonzero(pattern.serving_mask())
    if ids.size == 0:
        return rates
    u = pattern.served[ids]
    p = pattern.power[ids]
    tot = interference_totals(pattern, exts)
    own = p * exts.g_ext[ids, u]
    sig = p * exts.h_serving[ids, u]
    se = np.log2(1.0 + sig / (n0 + tot[u] - own))
    np.add.at(rates, u, se)
    return rates


def allocation_rates(alloc: Allocation, exts: ExtendedApSet, n0: float) -> np.ndarray:
    """Per-UE rates in bits/s: bandwidth-weighted sum of pattern rates."""
    rates = np.zeros(exts.n_ues)
    for pat, b in zip(alloc.patterns, alloc.beta):
        if b > 0:
            rates += b * pattern_rates(pat, exts, n0)
    return rates


def stability_margins(rates: np.ndarray, traffic: TrafficProfile) -> np.ndarray:
    """Per-UE queue margin r/D - lambda in packets/s."""
    return rates / traffic.d_bits - traffic.lam


def is_stable(rates: np.ndarray, traffic: TrafficProfile) -> bool:
    """All queues with arrivals drain strictly faster than they fill."""
    loaded = traffic.lam > 0
    if not np.any(loaded):
        return True
    return bool(np.all(stability_margins(rates, traffic)[loaded] > 0))


def utility(rates: np.ndarray, traffic: TrafficProfile, spec: UtilitySpec) -> float:
    """Network utility of a rate vector; -inf when undefined/unstable.

    sojourn-time: minus the packet-averaged M/M/1 sojourn time,
    -sum_j (lam_j / sum(lam)) / (r_j/D - lam_j), infinite for any
    overloaded queue.  UEs with no traffic carry zero weight.
    """
    r = np.asarray(rates, dtype=float)
    if spec.kind == "sum-rate":
        return float(np.sum(r))
    if spec.kind == "log-sum-rate":
        if np.any(r <= 0):
            return float("-inf")
        return float(np.sum(np.log(r)))
    total = float(np.sum(traffic.lam))
    if total <= 0:
        raise ValueError("sojourn utility needs at least one UE with traffic")
    loaded = traffic.lam > 0
    m = stability_margins(r, traffic)[loaded]
    if np.any(m <= 0):
        return float("-inf")
    w = traffic.lam[loaded] / total
    return float(-np.sum(w / m))


def utility_gradient(rates: np.ndarray, traffic: TrafficProfile, spec: UtilitySpec) -> np.ndarray:
    """Per-UE utility weights c = dU/dr, capped to stay finite.

    For the sojourn utility the margin is floored at epsilon_grad/D
    packets/s, which hands starving UEs a large but finite priority.
    Always non-negative.
    """
    r = np.asarray(rates, dtype=float)
    if spec.kind == "sum-rate":
        return np.ones_like(r)
    if spec.kind == "log-sum-rate":
        return 1.0 / np.maximum(r, spec.epsilon_grad)
    total = float(np.sum(traffic.lam))
    if total <= 0:
        raise ValueError("sojourn utility needs at least one UE with traffic")
    eps = spec.epsilon_grad / traffic.d_bits
    m = np.maximum(stability_margins(r, traffic), eps)
    return (traffic.lam / total) / traffic.d_bits / m**2


@dataclass(frozen=True)
class UtilityModel:
    """Bundles a utility spec with traffic for the master solvers.

    ``margins`` returns the quantities that must stay strictly positive
    for the utility to be finite (empty array when it always is), and
    ``exact_gradient`` is the uncapped derivative used inside line
    searches at strictly feasible points.
    """

    traffic: TrafficProfile
    spec: UtilitySpec

    def value(self, rates: np.ndarray) -> float:
        return utility(rates, self.traffic, self.spec)

    def gradient(self, rates: np.ndarray) -> np.ndarray:
        return utility_gradient(rates, self.traffic, self.spec)

    def exact_gradient(self, rates: np.ndarray) -> np.ndarray:
        r = np.asarray(rates, dtype=float)
        if self.spec.kind == "sum-rate":
            return np.ones_like(r)
        if self.spec.kind == "log-sum-rate":
            return 1.0 / r
        total = float(np.sum(self.traffic.lam))
        m = stability_margins(r, self.traffic)
        out = np.zeros_like(r)
        loaded = self.traffic.lam > 0
        out[loaded] = (self.traffic.lam[loaded] / total) / self.traffic.d_bits / m[loaded] ** 2
        return out

    def margins(self, rates: np.ndarray) -> np.ndarray:
        if self.spec.kind == "sum-rate":
            return np.empty(0)
        if self.spec.kind == "log-sum-rate":
            return np.asarray(rates, dtype=float)
        loaded = self.traffic.lam > 0
        return stability_margins(rates, self.traffic)[loaded]

    def finite(self, rates: np.ndarray) -> bool:
        m = self.margins(rates)
        return bool(np.all(m > 0)) if m.size else True
