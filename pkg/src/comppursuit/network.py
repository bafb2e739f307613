"""Network model: topologies, channel gains, neighborhoods and virtual APs.

A downlink network is a set of access points (APs) and user terminals (UEs)
scattered over a rectangular area.  Link gains follow a log-distance path
loss model with optional log-normal shadowing.  Each UE has a neighborhood
of APs whose SNR at full power clears a threshold; any two APs that share
a UE in their neighborhoods may form a cooperating pair, modeled as an
extra "virtual" transmitter with a combined gain.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class Topology:
    """AP and UE positions (meters) inside a rectangular area."""

    ap_positions: np.ndarray  # (n, 2)
    ue_positions: np.ndarray  # (k, 2)
    area: tuple[float, float]
    seed: int

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def n_ues(self) -> int:
        return self.ue_positions.shape[0]


@dataclass(frozen=True)
class ChannelParams:
    """Channel and neighborhood parameters.

    ``pmax`` is the peak per-link power spectral density in W/Hz.  The
    default spreads a 20 dBm transmitter evenly over 100 MHz.  ``n0`` is
    thermal noise density (-174 dBm/Hz).  ``xi`` is the linear SNR
    threshold a link must clear (at full power) for the AP to enter the
    UE's neighborhood, and ``b_cap`` caps the neighborhood size.
    """

    pmax: float = 1e-9
    n0: float = 10 ** (-20.4)
    bandwidth_w: float = 100e6
    pathloss_ref_db: float = 128.1   # path loss at 1 km, dB
    pathloss_slope_db: float = 37.6  # dB per decade of distance
    min_distance_m: float = 10.0
    shadowing_sigma_db: float = 0.0  # 0 disables shadowing
    shadowing_seed: int = 0
    xi: float = 4.0
    b_cap: int = 4

    def __post_init__(self):
        if self.pmax <= 0 or self.n0 <= 0 or self.bandwidth_w <= 0:
            raise ValueError("pmax, n0 and bandwidth_w must be positive")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        if self.b_cap < 1:
            raise ValueError("b_cap must be at least 1")


def generate_topology(n: int, k: int, area=(2400.0, 2400.0), seed: int = 0) -> Topology:
    """Scatter ``n`` APs and ``k`` UEs i.i.d. uniformly over ``area``.

    Deterministic for a given seed: AP coordinates are drawn first, then
    UE coordinates, from a single ``default_rng(seed)`` stream.
    """
    if n < 1 or k < 1:
        raise ValueError("need at least one AP and one UE")
    w, h = float(area[0]), float(area[1])
    if w <= 0 or h <= 0:
        raise ValueError("area must have positive width and height")
    rng = np.random.default_rng(seed)
    aps = rng.uniform(0.0, [w, h], size=(n, 2))
    ues = rng.uniform(0.0, [w, h], size=(k, 2))
    return Topology(ap_positions=aps, ue_positions=ues, area=(w, h), seed=seed)


def topology_to_json(topo: Topology, path) -> None:
    """Write a topology as a JSON document (positions in meters)."""
    doc = {
        "area": [topo.area[0], topo.area[1]],
        "aps": topo.ap_positions.tolist(),
        "ues": topo.ue_positions.tolist(),
        "seed": topo.seed,
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def topology_from_json(path) -> Topology:
    """Load a topology written by :func:`topology_to_json`."""
    with open(path) as f:
        doc = json.load(f)
    for key in ("area", "aps", "ues", "seed"):
        if key not in doc:
            raise ValueError(f"topology file missing field {key!r}")
    aps = np.asarray(doc["aps"], dtype=float)
    ues = np.asarray(doc["ues"], dtype=float)
    if aps.ndim != 2 or aps.shape[1] != 2 or ues.ndim != 2 or ues.shape[1] != 2:
        raise ValueError("positions must be lists of [x, y] pairs")
    return Topology(
        ap_positions=aps,
        ue_positions=ues,
        area=(float(doc["area"][0]), float(doc["area"][1])),
        seed=int(doc["seed"]),
    )


def compute_gains(topo: Topology, params: ChannelParams) -> np.ndarray:
    """Linear power gains g[i, j] from AP i to UE j.

    PL(dB) = ref + slope * log10(d / 1 km), distance clamped below at
    ``min_distance_m``.  With ``shadowing_sigma_db > 0`` a log-normal
    term is drawn from ``default_rng(shadowing_seed)``, so gains stay
    deterministic for fixed parameters.
    """
    diff = topo.ap_positions[:, None, :] - topo.ue_positions[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    dist = np.maximum(dist, params.min_distance_m)
    pl_db = params.pathloss_ref_db + params.pathloss_slope_db * np.log10(dist / 1000.0)
    if params.shadowing_sigma_db > 0:
        rng = np.random.default_rng(params.shadowing_seed)
        pl_db = pl_db + params.shadowing_sigma_db * rng.standard_normal(pl_db.shape)
    return 10.0 ** (-pl_db / 10.0)


def build_neighborhoods(gains: np.ndarray, params: ChannelParams) -> list[np.ndarray]:
    """Per-UE physical neighborhoods: APs whose full-power SNR clears xi.

    When more than ``b_cap`` APs qualify, the ``b_cap`` largest gains are
    kept (ties broken toward the lower AP index).  Emits a warning for
    UEs with an empty neighborhood; such UEs are unservable.
    """
    n, k = gains.shape
    snr = gains * params.pmax / params.n0
    hoods: list[np.ndarray] = []
    empty = []
    for j in range(k):
        idx = np.flatnonzero(snr[:, j] >= params.xi)
        if idx.size > params.b_cap:
            # stable sort on -gain keeps lower indexes first among ties
            order = np.argsort(-gains[idx, j], kind="stable")
            idx = np.sort(idx[order[: params.b_cap]])
        if idx.size == 0:
            empty.append(j)
        hoods.append(idx)
    if empty:
        warnings.warn(
            f"{len(empty)} UE(s) have an empty neighborhood and will see zero rate: {empty[:10]}",
            stacklevel=2,
        )
    return hoods


@dataclass(frozen=True)
class ExtendedApSet:
    """Physical plus virtual (pairwise) APs with their effective gains.

    Extended AP ids run 0..m-1: ids below ``n_physical`` are the physical
    APs, the rest index ``virtual_pairs`` rows.  ``g_ext`` holds the gain
    each extended AP contributes as *interference* (virtual rows are the
    plain sum of the constituents' gains).  ``h_noncoherent`` and
    ``h_coherent`` are serving gains; ``mode`` selects which one the rate
    computations use.  ``member`` is the extended-neighborhood mask:
    ``member[i, j]`` is True iff extended AP i may serve UE j.
    """

    n_physical: int
    n_ues: int
    virtual_pairs: np.ndarray     # (V, 2) int, i1 < i2
    g_ext: np.ndarray             # (m, k)
    h_noncoherent: np.ndarray     # (m, k)
    h_coherent: np.ndarray        # (m, k)
    member: np.ndarray            # (m, k) bool
    mode: str                     # "noncoherent" | "coherent" | "physical"
    involvement: tuple = field(repr=False, default=())  # per physical AP: extended ids

    @property
    def m(self) -> int:
        return self.g_ext.shape[0]

    @property
    def n_virtual(self) -> int:
        return self.virtual_pairs.shape[0]

    @property
    def h_serving(self) -> np.ndarray:
        return self.h_coherent if self.mode == "coherent" else self.h_noncoherent

    def pair_to_ext_id(self) -> dict:
        """Map (i1, i2) physical pairs to extended ids."""
        n = self.n_physical
        return {(int(a), int(b)): n + t for t, (a, b) in enumerate(self.virtual_pairs)}

    def ext_label(self, i: int) -> tuple:
        """Constituent physical ids of extended AP ``i`` (1 or 2 of them)."""
        if i < self.n_physical:
            return (i,)
        a, b = self.virtual_pairs[i - self.n_physical]
        return (int(a), int(b))

    def with_mode(self, mode: str) -> "ExtendedApSet":
        if mode not in ("noncoherent", "coherent", "physical"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "physical" and self.n_virtual > 0:
            raise ValueError("cannot switch a set with virtual APs to physical mode")
        return replace(self, mode=mode)


def enumerate_extended(
    neighborhoods: list[np.ndarray],
    gains: np.ndarray,
    params: ChannelParams,
    mode: str = "noncoherent",
    include_virtual: bool = True,
) -> ExtendedApSet:
    """Build the extended AP set from physical neighborhoods.

    A virtual pair (i1, i2), i1 < i2, exists iff some UE has both APs in
    its neighborhood.  Extended neighborhoods apply the same xi test to
    the combined gain g1 + g2, so a pair can serve a UE even when neither
    constituent qualifies alone.  Serving gains: non-coherent pairs pool
    power (g1 + g2); coherent pairs add amplitudes (g1 + g2 + 2*sqrt(g1*g2)).
    Interference from a pair is always the non-coherent sum.

    ``include_virtual=False`` yields a physical-only set (mode forced to
    "physical") used by the no-cooperation scenarios.
    """
    n, k = gains.shape
    if not include_virtual:
        mode = "physical"
    elif mode not in ("noncoherent", "coherent"):
        raise ValueError(f"unknown mode {mode!r}")

    pairs: list[tuple[int, int]] = []
    if include_virtual:
        seen = set()
        for j in range(k):
            hood = neighborhoods[j]
            for a in range(hood.size):
                for b in range(a + 1, hood.size):
                    seen.add((int(hood[a]), int(hood[b])))
        pairs = sorted(seen)
    vp = np.asarray(pairs, dtype=int).reshape(-1, 2)
    V = vp.shape[0]
    m = n + V

    g_ext = np.zeros((m, k))
    g_ext[:n] = gains
    h_non = g_ext.copy()
    h_coh = g_ext.copy()
    if V:
        g1 = gains[vp[:, 0]]
        g2 = gains[vp[:, 1]]
        g_ext[n:] = g1 + g2
        h_non[n:] = g1 + g2
        h_coh[n:] = g1 + g2 + 2.0 * np.sqrt(g1 * g2)

    member = np.zeros((m, k), dtype=bool)
    for j in range(k):
        member[neighborhoods[j], j] = True
    if V:
        snr_v = g_ext[n:] * params.pmax / params.n0
        member[n:] = snr_v >= params.xi

    involvement = []
    for i in range(n):
        ids = [i]
        if V:
            hit = np.flatnonzero((vp[:, 0] == i) | (vp[:, 1] == i))
            ids.extend((n + hit).tolist())
        involvement.append(np.asarray(ids, dtype=int))

    return ExtendedApSet(
        n_physical=n,
        n_ues=k,
        virtual_pairs=vp,
        g_ext=g_ext,
        h_noncoherent=h_non,
        h_coherent=h_coh,
        member=member,
        mode=mode,
        involvement=tuple(involvement),
    )


def build_extended_model(topo: Topology, params: ChannelParams, mode: str = "noncoherent",
                         include_virtual: bool = True) -> ExtendedApSet:
    """Convenience pipeline: gains -> neighborhoods -> extended AP set."""
    gains = compute_gains(topo, params)
    hoods = build_neighborhoods(gains, params)
    return enumerate_extended(hoods, gains, params, mode=mode, include_virtual=include_virtual)
