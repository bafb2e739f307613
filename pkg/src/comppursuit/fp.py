"""Inner solver: maximize an affine utility over one flat pattern.

Given per-UE weights c >= 0, the solver seeks powers p, activity d and
associations u maximizing sum_j c_j r_j for a single full-band pattern.
The ratio terms are handled with the fractional-programming quadratic
transform: auxiliary SINR variables gamma and quadratic-transform
variables y admit closed-form updates, powers and associations have
closed-form coordinate maximizers, and activity is re-selected by an
exact maximum-weight matching over the pairing graph.  Every update is
a coordinate ascent of the transformed objective, so the objective
trace is non-decreasing.

Internally the transformed objective uses natural logs (the closed-form
updates are exact maximizers only in nats); the returned pattern is
evaluated in bits by the rate engine.  Scaling the objective by ln 2
does not change any argmax.

A link that has reached zero power is invisible to the transform (its
y stays 0), so a run can only shrink or reshuffle its initial active
set.  Cooperation therefore has to be present at initialization: the
solver runs a small set of deterministic starts (all-selfish plus
matching-based cooperative selections) and keeps the best final state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matching import PairingGraph, max_weight_selection
from .network import ChannelParams, ExtendedApSet
from .rates import NO_UE, Pattern

NEG_INF = float("-inf")


@dataclass
class FpState:
    """Solver state: a pattern plus the transform's auxiliaries.

    Arrays are indexed by extended AP id.  ``u`` holds served UEs with
    ``NO_UE`` for idle transmitters; ``gamma`` and ``y`` are the
    fractional-programming auxiliaries, both non-negative.
    """

    exts: ExtendedApSet
    params: ChannelParams
    c: np.ndarray
    p: np.ndarray
    d: np.ndarray
    u: np.ndarray
    gamma: np.ndarray
    y: np.ndarray

    def pattern(self) -> Pattern:
        return Pattern(self.p.copy(), self.d.copy(), self.u.copy())


def _serving_ids(state: FpState) -> np.ndarray:
    return np.flatnonzero(state.d & (state.u != NO_UE))


def _link_terms(state: FpState, ids: np.ndarray):
    """Per-link (c_u, p, h, interference, gamma, y) for the given ids."""
    exts = state.exts
    u = state.u[ids]
    p = state.p[ids]
    h = exts.h_serving[ids, u]
    tot = state.p @ exts.g_ext
    inter = tot[u] - p * exts.g_ext[ids, u]
    return state.c[u], p, h, inter


def objective(state: FpState) -> float:
    """Quadratic-transform objective (weighted nats/s/Hz)."""
    ids = _serving_ids(state)
    if ids.size == 0:
        return 0.0
    cu, p, h, inter = _link_terms(state, ids)
    gam = state.gamma[ids]
    y = state.y[ids]
    den = state.params.n0 + inter + p * h
    val = cu * (np.log1p(gam) - gam) + 2.0 * y * np.sqrt(cu * (1.0 + gam) * p * h) - y**2 * den
    return float(np.sum(val))


def affine_value(state: FpState) -> float:
    """sum_j c_j r_j of the current pattern, rates in nats/s/Hz."""
    ids = _serving_ids(state)
    if ids.size == 0:
        return 0.0
    cu, p, h, inter = _link_terms(state, ids)
    return float(np.sum(cu * np.log1p(p * h / (state.params.n0 + inter))))


def _assign_gamma(state: FpState) -> None:
    state.gamma[:] = 0.0
    ids = _serving_ids(state)
    if ids.size:
        _, p, h, inter = _link_terms(state, ids)
        state.gamma[ids] = p * h / (state.params.n0 + inter)


def _assign_y(state: FpState) -> None:
    state.y[:] = 0.0
    ids = _serving_ids(state)
    if ids.size:
        cu, p, h, inter = _link_terms(state, ids)
        gam = state.gamma[ids]
        state.y[ids] = np.sqrt(cu * (1.0 + gam) * p * h) / (state.params.n0 + inter + p * h)


def update_gamma(state: FpState) -> FpState:
    """Closed-form SINR auxiliaries: gamma = p*h / (n0 + interference).

    The SINR form maximizes the objective only after y is re-optimized
    for it, so the pair moves together here; with a stale y a large
    gamma jump could otherwise lower the objective.  The subsequent y
    update is then a no-op.
    """
    _assign_gamma(state)
    _assign_y(state)
    return state


def update_y(state: FpState) -> FpState:
    """Quadratic-transform auxiliaries, the exact maximizers given gamma."""
    _assign_y(state)
    return state


def update_p(state: FpState, pmax: float | None = None) -> FpState:
    """Joint closed-form power update (the objective is separable in p).

    The cross term uses this AP's gain toward the UEs served by the
    *other* links, which is what the quadratic in sqrt(p) demands; with
    every y zero the formula degenerates and an active link falls back
    to full power iff its weighted gain is positive.
    """
    if pmax is None:
        pmax = state.params.pmax
    exts = state.exts
    new_p = np.zeros_like(state.p)
    ids = _serving_ids(state)
    if ids.size:
        u = state.u[ids]
        y = state.y[ids]
        gam = state.gamma[ids]
        cu = state.c[u]
        h = exts.h_serving[ids, u]
        w = np.zeros(exts.n_ues)
        np.add.at(w, u, y**2)
        cross = (exts.g_ext @ w)[ids] - y**2 * exts.g_ext[ids, u]
        den = cross + y**2 * h
        num = cu * (1.0 + gam) * h * y**2
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.minimum(pmax, num / den**2)
        degenerate = den <= 0.0
        cand[degenerate] = np.where(cu[degenerate] * h[degenerate] > 0.0, pmax, 0.0)
        new_p[ids] = cand
    state.p = new_p
    return state


def _gain_matrix(state: FpState) -> np.ndarray:
    """t(i -> j) for every extended AP and UE, relative to serving nobody.

    Row i evaluates the objective term of AP i if it served UE j, minus
    its value when idle, so the idle option scores exactly zero and the
    sign test in the association rule is an exact coordinate comparison.
    Non-neighborhood entries are -inf.
    """
    exts = state.exts
    d = state.d.astype(float)
    act = d * (np.log1p(state.gamma) - state.gamma)
    amp = 2.0 * state.y * np.sqrt(d * (1.0 + state.gamma) * state.p)
    tot = state.p @ exts.g_ext
    own = state.p[:, None] * exts.g_ext
    tail = state.y[:, None] ** 2 * (tot[None, :] - own + state.p[:, None] * exts.h_serving)
    t = state.c[None, :] * act[:, None] + amp[:, None] * np.sqrt(state.c[None, :] * exts.h_serving) - tail
    return np.where(exts.member, t, NEG_INF)


def update_u(state: FpState) -> FpState:
    """Re-associate every extended AP to its best UE (or to nobody).

    Ties resolve to the smallest UE index; a transmitter whose best gain
    is negative goes idle and drops its power and auxiliaries (both
    moves can only raise the objective).
    """
    t = _gain_matrix(state)
    best = t.max(axis=1)
    u_new = np.argmax(t, axis=1)
    u_new[best < 0.0] = NO_UE
    u_new[np.isneginf(best)] = NO_UE
    state.u = u_new
    idle = state.u == NO_UE
    state.p[idle] = 0.0
    state.gamma[idle] = 0.0
    state.y[idle] = 0.0
    return state


def activation_weights(state: FpState) -> np.ndarray:
    """Objective gain v of activating each extended AP at its current
    power, association and auxiliaries (zero for idle or dead links)."""
    exts = state.exts
    v = np.zeros(exts.m)
    ids = np.flatnonzero(state.u != NO_UE)
    if ids.size == 0:
        return v
    u = state.u[ids]
    p = state.p[ids]
    gam = state.gamma[ids]
    y = state.y[ids]
    cu = state.c[u]
    h = exts.h_serving[ids, u]
    tot = state.p @ exts.g_ext
    inter = tot[u] - p * exts.g_ext[ids, u]
    v[ids] = (
        cu * (np.log1p(gam) - gam)
        + 2.0 * y * np.sqrt(cu * (1.0 + gam) * p * h)
        - y**2 * (inter + p * h)
    )
    return v


def pairing_graph(exts: ExtendedApSet, weights: np.ndarray) -> PairingGraph:
    """Graph with a self-loop per physical AP and an edge per virtual AP."""
    n = exts.n_physical
    edges = [(i, i, float(weights[i])) for i in range(n)]
    for t_id, (a, b) in enumerate(exts.virtual_pairs):
        edges.append((int(a), int(b), float(weights[n + t_id])))
    return PairingGraph(n, edges)


def selection_to_activity(exts: ExtendedApSet, selection) -> np.ndarray:
    """Convert matched edges back to the extended activity vector."""
    d = np.zeros(exts.m, dtype=bool)
    pair_ids = exts.pair_to_ext_id()
    for a, b in selection:
        d[a if a == b else pair_ids[(a, b)]] = True
    return d


def update_d(state: FpState, matching_backend=max_weight_selection) -> FpState:
    """Re-select the active transmitter set by max-weight matching.

    Edge weights are the activation gains; deselected transmitters drop
    power and auxiliaries, which removes their interference and can only
    raise the objective.
    """
    v = activation_weights(state)
    selection = matching_backend(pairing_graph(state.exts, v))
    d_new = selection_to_activity(state.exts, selection)
    dropped = state.d & ~d_new
    state.p[dropped] = 0.0
    state.gamma[dropped] = 0.0
    state.y[dropped] = 0.0
    state.d = d_new
    return state


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def _derive_aux(state: FpState) -> FpState:
    update_gamma(state)
    update_y(state)
    return state


def _blank_state(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray) -> FpState:
    m = exts.m
    return FpState(
        exts=exts,
        params=params,
        c=np.asarray(c, dtype=float),
        p=np.zeros(m),
        d=np.zeros(m, dtype=bool),
        u=np.full(m, NO_UE),
        gamma=np.zeros(m),
        y=np.zeros(m),
    )


def _best_ue(exts: ExtendedApSet, score: np.ndarray) -> np.ndarray:
    """Row-wise argmax over neighborhood members, NO_UE when empty."""
    masked = np.where(exts.member, score, NEG_INF)
    u = np.argmax(masked, axis=1)
    u[np.isneginf(masked.max(axis=1))] = NO_UE
    return u


def init_state(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray) -> FpState:
    """All-selfish start: every physical AP active alone at full power,
    each associated to its best weight*gain UE."""
    state = _blank_state(exts, params, c)
    state.u = _best_ue(exts, state.c[None, :] * exts.h_serving)
    state.d[: exts.n_physical] = True
    serving = state.d & (state.u != NO_UE)
    state.p[serving] = params.pmax
    return _derive_aux(state)


def init_cooperative(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray,
                     optimistic: bool = False) -> FpState:
    """Matching-based start that can activate virtual pairs.

    Each extended AP is scored by its best single-link value at full
    power, either interference-free (optimistic) or against a full-reuse
    background where every other physical AP also transmits at full
    power.  A max-weight matching on these scores picks the initial
    active set.
    """
    state = _blank_state(exts, params, c)
    if optimistic:
        denom = np.full((exts.m, exts.n_ues), params.n0)
    else:
        background = params.pmax * exts.g_ext[: exts.n_physical].sum(axis=0)
        denom = params.n0 + np.maximum(background[None, :] - params.pmax * exts.g_ext, 0.0)
    score = state.c[None, :] * np.log1p(params.pmax * exts.h_serving / denom)
    state.u = _best_ue(exts, score)
    masked = np.where(exts.member, score, NEG_INF)
    best = masked.max(axis=1)
    weights = np.where(np.isneginf(best), 0.0, best)
    selection = max_weight_selection(pairing_graph(exts, weights))
    state.d = selection_to_activity(exts, selection)
    serving = state.d & (state.u != NO_UE)
    state.p[serving] = params.pmax
    return _derive_aux(state)


def state_from_pattern(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray,
                       pattern: Pattern) -> FpState:
    """Warm start from an existing pattern."""
    state = _blank_state(exts, params, c)
    state.p = pattern.power.astype(float).copy()
    state.d = pattern.active.copy()
    state.u = pattern.served.copy()
    return _derive_aux(state)


def _informed_scores(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray,
                     pattern: Pattern) -> np.ndarray:
    """Full-power single-link value of every extended AP against the
    interference field of an existing pattern.

    For every row the contributions of all transmitters that conflict
    with it (share a physical constituent, including itself) are taken
    out of the field, since activating the row would switch those off.
    Non-members are -inf.
    """
    n = exts.n_physical
    tot = pattern.power @ exts.g_ext
    # per-physical-AP active contribution to each UE's received power
    field = np.zeros((n, exts.n_ues))
    for q in np.flatnonzero(pattern.active & (pattern.power > 0.0)):
        for q0 in exts.ext_label(int(q)):
            field[q0] += pattern.power[q] * exts.g_ext[q]
    constituents = np.zeros((exts.m, n), dtype=bool)
    constituents[np.arange(n), np.arange(n)] = True
    for t_id, (a, b) in enumerate(exts.virtual_pairs):
        constituents[n + t_id, a] = True
        constituents[n + t_id, b] = True
    relief = constituents.astype(float) @ field
    denom = params.n0 + np.maximum(tot[None, :] - relief, 0.0)
    score = c[None, :] * np.log1p(params.pmax * exts.h_serving / denom)
    return np.where(exts.member, score, NEG_INF)


def init_reseeded(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray,
                  pattern: Pattern) -> FpState:
    """Re-match against the interference field of a converged pattern.

    Each extended AP is scored by the full-power single-link value it
    would get against the pattern's actual received-power landscape;
    a fresh matching on these scores can activate pairs the static
    starts undervalued.
    """
    state = _blank_state(exts, params, c)
    masked = _informed_scores(exts, params, c, pattern)
    state.u = _best_ue(exts, masked)
    best = masked.max(axis=1)
    weights = np.where(np.isneginf(best), 0.0, best)
    selection = max_weight_selection(pairing_graph(exts, weights))
    state.d = selection_to_activity(exts, selection)
    serving = state.d & (state.u != NO_UE)
    state.p[serving] = params.pmax
    return _derive_aux(state)


def init_forced(exts: ExtendedApSet, params: ChannelParams, c: np.ndarray,
                pattern: Pattern, force_id: int, score_row: np.ndarray) -> FpState:
    """Start from a pattern with one transmitter forced active.

    Whatever currently uses the forced AP's physical constituents is
    switched off; the forced link serves its best UE at full power.
    Used by the local search to explore solo/pair exchanges the
    matching step cannot reach on its own.
    """
    state = state_from_pattern(exts, params, c, pattern)
    conflicts = np.unique(np.concatenate([exts.involvement[q] for q in exts.ext_label(force_id)]))
    state.d[conflicts] = False
    state.p[conflicts] = 0.0
    j = int(np.argmax(score_row))
    state.d[force_id] = True
    state.u[force_id] = j
    state.p[force_id] = params.pmax
    return _derive_aux(state)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class FpResult:
    pattern: Pattern
    objective: float
    trace: list = field(default_factory=list)
    converged: bool = True
    start: str = ""
    iterations: int = 0


def _run_cycles(state: FpState, tol: float, max_iters: int, power_update: bool,
                matching_backend=max_weight_selection) -> FpResult:
    trace = [objective(state)]
    converged = False
    for _ in range(max_iters):
        update_gamma(state)
        update_y(state)
        if power_update:
            update_p(state)
        update_u(state)
        update_d(state, matching_backend)
        obj = objective(state)
        prev = trace[-1]
        trace.append(obj)
        if prev != 0.0:
            rel = (obj - prev) / abs(prev)
        else:
            rel = 0.0 if obj == 0.0 else float("inf")
        if rel < tol:
            converged = True
            break
    return FpResult(
        pattern=state.pattern(),
        objective=trace[-1],
        trace=trace,
        converged=converged,
        iterations=len(trace) - 1,
    )


def solve_affine(
    c: np.ndarray,
    exts: ExtendedApSet,
    params: ChannelParams,
    tol: float = 1e-6,
    max_iters: int = 200,
    power_update: bool = True,
    warm_patterns: tuple = (),
    ls_candidates: int = 6,
    ls_rounds: int = 3,
    ls_beam: int = 2,
    matching_backend=max_weight_selection,
) -> FpResult:
    """Best pattern for the affine utility sum_j c_j r_j.

    Runs the update cycle from the deterministic built-in starts (and
    any warm patterns), each monotone in the transformed objective, and
    keeps the run with the highest final objective.  The winner then
    seeds a small beam search over restarts: a global re-matching
    against the converged interference field plus forced activations of
    the most promising idle transmitters (solo/pair exchanges the
    matching step cannot reach once a link's power has hit zero).
    ``converged`` is False when the winning run hit the iteration cap.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("affine weights must be non-negative")
    starts = [
        ("selfish", lambda: init_state(exts, params, c)),
        ("coop", lambda: init_cooperative(exts, params, c, optimistic=False)),
        ("coop-optimistic", lambda: init_cooperative(exts, params, c, optimistic=True)),
    ]
    for idx, pat in enumerate(warm_patterns):
        starts.append((f"warm-{idx}", lambda pat=pat: state_from_pattern(exts, params, c, pat)))
    best: FpResult | None = None
    for label, make in starts:
        result = _run_cycles(make(), tol, max_iters, power_update, matching_backend)
        result.start = label
        if best is None or result.objective > best.objective:
            best = result
    if ls_rounds > 0:
        best = _local_search(best, c, exts, params, tol, max_iters, power_update,
                             ls_candidates, ls_rounds, ls_beam, matching_backend)
    return best


def _activity_key(pattern: Pattern) -> tuple:
    ids = np.flatnonzero(pattern.active)
    return tuple(zip(ids.tolist(), pattern.served[ids].tolist()))


def _spawn_trials(base: Pattern, c, exts, params, ls_candidates):
    """Restart states around a converged pattern: a global re-matching
    plus the most promising forced activations (including the solo
    downgrades of every active pair)."""
    trials = [init_reseeded(exts, params, c, base)]
    if ls_candidates > 0:
        scores = _informed_scores(exts, params, c, base)
        row_best = scores.max(axis=1)
        idle = ~base.active
        order = np.argsort(-np.where(idle, row_best, NEG_INF), kind="stable")
        picked = [int(i) for i in order if idle[i] and row_best[i] > 0.0][:ls_candidates]
        for vid in np.flatnonzero(base.active[exts.n_physical:]) + exts.n_physical:
            for q in exts.ext_label(int(vid)):
                if q not in picked and row_best[q] > 0.0:
                    picked.append(q)
        trials.extend(init_forced(exts, params, c, base, fid, scores[fid]) for fid in picked)
    return trials


def _local_search(best: FpResult, c, exts, params, tol, max_iters, power_update,
                  ls_candidates, ls_rounds, ls_beam, matching_backend) -> FpResult:
    """Beam search over single-transmitter exchanges.

    Each round restarts the solver around the current bases; the top
    distinct outcomes become the next round's bases even when they do
    not beat the incumbent, which lets two-step exchanges through
    slightly worse intermediates succeed.
    """
    seen = {_activity_key(best.pattern)}
    bases = [best]
    for round_idx in range(ls_rounds):
        outcomes = []
        for base in bases:
            for state in _spawn_trials(base.pattern, c, exts, params, ls_candidates):
                key = _activity_key(state.pattern())
                if key in seen:
                    continue
                seen.add(key)
                result = _run_cycles(state, tol, max_iters, power_update, matching_backend)
                result.start = f"{base.start}+ls{round_idx}"
                outcomes.append(result)
        if not outcomes:
            break
        outcomes.sort(key=lambda r: -r.objective)
        if outcomes[0].objective > best.objective * (1.0 + 1e-12):
            best = outcomes[0]
        bases = outcomes[:ls_beam]
    return best
