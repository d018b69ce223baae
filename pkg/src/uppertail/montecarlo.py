"""Sampling, exact small-n tail oracles, and tail estimators.

Randomness comes from counter-based Philox streams keyed by (master seed,
replica index), so every estimate is bit-identical across reruns and
independent of how replicas are scheduled; acceptance counters are integers
and float partials are reduced in replica order.

Three counting paths keep per-sample work cheap: full enumeration over all
graphs for n <= 6 (each copy of the pattern in K_n reduced to an edge
bitmask), degree closed forms for stars at any n, and the generic
backtracking counter as a fallback.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ResourceBudgetError, ValidationError
from .graphs import HostGraph, PatternGraph, is_connected, is_strictly_balanced, star_arms
from .counting import _copy_edge_sets, count_labelled, automorphism_count
from .meanfield import EdgeProbabilityMatrix

EXACT_TAIL_MAX_N = 6
DEFAULT_REPLICAS = 32


@dataclass(frozen=True)
class TailEstimate:
    point: float
    stderr: float
    method: str  # "exact" | "direct" | "importance"
    samples: int
    seed: int
    extras: dict = field(default_factory=dict)


def _replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(seed, replica))))


def _chunk_sizes(total: int, replicas: int) -> list[int]:
    base, extra = divmod(total, replicas)
    return [base + (1 if i < extra else 0) for i in range(replicas)]


def _map_replicas(worker: Callable[[int, int], object], sizes: Sequence[int], threads: int = 1) -> list:
    """Run worker(replica_index, chunk_size) for each replica; results are
    returned in replica order regardless of scheduling."""
    jobs = [(i, m) for i, m in enumerate(sizes) if m > 0]
    if threads <= 1 or len(jobs) <= 1:
        return [worker(i, m) for i, m in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, i, m) for i, m in jobs]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

_DENSE_SAMPLING_LIMIT = 2048


def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(n, k=1)
    return iu[0].astype(np.int64), iu[1].astype(np.int64)


def _gnp_edge_arrays(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if p <= 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    total = n * (n - 1) // 2
    if p >= 1.0:
        u, v = _pair_arrays(n)
        return u, v
    if n <= _DENSE_SAMPLING_LIMIT:
        u, v = _pair_arrays(n)
        present = rng.random(total) < p
        return u[present], v[present]
    # Geometric skipping through the linearized pair indices.
    positions = []
    pos = -1
    batch = max(1024, int(total * p * 1.2))
    while True:
        jumps = rng.geometric(p, size=batch)
        steps = np.cumsum(jumps) + pos
        inside = steps[steps < total]
        positions.append(inside)
        if len(inside) < len(steps):
            break
        pos = int(steps[-1])
    idx = np.concatenate(positions)
    # Decode linear index -> (u, v) with row offsets of the upper triangle.
    offsets = np.cumsum(np.concatenate([[0], np.arange(n - 1, 0, -1)]))
    u = np.searchsorted(offsets, idx, side="right") - 1
    v = idx - offsets[u] + u + 1
    return u.astype(np.int64), v.astype(np.int64)


def sample_gnp(n: int, p: float, seed: int) -> HostGraph:
    """One binomial random graph; deterministic given the seed."""
    if not 0 <= p <= 1:
        raise ValidationError("p must lie in [0, 1]")
    rng = _replica_rng(seed, 0)
    u, v = _gnp_edge_arrays(n, p, rng)
    return HostGraph(n, zip(u.tolist(), v.tolist()))


def sample_inhom(xi: EdgeProbabilityMatrix, seed: int) -> HostGraph:
    """One graph with independent edges at the matrix's probabilities."""
    n = xi.n
    rng = _replica_rng(seed, 0)
    if xi.is_dense or n <= _DENSE_SAMPLING_LIMIT:
        dense = xi.to_dense()
        u, v = _pair_arrays(n)
        present = rng.random(len(u)) < dense[u, v]
        return HostGraph(n, zip(u[present].tolist(), v[present].tolist()))
    # Structured large-n path: background pairs by geometric skipping among
    # ordinary vertices, special rows handled explicitly.
    special = sorted(xi.hubs | ({xi.boosted} if xi.boosted is not None else set()))
    special_set = set(special)
    u, v = _gnp_edge_arrays(n, xi.background, rng)
    keep = [
        (a, b)
        for a, b in zip(u.tolist(), v.tolist())
        if a not in special_set and b not in special_set
    ]
    edges = keep
    others = np.array([w for w in range(n) if w not in special_set], dtype=np.int64)
    for h in sorted(xi.hubs):
        edges.extend((min(h, int(w)), max(h, int(w))) for w in others)
        for h2 in sorted(xi.hubs):
            if h2 > h and rng.random() < xi.background:
                edges.append((h, h2))
    if xi.boosted is not None:
        b = xi.boosted
        targets = np.arange(n)
        targets = targets[targets != b]
        present = rng.random(len(targets)) < xi.boosted_value
        edges.extend((min(b, int(w)), max(b, int(w))) for w in targets[present])
    return HostGraph(n, edges)


def star_count_samples(
    xi: EdgeProbabilityMatrix,
    r: int,
    samples: int,
    seed: int,
    replicas: int = DEFAULT_REPLICAS,
    threads: int = 1,
) -> np.ndarray:
    """Labelled r-star counts of ``samples`` independent draws from xi."""
    n = xi.n
    if n > _DENSE_SAMPLING_LIMIT:
        raise ValidationError("star sampling requires n within the dense limit")
    if n ** (r + 1) >= 2**62:
        raise ValidationError("star counts would overflow 64-bit accumulation")
    dense = xi.to_dense()
    pair_u, pair_v = _pair_arrays(n)
    probs = dense[pair_u, pair_v]

    def worker(replica: int, m: int) -> np.ndarray:
        rng = _replica_rng(seed, replica)
        out = np.empty(m, dtype=np.int64)
        for s in range(m):
            present = rng.random(len(probs)) < probs
            deg = np.bincount(pair_u[present], minlength=n) + np.bincount(
                pair_v[present], minlength=n
            )
            value = np.ones(n, dtype=np.int64)
            for i in range(r):
                value *= deg - i
            out[s] = value.sum()
        return out

    parts = _map_replicas(worker, _chunk_sizes(samples, replicas), threads)
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# Exact tail oracle (n <= 6)
# ---------------------------------------------------------------------------

def _pair_index_map(n: int) -> dict[tuple[int, int], int]:
    index = {}
    for i, (u, v) in enumerate(zip(*_pair_arrays(n))):
        index[(int(u), int(v))] = i
    return index


def _copy_masks(pattern: PatternGraph, n: int) -> tuple[list[int], int]:
    """Edge bitmasks of the distinct copies of the pattern in K_n, plus
    Aut(H): the labelled count in a graph g is Aut times the number of masks
    contained in g."""
    index = _pair_index_map(n)
    masks = []
    for edge_set in _copy_edge_sets(pattern, HostGraph.complete(n), None):
        masks.append(sum(1 << index[e] for e in edge_set))
    return masks, automorphism_count(pattern)


def _popcounts_upto(limit: int) -> np.ndarray:
    out = np.zeros(limit, dtype=np.int64)
    bit = 0
    while (1 << (bit + 1)) <= limit:
        out[1 << bit : 1 << (bit + 1)] = out[: 1 << bit] + 1
        bit += 1
    return out


def exact_tail(pattern: PatternGraph, n: int, p: float, threshold: int) -> TailEstimate:
    """P(N >= threshold) by summing over all labelled graphs on n vertices."""
    if n > EXACT_TAIL_MAX_N:
        raise ValidationError(f"exact tail enumeration capped at n = {EXACT_TAIL_MAX_N}")
    if not 0 <= p <= 1:
        raise ValidationError("p must lie in [0, 1]")
    total_pairs = n * (n - 1) // 2
    size = 1 << total_pairs
    masks, aut = _copy_masks(pattern, n)
    all_graphs = np.arange(size, dtype=np.int64)
    contained = np.zeros(size, dtype=np.int64)
    for m in masks:
        contained += (all_graphs & m) == m
    labelled = contained * aut
    popcnt = _popcounts_upto(size)
    # Plain powers keep round cases exact (0^0 = 1 covers p in {0, 1}).
    weights = np.power(p, popcnt) * np.power(1.0 - p, total_pairs - popcnt)
    point = float(weights[labelled >= threshold].sum())
    return TailEstimate(point=min(point, 1.0), stderr=0.0, method="exact", samples=size, seed=0)


# ---------------------------------------------------------------------------
# Direct and importance-sampled estimation
# ---------------------------------------------------------------------------

def _count_batch(
    pattern: PatternGraph,
    n: int,
    present: np.ndarray,
    pair_u: np.ndarray,
    pair_v: np.ndarray,
    masks_aut,
) -> np.ndarray:
    """Labelled counts for a batch of sampled edge-indicator rows."""
    m = present.shape[0]
    if masks_aut is not None:
        masks, aut = masks_aut
        powers = (np.int64(1) << np.arange(present.shape[1], dtype=np.int64))
        graphs = present.astype(np.int64) @ powers
        counts = np.zeros(m, dtype=np.int64)
        for mask in masks:
            counts += (graphs & mask) == mask
        return counts * aut
    r = star_arms(pattern)
    if r is not None and n ** (r + 1) < 2**62:
        counts = np.empty(m, dtype=np.int64)
        for s in range(m):
            row = present[s]
            deg = np.bincount(pair_u[row], minlength=n) + np.bincount(pair_v[row], minlength=n)
            value = np.ones(n, dtype=np.int64)
            for i in range(r):
                value *= deg - i
            counts[s] = value.sum()
        return counts
    counts = np.empty(m, dtype=np.int64)
    for s in range(m):
        row = present[s]
        host = HostGraph(n, zip(pair_u[row].tolist(), pair_v[row].tolist()))
        counts[s] = count_labelled(pattern, host)
    return counts


def _prepare_counting(pattern: PatternGraph, n: int):
    masks_aut = _copy_masks(pattern, n) if n <= EXACT_TAIL_MAX_N else None
    pair_u, pair_v = _pair_arrays(n)
    return masks_aut, pair_u, pair_v


def estimate_tail_direct(
    pattern: PatternGraph,
    n: int,
    p: float,
    threshold: int,
    samples: int,
    seed: int,
    replicas: int = DEFAULT_REPLICAS,
    threads: int = 1,
    batch: int = 4096,
) -> TailEstimate:
    """Empirical tail frequency with binomial standard error."""
    if not 0 <= p <= 1:
        raise ValidationError("p must lie in [0, 1]")
    if samples < 1:
        raise ValidationError("need at least one sample")
    masks_aut, pair_u, pair_v = _prepare_counting(pattern, n)
    n_pairs = len(pair_u)

    def worker(replica: int, m: int) -> int:
        rng = _replica_rng(seed, replica)
        accepted = 0
        left = m
        while left > 0:
            take = min(left, batch)
            present = rng.random((take, n_pairs)) < p
            counts = _count_batch(pattern, n, present, pair_u, pair_v, masks_aut)
            accepted += int((counts >= threshold).sum())
            left -= take
        return accepted

    accepts = sum(_map_replicas(worker, _chunk_sizes(samples, replicas), threads))
    point = accepts / samples
    stderr = math.sqrt(point * (1 - point) / samples)
    return TailEstimate(
        point=point,
        stderr=stderr,
        method="direct",
        samples=samples,
        seed=seed,
        extras={"accepted": accepts},
    )


@dataclass(frozen=True)
class Planting:
    """Importance-sampling proposal: which pairs get boosted and to what.

    ``hub``: all pairs touching the first ``size`` vertices; ``clique``: all
    pairs inside the first ``size`` vertices; ``highdeg``: one boosted row
    (hub of size 1); ``none``: no modification.  The boosted probability must
    stay strictly inside (0, 1) so the estimator remains unbiased for the
    background measure.
    """

    kind: str
    size: int = 0
    value: float = 0.8

    @classmethod
    def parse(cls, text: str) -> "Planting":
        parts = text.split(":")
        kind = parts[0]
        if kind == "none":
            return cls("none")
        if kind == "highdeg":
            value = float(parts[1]) if len(parts) > 1 else 0.8
            return cls("highdeg", 1, value)
        if kind in ("hub", "clique"):
            if len(parts) < 2:
                raise ValidationError(f"{kind} planting needs a size, e.g. {kind}:2")
            value = float(parts[2]) if len(parts) > 2 else 0.8
            return cls(kind, int(parts[1]), value)
        raise ValidationError(f"unknown planting {text!r}")

    def boosted_pair_mask(self, pair_u: np.ndarray, pair_v: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(len(pair_u), dtype=bool)
        if self.kind in ("hub", "highdeg"):
            k = self.size if self.kind == "hub" else 1
            return (pair_u < k) | (pair_v < k)
        if self.kind == "clique":
            return (pair_u < self.size) & (pair_v < self.size)
        raise ValidationError(f"unknown planting kind {self.kind!r}")


def estimate_tail_importance(
    pattern: PatternGraph,
    n: int,
    p: float,
    threshold: int,
    planting: Planting,
    samples: int,
    seed: int,
    replicas: int = DEFAULT_REPLICAS,
    threads: int = 1,
    batch: int = 4096,
) -> TailEstimate:
    """Unbiased tail estimate from a tilted product measure.

    Samples come from the planting's probabilities; each sample is weighted
    by the likelihood ratio of the background measure against the proposal.
    Reports the effective sample size alongside the estimate.
    """
    if not 0 < p < 1:
        raise ValidationError("p must lie in (0, 1)")
    if planting.kind != "none" and not p <= planting.value < 1:
        raise ValidationError("planted probability must lie in [p, 1) for an unbiased estimator")
    masks_aut, pair_u, pair_v = _prepare_counting(pattern, n)
    boosted = planting.boosted_pair_mask(pair_u, pair_v)
    q = np.where(boosted, planting.value, p)
    boosted_idx = np.flatnonzero(boosted)
    log_hit = math.log(p / planting.value) if planting.kind != "none" else 0.0
    log_miss = (
        math.log((1 - p) / (1 - planting.value)) if planting.kind != "none" else 0.0
    )

    def worker(replica: int, m: int) -> tuple[float, float, float, float, int]:
        rng = _replica_rng(seed, replica)
        s1 = s2 = w1 = w2 = 0.0
        accepted = 0
        left = m
        while left > 0:
            take = min(left, batch)
            present = rng.random((take, len(pair_u))) < q
            counts = _count_batch(pattern, n, present, pair_u, pair_v, masks_aut)
            hits = present[:, boosted_idx].sum(axis=1)
            log_w = hits * log_hit + (len(boosted_idx) - hits) * log_miss
            w = np.exp(log_w)
            ind = counts >= threshold
            contrib = w * ind
            s1 += float(contrib.sum())
            s2 += float((contrib**2).sum())
            w1 += float(w.sum())
            w2 += float((w**2).sum())
            accepted += int(ind.sum())
            left -= take
        return s1, s2, w1, w2, accepted

    parts = _map_replicas(worker, _chunk_sizes(samples, replicas), threads)
    s1 = math.fsum(part[0] for part in parts)
    s2 = math.fsum(part[1] for part in parts)
    w1 = math.fsum(part[2] for part in parts)
    w2 = math.fsum(part[3] for part in parts)
    accepted = sum(part[4] for part in parts)
    point = s1 / samples
    variance = max(s2 / samples - point**2, 0.0)
    ess = w1**2 / w2 if w2 > 0 else 0.0
    return TailEstimate(
        point=point,
        stderr=math.sqrt(variance / samples),
        method="importance",
        samples=samples,
        seed=seed,
        extras={"accepted": accepted, "effective_samples": ess, "mean_weight": w1 / samples},
    )


def threshold_for(delta: float, pattern: PatternGraph, n: int, p: float) -> int:
    """ceil((1 + delta) n^v p^e): the tail threshold as an explicit count."""
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    return math.ceil((1 + delta) * n**pattern.vertex_count * p**pattern.edge_count)


# ---------------------------------------------------------------------------
# Conditioned-structure and Poisson experiments
# ---------------------------------------------------------------------------

class HighDegreeDetector:
    """Detector: does the graph have a vertex of degree >= threshold?"""

    def __init__(self, threshold: float):
        self.threshold = threshold

    def evaluate_host(self, host: HostGraph) -> bool:
        return max(host.degrees()) >= self.threshold

    def evaluate_degrees(self, degrees: np.ndarray) -> np.ndarray:
        return degrees.max(axis=1) >= self.threshold


@dataclass(frozen=True)
class ConditionedFrequencies:
    freq_conditioned: float
    freq_unconditioned: float
    accepted: int
    samples: int
    acceptance: float


def conditioned_structure_frequency(
    pattern: PatternGraph,
    n: int,
    p: float,
    delta: float,
    detector,
    samples: int,
    seed: int,
    min_accepted: int = 300,
    acceptance_floor: float = 1e-5,
    pilot: int = 50_000,
    batch: int = 4096,
    threshold: Optional[int] = None,
) -> ConditionedFrequencies:
    """Rejection-sample the tail event and compare detector frequencies.

    A pilot run estimates the acceptance probability first; if it appears to
    be below the floor the run is refused (use the importance variant for
    events that rare).  Sampling then continues until ``min_accepted``
    conditioned samples or the sample budget is exhausted.  ``threshold``
    overrides the default ceil((1+delta) n^v p^e) count.
    """
    if threshold is None:
        threshold = threshold_for(delta, pattern, n, p)
    masks_aut, pair_u, pair_v = _prepare_counting(pattern, n)
    r = star_arms(pattern)

    hits_cond = 0
    hits_all = 0
    accepted = 0
    drawn = 0
    replica = 0

    def run_batch(rng, take):
        nonlocal hits_cond, hits_all, accepted, drawn
        present = rng.random((take, len(pair_u))) < p
        counts = _count_batch(pattern, n, present, pair_u, pair_v, masks_aut)
        if r is not None and hasattr(detector, "evaluate_degrees"):
            deg = np.empty((take, n), dtype=np.int64)
            for s in range(take):
                row = present[s]
                deg[s] = np.bincount(pair_u[row], minlength=n) + np.bincount(
                    pair_v[row], minlength=n
                )
            flags = np.asarray(detector.evaluate_degrees(deg), dtype=bool)
        else:
            flags = np.empty(take, dtype=bool)
            for s in range(take):
                row = present[s]
                host = HostGraph(n, zip(pair_u[row].tolist(), pair_v[row].tolist()))
                flags[s] = detector.evaluate_host(host)
        good = counts >= threshold
        hits_cond += int((flags & good).sum())
        hits_all += int(flags.sum())
        accepted += int(good.sum())
        drawn += take

    pilot_budget = min(pilot, samples)
    while drawn < pilot_budget:
        rng = _replica_rng(seed, replica)
        replica += 1
        run_batch(rng, min(batch, pilot_budget - drawn))
    acceptance_estimate = accepted / drawn if drawn else 0.0
    if acceptance_estimate < acceptance_floor:
        raise ResourceBudgetError(
            f"acceptance too rare (estimated {acceptance_estimate:.2e} from {drawn} pilot "
            "samples); use the importance-sampling variant"
        )
    while accepted < min_accepted and drawn < samples:
        rng = _replica_rng(seed, replica)
        replica += 1
        run_batch(rng, min(batch, samples - drawn))
    return ConditionedFrequencies(
        freq_conditioned=hits_cond / accepted if accepted else 0.0,
        freq_unconditioned=hits_all / drawn,
        accepted=accepted,
        samples=drawn,
        acceptance=accepted / drawn,
    )


@dataclass(frozen=True)
class PoissonFit:
    tv_distance: float
    mean: float
    samples: int


def poisson_fit_experiment(
    pattern: PatternGraph,
    n: int,
    p: float,
    samples: int,
    seed: int,
    replicas: int = DEFAULT_REPLICAS,
    threads: int = 1,
    mean_window: tuple[float, float] = (0.5, 20.0),
) -> PoissonFit:
    """Total-variation distance between sampled unlabelled-copy counts and a
    Poisson law with the empirical mean.

    Requires a strictly balanced pattern with expected unlabelled count
    inside ``mean_window`` (the near-threshold regime where the count is
    approximately Poisson).
    """
    if not is_connected(pattern) or not is_strictly_balanced(pattern):
        raise ValidationError("pattern must be connected and strictly balanced")
    if p == 0:
        return PoissonFit(tv_distance=0.0, mean=0.0, samples=samples)
    aut = automorphism_count(pattern)
    mu = n**pattern.vertex_count * p**pattern.edge_count / aut
    if not mean_window[0] <= mu <= mean_window[1]:
        raise ValidationError(
            f"expected unlabelled count {mu:.3g} outside window {mean_window}"
        )
    pair_u, pair_v = _pair_arrays(n)
    is_triangle = pattern.vertex_count == 3 and pattern.edge_count == 3
    r = star_arms(pattern)

    def count_one(edge_u: np.ndarray, edge_v: np.ndarray) -> int:
        if is_triangle:
            us, vs = edge_u.tolist(), edge_v.tolist()
            rows = [0] * n  # Python ints: bitset rows beyond 64 vertices
            for a, b in zip(us, vs):
                rows[a] |= 1 << b
                rows[b] |= 1 << a
            return sum((rows[a] & rows[b]).bit_count() for a, b in zip(us, vs)) // 3
        if r is not None:
            deg = np.bincount(edge_u, minlength=n) + np.bincount(edge_v, minlength=n)
            return int(sum(math.comb(int(d), r) for d in deg))
        host = HostGraph(n, zip(edge_u.tolist(), edge_v.tolist()))
        return count_labelled(pattern, host) // aut

    def worker(replica: int, m: int) -> np.ndarray:
        rng = _replica_rng(seed, replica)
        out = np.empty(m, dtype=np.int64)
        chunk = max(1, min(m, 8_000_000 // max(len(pair_u), 1)))
        done = 0
        while done < m:
            take = min(chunk, m - done)
            block = rng.random((take, len(pair_u))) < p
            for s in range(take):
                row = block[s]
                out[done + s] = count_one(pair_u[row], pair_v[row])
            done += take
        return out

    parts = _map_replicas(worker, _chunk_sizes(samples, replicas), threads)
    counts = np.concatenate(parts)
    mean = float(counts.mean())
    values, freq = np.unique(counts, return_counts=True)
    empirical = freq / samples
    if mean == 0.0:
        poisson = np.where(values == 0, 1.0, 0.0)
    else:
        log_pmf = values * math.log(mean) - mean - np.array(
            [math.lgamma(int(k) + 1) for k in values]
        )
        poisson = np.exp(log_pmf)
    tv = 0.5 * float(np.abs(empirical - poisson).sum())
    return PoissonFit(tv_distance=tv, mean=mean, samples=samples)
