"""Sensor adjacency and the cluster-based permutation test.

Variables are (channel, freq, time) cells. Two cells are adjacent when
they share a channel and sit next to each other on the freq/time grid
(4-connectivity), or when they sit at the same (freq, time) on channels
that are spatial neighbors. Positive and negative supra-threshold cells
are clustered separately; the cluster statistic is the sum of member t
values, and the per-tail null distribution is the most extreme cluster
mass across label permutations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rng import parallel_map, resolve_seed, spawn_rng
from .stats import t_critical, two_sample_t_many

__all__ = [
    "AdjacencyGraph",
    "Cluster",
    "ClusterTestConfig",
    "build_adjacency",
    "default_radius",
    "find_clusters",
    "cluster_permutation_test",
]


@dataclass(frozen=True)
class AdjacencyGraph:
    """Per-channel neighbor lists; symmetric and irreflexive."""

    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        neigh = tuple(tuple(sorted(int(j) for j in row)) for row in self.neighbors)
        for i, row in enumerate(neigh):
            if i in row:
                raise ValueError(f"channel {i} listed as its own neighbor")
            for j in row:
                if not 0 <= j < len(neigh):
                    raise ValueError(f"neighbor index {j} out of range")
                if i not in neigh[j]:
                    raise ValueError(f"adjacency not symmetric between {i} and {j}")
        object.__setattr__(self, "neighbors", neigh)

    @property
    def n_channels(self) -> int:
        return len(self.neighbors)


@dataclass(frozen=True)
class Cluster:
    """A connected set of same-sign supra-threshold (channel, freq, time) cells."""

    members: frozenset
    mass: float
    sign: str
    p: float | None = None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterTestConfig:
    """Cluster-test parameters.

    ``sample_alpha`` sets the per-variable two-tailed threshold on t;
    ``test_alpha`` is the cluster-level alpha per tail (two-tailed test);
    ``min_neighbors`` is the minimum number of spatially neighboring
    channels that must also be supra-threshold for a cell to enter
    clustering (0 disables the pruning step).
    """

    sample_alpha: float = 0.05
    test_alpha: float = 0.025
    min_neighbors: int = 2
    n_perm: int = 500
    seed: int | None = 0

    def __post_init__(self):
        for name in ("sample_alpha", "test_alpha"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.n_perm < 1:
            raise ValueError(f"n_perm must be >= 1, got {self.n_perm}")
        if self.min_neighbors < 0:
            raise ValueError(f"min_neighbors must be >= 0, got {self.min_neighbors}")


def default_radius(positions: np.ndarray) -> float:
    """Adjacency radius: 1.3 x the median nearest-neighbor distance."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.shape[0] < 2:
        return 1.0
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return 1.3 * float(np.median(d.min(axis=1)))


def build_adjacency(layout, radius: float | None = None) -> AdjacencyGraph:
    """Channels are neighbors when their layout distance is <= radius."""
    pos = np.asarray(getattr(layout, "positions", layout), dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError(f"positions must be (n, 2), got shape {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions contain NaN or Inf")
    if radius is None:
        radius = default_radius(pos)
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    rows = tuple(tuple(np.flatnonzero(d[i] <= radius).tolist()) for i in range(pos.shape[0]))
    return AdjacencyGraph(neighbors=rows)


def _prune(supra: np.ndarray, adj: AdjacencyGraph, min_neighbors: int) -> np.ndarray:
    """Drop cells with fewer than min_neighbors supra-threshold spatial neighbors."""
    if min_neighbors <= 0:
        return supra
    counts = np.zeros(supra.shape, dtype=np.intp)
    for c, row in enumerate(adj.neighbors):
        for other in row:
            counts[c] += supra[other]
    return supra & (counts >= min_neighbors)


def _components(kept: np.ndarray, adj: AdjacencyGraph) -> list[list[tuple[int, int, int]]]:
    """Connected components of kept cells under grid + sensor adjacency."""
    nc, m, n = kept.shape
    seen = np.zeros_like(kept)
    out = []
    for start in zip(*np.nonzero(kept)):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        members = []
        while stack:
            c, i, j = stack.pop()
            members.append((int(c), int(i), int(j)))
            if i > 0 and kept[c, i - 1, j] and not seen[c, i - 1, j]:
                seen[c, i - 1, j] = True
                stack.append((c, i - 1, j))
            if i + 1 < m and kept[c, i + 1, j] and not seen[c, i + 1, j]:
                seen[c, i + 1, j] = True
                stack.append((c, i + 1, j))
            if j > 0 and kept[c, i, j - 1] and not seen[c, i, j - 1]:
                seen[c, i, j - 1] = True
                stack.append((c, i, j - 1))
            if j + 1 < n and kept[c, i, j + 1] and not seen[c, i, j + 1]:
                seen[c, i, j + 1] = True
                stack.append((c, i, j + 1))
            for other in adj.neighbors[c]:
                if kept[other, i, j] and not seen[other, i, j]:
                    seen[other, i, j] = True
                    stack.append((other, i, j))
        out.append(members)
    return out


def find_clusters(
    tstats: np.ndarray,
    threshold: float,
    adj: AdjacencyGraph,
    min_neighbors: int = 0,
) -> list[Cluster]:
    """Cluster the supra-threshold cells of a (channels, freqs, times) t field.

    Positive (t > threshold) and negative (t < -threshold) cells are pruned
    and clustered separately. Clusters come back ordered by descending
    absolute mass (ties by smallest member) for deterministic output.
    """
    t = np.asarray(tstats, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"t field must be 3-D (channels, freqs, times), got {t.shape}")
    if t.shape[0] != adj.n_channels:
        raise ValueError(
            f"t field has {t.shape[0]} channels, adjacency has {adj.n_channels}"
        )
    if not threshold > 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    clusters = []
    for sign, supra in (("pos", t > threshold), ("neg", t < -threshold)):
        kept = _prune(supra, adj, min_neighbors)
        for members in _components(kept, adj):
            mass = float(sum(t[c, i, j] for c, i, j in members))
            clusters.append(Cluster(members=frozenset(members), mass=mass, sign=sign))
    clusters.sort(key=lambda cl: (-abs(cl.mass), min(cl.members)))
    return clusters


def _null_extremes(
    matrix: np.ndarray,
    codes: np.ndarray,
    shape: tuple[int, int, int],
    threshold: float,
    adj: AdjacencyGraph,
    cfg: ClusterTestConfig,
    threads: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Per permutation: the largest positive and smallest negative cluster mass."""
    seed = resolve_seed(cfg.seed)
    n = codes.size
    n_a = int(np.sum(codes == 0))

    def one(i: int) -> tuple[float, float]:
        rng = spawn_rng(seed, i)
        perm = np.ones(n, dtype=codes.dtype)
        perm[rng.permutation(n)[:n_a]] = 0
        t = two_sample_t_many(matrix, perm).reshape(shape)
        cls = find_clusters(t, threshold, adj, cfg.min_neighbors)
        pos = max((c.mass for c in cls if c.sign == "pos"), default=0.0)
        neg = min((c.mass for c in cls if c.sign == "neg"), default=0.0)
        return pos, neg

    pairs = parallel_map(one, range(cfg.n_perm), threads)
    return np.asarray([p for p, _ in pairs]), np.asarray([q for _, q in pairs])


def cluster_permutation_test(
    data,
    labels,
    layout,
    cfg: ClusterTestConfig | None = None,
    adjacency: AdjacencyGraph | None = None,
    radius: float | None = None,
    threads: int = 1,
) -> tuple[np.ndarray, list[Cluster]]:
    """Cluster-based permutation test on a trials x channels x freqs x times family.

    Parameters
    ----------
    data : TFRTensor or array (trials, channels, freqs, times)
    labels : LabelVector or 0/1 code array
    layout : SensorLayout or (n_channels, 2) positions
        Ignored when ``adjacency`` is given directly.
    cfg : ClusterTestConfig

    Returns
    -------
    p : array (channels, freqs, times)
        Each variable inherits its cluster's Monte-Carlo p-value; variables
        outside every cluster get p = 1.
    clusters : list of Cluster
        Observed clusters with p filled in, ordered by absolute mass. A
        cluster is significant for its tail when p <= cfg.test_alpha.
    """
    cfg = cfg or ClusterTestConfig()
    arr = np.asarray(getattr(data, "power", data), dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"data must be 4-D (trials, channels, freqs, times), got {arr.shape}")
    n_trials, nc, m, n = arr.shape
    codes = np.asarray(getattr(labels, "codes", labels))
    if codes.size != n_trials:
        raise ValueError(f"{codes.size} labels for {n_trials} trials")
    adj = adjacency if adjacency is not None else build_adjacency(layout, radius)
    if adj.n_channels != nc:
        raise ValueError(f"adjacency covers {adj.n_channels} channels, data has {nc}")
    matrix = arr.reshape(n_trials, -1)
    dof = n_trials - 2
    threshold = t_critical(cfg.sample_alpha, dof)
    t_obs = two_sample_t_many(matrix, codes).reshape(nc, m, n)
    observed = find_clusters(t_obs, threshold, adj, cfg.min_neighbors)
    p_field = np.ones((nc, m, n))
    if not observed:
        return p_field, []
    pos_null, neg_null = _null_extremes(
        matrix, codes, (nc, m, n), threshold, adj, cfg, threads
    )
    out = []
    for cl in observed:
        if cl.sign == "pos":
            p = (1.0 + np.sum(pos_null >= cl.mass)) / (cfg.n_perm + 1.0)
        else:
            p = (1.0 + np.sum(neg_null <= cl.mass)) / (cfg.n_perm + 1.0)
        cl = replace(cl, p=float(p))
        out.append(cl)
        for c, i, j in cl.members:
            p_field[c, i, j] = cl.p
    return p_field, out
