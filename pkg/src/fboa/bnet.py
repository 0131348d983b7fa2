"""Binary Bayesian networks: K2 scoring and learning, parameters, sampling, SHD."""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import TopologicalSorter

import numpy as np
from scipy.special import gammaln
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .validation import check_binary_matrix, check_count, check_order

# family tables up to this many cells are counted with bincount, larger ones with unique
_DENSE_LIMIT = 1 << 16


@dataclass(frozen=True)
class Dag:
    """Parent sets over ``m`` nodes plus the ordering used to learn them.

    ``parents[i]`` is a sorted tuple. The ordering need not be topological
    for hand-built graphs; :func:`topological_order` handles that case.
    """

    m: int
    parents: tuple
    order: tuple = None

    def __post_init__(self):
        parents = tuple(tuple(sorted(int(p) for p in pa)) for pa in self.parents)
        if len(parents) != self.m:
            raise ValueError(f"expected {self.m} parent sets, got {len(parents)}")
        for node, pa in enumerate(parents):
            if len(set(pa)) != len(pa):
                raise ValueError(f"duplicate parent for node {node}")
            if node in pa:
                raise ValueError(f"node {node} cannot be its own parent")
            if pa and (pa[0] < 0 or pa[-1] >= self.m):
                raise ValueError(f"parent index out of range for node {node}")
        order = tuple(check_order(self.order, self.m))
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "order", order)
        topological_order(self)  # raises on cycles

    @classmethod
    def empty(cls, m, order=None):
        return cls(m, tuple(() for _ in range(m)), order)

    @classmethod
    def from_edges(cls, m, edges, order=None):
        parents = [[] for _ in range(m)]
        for u, v in edges:
            parents[v].append(u)
        return cls(m, tuple(parents), order)

    def edges(self):
        return [(p, node) for node, pa in enumerate(self.parents) for p in pa]

    def adjacency(self):
        A = np.zeros((self.m, self.m), dtype=bool)
        for u, v in self.edges():
            A[u, v] = True
        return A

    def dumps(self):
        """Adjacency-list text: one ``node: parent,parent`` line per node."""
        return "".join(f"{node}: {','.join(map(str, pa))}\n" for node, pa in enumerate(self.parents))

    @classmethod
    def loads(cls, text, order=None):
        parents = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            node, _, rest = line.partition(":")
            rest = rest.strip()
            parents[int(node)] = [int(p) for p in rest.split(",")] if rest else []
        m = len(parents)
        return cls(m, tuple(parents[i] for i in range(m)), order)


def topological_order(dag):
    """An order in which every parent precedes its children.

    The learning order is returned as-is when it already qualifies.
    """
    pos = {node: i for i, node in enumerate(dag.order)}
    if all(pos[p] < pos[node] for node, pa in enumerate(dag.parents) for p in pa):
        return list(dag.order)
    graph = {node: pa for node, pa in enumerate(dag.parents)}
    # graphlib raises CycleError on cyclic input
    return list(TopologicalSorter(graph).static_order())


@dataclass(frozen=True, eq=False)
class BayesNet:
    structure: Dag
    params: tuple

    def __post_init__(self):
        params = tuple(np.asarray(t, dtype=np.float64) for t in self.params)
        if len(params) != self.structure.m:
            raise ValueError("one CPT per node is required")
        for node, (pa, theta) in enumerate(zip(self.structure.parents, params)):
            if theta.shape != (1 << len(pa), 2):
                raise ValueError(
                    f"CPT for node {node} has shape {theta.shape}, expected {(1 << len(pa), 2)}"
                )
        object.__setattr__(self, "params", params)

    @classmethod
    def uniform(cls, m, order=None):
        dag = Dag.empty(m, order)
        return cls(dag, tuple(np.full((1, 2), 0.5) for _ in range(m)))


def _config_index(X, parents):
    j = np.zeros(X.shape[0], dtype=np.int64)
    for p in parents:
        j <<= 1
        j |= X[:, p]
    return j


def fit_params(structure, data):
    """Bayesian (Dirichlet(1)) estimate of every CPT.

    ``theta[m][j, k] = (N_mjk + 1) / (N_mj + 2)``; parent combination ``j``
    reads the sorted parent bits with the first parent most significant.
    """
    X = check_binary_matrix(data, n_features=structure.m)
    params = []
    for node, pa in enumerate(structure.parents):
        key = (_config_index(X, pa) << 1) | X[:, node]
        counts = np.bincount(key, minlength=2 << len(pa)).reshape(-1, 2).astype(np.float64)
        counts += 1.0
        params.append(counts / counts.sum(axis=1, keepdims=True))
    return tuple(params)


def sample(net, count, rng=None):
    """Draw ``count`` rows from ``net`` by ancestral sampling."""
    count = check_count(count, "count", 1)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    m = net.structure.m
    U = rng.random((count, m))
    X = np.zeros((count, m), dtype=np.uint8)
    for node in topological_order(net.structure):
        j = _config_index(X, net.structure.parents[node])
        X[:, node] = U[:, node] < net.params[node][j, 1]
    return X


def _family_scores(X, node, parents, candidates):
    """Log K2 family score of ``node`` with ``parents`` plus each candidate.

    With ``candidates=None`` the score of ``parents`` alone is returned as a
    length-1 array.
    """
    n_rows = X.shape[0]
    base = _config_index(X, parents)
    if candidates is None:
        n_cand, width = 1, len(parents)
        cfg = base[None, :]
    else:
        n_cand, width = len(candidates), len(parents) + 1
        cfg = (base[None, :] << 1) | X[:, candidates].T
    if n_rows == 0:
        return np.zeros(n_cand)
    cells_per_cand = 2 << width
    keys = (cfg << 1) | X[:, node][None, :]
    keys += (np.arange(n_cand, dtype=np.int64) * cells_per_cand)[:, None]
    if n_cand * cells_per_cand <= _DENSE_LIMIT:
        counts = np.bincount(keys.ravel(), minlength=n_cand * cells_per_cand)
        counts = counts.reshape(n_cand, -1, 2)
        n_j = counts.sum(axis=2)
        return gammaln(counts + 1.0).sum(axis=(1, 2)) - gammaln(n_j + 2.0).sum(axis=1)
    cells, n_jk = np.unique(keys.ravel(), return_counts=True)
    # cells come back sorted, so cells sharing a (candidate, config) are adjacent
    group_keys = cells >> 1
    starts = np.flatnonzero(np.r_[True, np.diff(group_keys) != 0])
    n_j = np.add.reduceat(n_jk, starts)
    cand_of_cell = cells // cells_per_cand
    cand_of_group = group_keys[starts] // (cells_per_cand >> 1)
    score = np.bincount(cand_of_cell, weights=gammaln(n_jk + 1.0), minlength=n_cand)
    score -= np.bincount(cand_of_group, weights=gammaln(n_j + 2.0), minlength=n_cand)
    return score


def family_score(data, node, parents):
    """Per-node term of the log K2 metric."""
    X = check_binary_matrix(data, allow_empty=True)
    return float(_family_scores(X, node, tuple(parents), None)[0])


def k2_score(structure, data):
    """log p(B | P) under the K2 metric, as a sum of family scores."""
    X = check_binary_matrix(data, n_features=structure.m, allow_empty=True)
    return float(sum(_family_scores(X, node, pa, None)[0] for node, pa in enumerate(structure.parents)))


def k2_learn(data, order=None, max_parents=None):
    """Greedy K2 structure search.

    Each node, visited in ``order``, starts with no parents and repeatedly
    takes the earlier node whose addition raises its family score the most,
    stopping when no addition is a strict improvement or ``max_parents`` is
    reached. Ties go to the lowest node index.
    """
    X = check_binary_matrix(data)
    m = X.shape[1]
    order = check_order(order, m)
    limit = m - 1 if max_parents is None else check_count(max_parents, "max_parents")
    parents = [() for _ in range(m)]
    for pos, node in enumerate(order):
        pool = sorted(order[:pos])
        current = _family_scores(X, node, (), None)[0]
        chosen = []
        while pool and len(chosen) < limit:
            scores = _family_scores(X, node, tuple(chosen), pool)
            best = int(np.argmax(scores))
            if not scores[best] > current:
                break
            current = scores[best]
            chosen.append(pool.pop(best))
        parents[node] = tuple(chosen)
    return Dag(m, tuple(parents), tuple(order))


def shd(a, b):
    """Structural Hamming distance between two DAGs on the same nodes.

    A node pair counts once if the edge is present in only one graph or
    points in opposite directions.
    """
    if a.m != b.m:
        raise ValueError(f"node-count mismatch: {a.m} vs {b.m}")
    A, B = a.adjacency(), b.adjacency()
    differ = (A != B) | (A.T != B.T)
    return int(np.triu(differ, k=1).sum())


class K2BayesNet(BaseEstimator):
    """Binary Bayesian network learned with K2 and Laplace-smoothed CPTs.

    Parameters
    ----------
    order : sequence of int or None, default=None
        Node ordering searched by K2. ``None`` uses the natural order.
    max_parents : int or None, default=None
        Cap on the parent-set size. ``None`` means no cap.

    Attributes
    ----------
    structure_ : Dag
    params_ : tuple of ndarray
    k2_score_ : float
        Log K2 metric of ``structure_`` on the training data.
    n_features_in_ : int
    """

    def __init__(self, order=None, max_parents=None):
        self.order = order
        self.max_parents = max_parents

    def fit(self, X, y=None):
        X = check_binary_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.structure_ = k2_learn(X, self.order, self.max_parents)
        self.params_ = fit_params(self.structure_, X)
        self.k2_score_ = k2_score(self.structure_, X)
        return self

    @property
    def network_(self):
        check_is_fitted(self, "structure_")
        return BayesNet(self.structure_, self.params_)

    def sample(self, n_samples=1, random_state=None):
        rng = check_random_state(random_state)
        gen = np.random.default_rng(rng.randint(0, 2**31 - 1))
        return sample(self.network_, n_samples, gen)

    def score_samples(self, X):
        """Log-likelihood of each row under the fitted network."""
        check_is_fitted(self, "structure_")
        X = check_binary_matrix(X, n_features=self.n_features_in_)
        logp = np.zeros(X.shape[0])
        for node, pa in enumerate(self.structure_.parents):
            j = _config_index(X, pa)
            logp += np.log(self.params_[node][j, X[:, node]])
        return logp

    def score(self, X, y=None):
        return float(self.score_samples(X).sum())
