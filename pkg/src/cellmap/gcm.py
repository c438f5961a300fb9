"""Generalized cell mapping: sampled transition probabilities and their classification.

The transition matrix is column stochastic and has ``total + 1`` rows and
columns; the last index stands for the sink cell.  Column ``j`` holds the
distribution of images of source cell ``j``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from ._parallel import map_chunks
from .cellspace import SINK, CellSpace
from .errors import DomainError
from .scm import evaluate_step

__all__ = [
    "Subdivision",
    "MonteCarlo",
    "TransitionMatrix",
    "GcmClassification",
    "build_gcm",
    "classify_gcm",
    "gcm_boundary_report",
    "default_sampling",
]


@dataclass(frozen=True)
class Subdivision:
    """``k`` cell-centered sample points per axis, ``k**n`` per cell."""

    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("subdivision needs k >= 1")


@dataclass(frozen=True)
class MonteCarlo:
    """``n`` uniform samples per cell, streams keyed by ``(seed, cell)``."""

    n: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("Monte-Carlo sampling needs n >= 1")


def default_sampling(cs: CellSpace):
    return Subdivision(5) if cs.ndim <= 2 else MonteCarlo(128, 0)


@dataclass
class TransitionMatrix:
    counts: sp.csc_matrix
    samples: int
    sampling: object = None
    cellspace: CellSpace | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        """Number of states including the sink."""
        return self.counts.shape[0]

    @property
    def sink(self) -> int:
        return self.size - 1

    @property
    def matrix(self) -> sp.csc_matrix:
        """Probabilities ``w[i, j]`` of moving from ``j`` to ``i``."""
        return (self.counts / self.samples).tocsc()

    def column(self, c: int) -> dict[int, float]:
        """Image distribution of cell ``c`` with SINK reported as -1."""
        j = self.sink if c == SINK else c
        col = self.counts.getcol(j)
        out = {}
        for i, v in zip(col.indices, col.data):
            out[SINK if i == self.sink else int(i)] = float(v) / self.samples
        return dict(sorted(out.items()))

    def triples(self):
        """``(source, target, probability)`` rows sorted by source then target."""
        coo = self.counts.tocoo()
        order = np.lexsort((coo.row, coo.col))
        src = np.where(coo.col == self.sink, SINK, coo.col)[order]
        dst = np.where(coo.row == self.sink, SINK, coo.row)[order]
        return src, dst, coo.data[order] / self.samples


def _sample_offsets(sampling, n_dim):
    k = sampling.k
    g = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(*([g] * n_dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_gcm(step, cs: CellSpace, sampling=None, threads: int | None = None) -> TransitionMatrix:
    """Estimate image fractions of every cell by evaluating ``step`` on samples.

    ``step`` is a batch map ``(N, n) -> (N, n)``.  Non-finite images count
    toward the sink.
    """
    sampling = sampling or default_sampling(cs)
    n = cs.ndim
    if isinstance(sampling, Subdivision):
        offsets = _sample_offsets(sampling, n)
        S = len(offsets)
    elif isinstance(sampling, MonteCarlo):
        S = sampling.n
    else:
        raise DomainError(f"unknown sampling {sampling!r}")
    sink = cs.total

    def chunk(a, b):
        cells = np.arange(a, b)
        lo = cs.lo + cs.coords(cells) * cs.widths
        if isinstance(sampling, Subdivision):
            frac = np.broadcast_to(offsets, (len(cells), S, n))
        else:
            frac = np.stack([np.random.default_rng([sampling.seed, int(c)]).random((S, n)) for c in cells])
        X = (lo[:, None, :] + frac * cs.widths).reshape(-1, n)
        img = cs.cells_of(evaluate_step(step, X))
        img[img == SINK] = sink
        return np.stack([np.repeat(cells, S), img], axis=1)

    pairs = map_chunks(chunk, cs.total, threads, chunk=max(1, 65536 // S))
    src = np.concatenate([pairs[:, 0], [sink]])
    dst = np.concatenate([pairs[:, 1], [sink]])
    data = np.ones(len(src), dtype=np.int64)
    data[-1] = S
    counts = sp.csc_matrix((data, (dst, src)), shape=(sink + 1, sink + 1))
    counts.sum_duplicates()
    counts.sort_indices()
    return TransitionMatrix(counts, S, sampling, cs)


@dataclass
class GcmClassification:
    """Persistent groups and absorption of transient cells.

    ``absorption`` has one row per entry of ``transient_cells`` and one
    column per persistent group followed by a final column for the sink.
    """

    persistent_groups: list[np.ndarray]
    transient_cells: np.ndarray
    absorption: np.ndarray
    iterations: int = 0

    def absorption_of(self, c: int) -> dict:
        """``{group_number: p, ..., "sink": p}`` for transient cell ``c``; groups are 1-based."""
        i = np.searchsorted(self.transient_cells, c)
        if i >= len(self.transient_cells) or self.transient_cells[i] != c:
            raise DomainError(f"cell {c} is not transient")
        row = self.absorption[i]
        out = {g + 1: float(p) for g, p in enumerate(row[:-1]) if p > 0}
        if row[-1] > 0:
            out["sink"] = float(row[-1])
        return out


def classify_gcm(W: TransitionMatrix, tol: float = 1e-10, max_iter: int = 100_000,
                 stochastic_tol: float = 1e-9) -> GcmClassification:
    """Closed communicating classes of the support graph and absorption probabilities."""
    P = W.matrix
    sums = np.asarray(P.sum(axis=0)).ravel()
    if np.any(np.abs(sums - 1) > stochastic_tol) or (P.data < 0).any():
        raise DomainError("transition matrix is not column stochastic")
    size, sink = W.size, W.sink
    # edge j -> i for w[i, j] > 0
    adj = P.T.tocsr()
    n_comp, label = connected_components(adj, directed=True, connection="strong")
    coo = adj.tocoo()
    leaves = np.zeros(n_comp, dtype=bool)
    leaves[label[coo.row[label[coo.row] != label[coo.col]]]] = True
    closed = ~leaves
    sink_label = label[sink]
    groups = []
    group_of = np.full(size, -1)
    for comp in np.flatnonzero(closed):
        if comp == sink_label:
            continue
        members = np.flatnonzero(label == comp)
        group_of[members] = len(groups)
        groups.append(members)
    # order groups by their smallest cell
    order = np.argsort([g[0] for g in groups]) if groups else np.array([], dtype=int)
    groups = [groups[i] for i in order]
    remap = np.empty(len(order), dtype=int)
    remap[order] = np.arange(len(order))
    group_of[group_of >= 0] = remap[group_of[group_of >= 0]]
    group_of[sink] = len(groups)

    transient = np.flatnonzero((group_of < 0) & (np.arange(size) != sink))
    G = len(groups) + 1
    if len(transient) == 0:
        return GcmClassification(groups, transient, np.zeros((0, G)), 0)

    Pt = P.T.tocsr()  # row j: distribution of images of j
    Q = Pt[transient][:, transient]
    absorbing = np.flatnonzero(group_of >= 0)
    hit = sp.csr_matrix((np.ones(len(absorbing)), (absorbing, group_of[absorbing])), shape=(size, G))
    R = (Pt[transient] @ hit).toarray()
    # start from a direct solve of (I - Q) A = R; the fixed-point sweeps
    # below then only confirm (or polish) it
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        A = spla.spsolve((sp.identity(len(transient), format="csc") - Q).tocsc(), R)
    A = np.asarray(A, dtype=float).reshape(R.shape)
    if not np.all(np.isfinite(A)):
        A = R.copy()
    it = 0
    for it in range(1, max_iter + 1):
        A_next = R + Q @ A
        delta = np.max(np.abs(A_next - A))
        A = A_next
        if delta < tol:
            break
    else:
        warnings.warn(f"absorption iteration stopped at {max_iter} steps (last change {delta:.2e})")
    return GcmClassification(groups, transient, A, it)


def gcm_boundary_report(cls: GcmClassification, cs: CellSpace, eps: float = 1e-9) -> np.ndarray:
    """Class codes per cell: ``P`` persistent, ``G`` transient into one group,
    ``S`` transient into the sink only, ``B`` mixed boundary."""
    codes = np.full(cs.total, "P", dtype=object)
    for c, row in zip(cls.transient_cells, cls.absorption):
        dest = np.flatnonzero(row > eps)
        if len(dest) >= 2:
            codes[c] = "B"
        elif len(dest) == 1 and dest[0] == len(row) - 1:
            codes[c] = "S"
        else:
            codes[c] = "G"
    return codes.reshape(cs.shape)
