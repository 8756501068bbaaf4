"""Immutable weighted directed graph with CSR adjacency in both directions.

Edge weights are the influence values beta(x, y) in [0, 1]. Node labels are
arbitrary strings; internally every node has a dense integer index assigned in
order of first appearance.
"""

from __future__ import annotations

import io
from typing import Iterable, Sequence, TextIO

import numpy as np

from critnodes.errors import GraphLookupError, GraphModelError, GraphParseError, GraphRangeError, GraphStructureError

__all__ = ["Graph", "load_edge_list", "dump_edge_list", "erdos_renyi", "LT_TOLERANCE"]

# Slack on the sum-of-in-weights <= 1 check; decimal weights such as 0.1 * 10
# overshoot 1.0 by a few ulps.
LT_TOLERANCE = 1e-9


class Graph:
    """Weighted directed graph without self-loops or parallel edges.

    Out-edges are stored sorted by ``(src, dst)`` index. The position of an
    edge in that order is its *edge id*; IC coin vectors are indexed by it.
    """

    __slots__ = (
        "_labels", "_index", "out_ptr", "out_idx", "out_w",
        "in_ptr", "in_idx", "in_w", "in_eid", "_lt_valid", "_in_sum",
    )

    def __init__(self, labels: Sequence[str], src: Sequence[int], dst: Sequence[int], weight: Sequence[float]):
        labels = [str(s) for s in labels]
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise GraphStructureError("duplicate node labels")
        n = len(labels)
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        w = np.asarray(weight, dtype=np.float64).reshape(-1)
        if not (len(src) == len(dst) == len(w)):
            raise ValueError("src, dst and weight must have equal length")
        if len(src) and (src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n):
            raise GraphLookupError("edge endpoint out of range")
        if np.any(src == dst):
            i = int(np.flatnonzero(src == dst)[0])
            raise GraphStructureError(f"self-loop on node {labels[src[i]]!r}")
        bad = ~((w >= 0.0) & (w <= 1.0))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise GraphRangeError(f"weight {w[i]!r} on edge {labels[src[i]]!r}->{labels[dst[i]]!r} outside [0, 1]")

        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        if len(src) > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if np.any(dup):
                i = int(np.flatnonzero(dup)[0])
                raise GraphStructureError(f"duplicate edge {labels[src[i]]!r}->{labels[dst[i]]!r}")

        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        in_order = np.lexsort((src, dst))
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_ptr[1:])

        self._labels = tuple(labels)
        self._index = index
        self.out_ptr = out_ptr
        self.out_idx = dst
        self.out_w = w
        self.in_ptr = in_ptr
        self.in_idx = src[in_order]
        self.in_w = w[in_order]
        self.in_eid = in_order.astype(np.int64)
        self._in_sum = np.bincount(dst, weights=w, minlength=n) if n else np.zeros(0)
        self._lt_valid = bool(np.all(self._in_sum <= 1.0 + LT_TOLERANCE))
        for arr in (self.out_ptr, self.out_idx, self.out_w, self.in_ptr, self.in_idx, self.in_w, self.in_eid):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str, float]], nodes: Iterable[str] = ()) -> "Graph":
        """Build a graph from labeled ``(src, dst, weight)`` triples.

        Extra ``nodes`` (e.g. isolated ones) are indexed first, in the given order.
        """
        labels: list[str] = []
        index: dict[str, int] = {}

        def idx(label) -> int:
            label = str(label)
            if label not in index:
                index[label] = len(labels)
                labels.append(label)
            return index[label]

        for v in nodes:
            idx(v)
        src, dst, w = [], [], []
        for a, b, weight in edges:
            src.append(idx(a))
            dst.append(idx(b))
            w.append(float(weight))
        return cls(labels, src, dst, w)

    # -- basic queries ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._labels)

    @property
    def m(self) -> int:
        return len(self.out_idx)

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def lt_valid(self) -> bool:
        """True when every node's incoming weights sum to at most 1."""
        return self._lt_valid

    def in_weight_sum(self, x: str) -> float:
        return float(self._in_sum[self.index(x)])

    def __len__(self) -> int:
        return self.n

    def __contains__(self, x) -> bool:
        return x in self._index

    def index(self, x: str) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise GraphLookupError(f"unknown node {x!r}") from None

    def indices(self, nodes: Iterable[str]) -> np.ndarray:
        return np.fromiter((self.index(x) for x in nodes), dtype=np.int64)

    def label(self, i: int) -> str:
        return self._labels[i]

    def edges(self):
        """Yield ``(src, dst, weight)`` labeled triples in edge-id order."""
        lab = self._labels
        for u in range(self.n):
            for e in range(self.out_ptr[u], self.out_ptr[u + 1]):
                yield lab[u], lab[self.out_idx[e]], float(self.out_w[e])

    def edge_id(self, x: str, y: str) -> int:
        """Edge id of ``x -> y``; -1 when absent."""
        u, v = self.index(x), self.index(y)
        return self._edge_id(u, v)

    def _edge_id(self, u: int, v: int) -> int:
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        j = lo + int(np.searchsorted(self.out_idx[lo:hi], v))
        if j < hi and self.out_idx[j] == v:
            return int(j)
        return -1

    def weight(self, x: str, y: str) -> float:
        """beta(x, y); 0.0 when the edge is absent."""
        return self._weight(self.index(x), self.index(y))

    def _weight(self, u: int, v: int) -> float:
        e = self._edge_id(u, v)
        return float(self.out_w[e]) if e >= 0 else 0.0

    def neighbors(self, x: str, mode: str = "all") -> set[str]:
        lab = self._labels
        return {lab[i] for i in self._neighbors(self.index(x), mode)}

    def _neighbors(self, u: int, mode: str = "all") -> np.ndarray:
        if mode == "out":
            return self.out_idx[self.out_ptr[u]:self.out_ptr[u + 1]]
        if mode == "in":
            return self.in_idx[self.in_ptr[u]:self.in_ptr[u + 1]]
        if mode == "all":
            return np.union1d(self._neighbors(u, "out"), self._neighbors(u, "in"))
        raise ValueError(f"mode must be 'in', 'out' or 'all', got {mode!r}")

    def mutual_weight(self, x: str, y: str) -> float:
        """max(beta(x, y), beta(y, x)), absent edges counting as 0."""
        u, v = self.index(x), self.index(y)
        if u == v:
            raise ValueError("mutual_weight needs two distinct nodes")
        return max(self._weight(u, v), self._weight(v, u))

    def require_lt_valid(self) -> None:
        if not self._lt_valid:
            i = int(np.argmax(self._in_sum))
            raise GraphModelError(
                f"node {self._labels[i]!r} has incoming weight sum {self._in_sum[i]:.6g} > 1 "
                "(linear threshold needs <= 1)"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return set(self._labels) == set(other._labels) and sorted(self.edges()) == sorted(other.edges())

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def _parse_lines(lines: Iterable[str], undirected: bool):
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphParseError(f"line {lineno}: expected 'src<TAB>dst<TAB>weight', got {raw.rstrip()!r}")
        a, b, w = (p.strip() for p in parts)
        if not a or not b:
            raise GraphParseError(f"line {lineno}: empty node id")
        try:
            weight = float(w)
        except ValueError:
            raise GraphParseError(f"line {lineno}: weight {w!r} is not a number") from None
        if not 0.0 <= weight <= 1.0:
            raise GraphRangeError(f"line {lineno}: weight {weight!r} outside [0, 1]")
        if a == b:
            raise GraphStructureError(f"line {lineno}: self-loop on node {a!r}")
        yield lineno, a, b, weight
        if undirected:
            yield lineno, b, a, weight


def load_edge_list(source, expect_lt_valid: bool = False, undirected: bool = False) -> Graph:
    """Read a tab-separated ``src dst weight`` edge list.

    ``source`` may be a path, a text/binary stream or a ``str`` holding the
    file content (anything containing a newline or tab is treated as content).
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    if isinstance(source, str) and ("\n" in source or "\t" in source):
        source = io.StringIO(source)
    if isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return _load(fh, expect_lt_valid, undirected)
    if isinstance(source, io.RawIOBase | io.BufferedIOBase):
        source = io.TextIOWrapper(source, encoding="utf-8")
    return _load(source, expect_lt_valid, undirected)


def _load(fh: TextIO, expect_lt_valid: bool, undirected: bool) -> Graph:
    seen: dict[tuple[str, str], int] = {}
    triples = []
    for lineno, a, b, w in _parse_lines(fh, undirected):
        key = (a, b)
        if key in seen:
            raise GraphStructureError(f"line {lineno}: duplicate edge {a!r}->{b!r} (first on line {seen[key]})")
        seen[key] = lineno
        triples.append((a, b, w))
    g = Graph.from_edges(triples)
    if expect_lt_valid:
        g.require_lt_valid()
    return g


def dump_edge_list(g: Graph, fh: TextIO | None = None) -> str:
    """Serialize ``g`` to the edge-list format; returns the text.

    Lines are sorted by ``(src, dst)`` label so the text depends only on the
    labeled edge set and ``dump(load(dump(g))) == dump(g)``.
    """
    text = "".join(f"{a}\t{b}\t{w!r}\n" for a, b, w in sorted(g.edges()))
    if fh is not None:
        fh.write(text)
    return text


def erdos_renyi(n: int, p: float, seed: int, weight_range: tuple[float, float] = (0.0, 1.0),
                directed: bool = True) -> Graph:
    """Seeded G(n, p) with uniform edge weights; node labels are ``"0"..str(n-1)``.

    Undirected graphs get both directions with the same weight.
    """
    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    if directed:
        mask = rng.random((n, n)) < p
        np.fill_diagonal(mask, False)
        src, dst = np.nonzero(mask)
        w = rng.uniform(lo, hi, size=len(src))
    else:
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(len(iu)) < p
        iu, ju = iu[keep], ju[keep]
        wu = rng.uniform(lo, hi, size=len(iu))
        src = np.concatenate([iu, ju])
        dst = np.concatenate([ju, iu])
        w = np.concatenate([wu, wu])
    return Graph([str(i) for i in range(n)], src, dst, w)
