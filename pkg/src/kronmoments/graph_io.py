"""Edge-list ingestion into a canonical undirected simple graph."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class GraphParseError(ValueError):
    """Raised for a malformed edge-list line; carries the 1-based line number."""

    def __init__(self, path, line_number: int, message: str):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")


class SimpleGraph:
    """Loop-free, duplicate-free undirected graph with dense vertex ids.

    Vertex ids are 0..num_vertices-1; ``labels`` maps them back to the
    labels seen in the source file (identity when built programmatically).
    ``edge_array`` holds each edge once as (u, v) with u < v, sorted
    lexicographically.  Degree and sorted adjacency are precomputed.
    Instances are treated as immutable after construction.
    """

    def __init__(
        self,
        num_vertices: int,
        edge_array: np.ndarray,
        labels: np.ndarray | None = None,
        loops_dropped: int = 0,
        duplicates_dropped: int = 0,
    ):
        self.num_vertices = int(num_vertices)
        edge_array = np.asarray(edge_array, dtype=np.int64).reshape(-1, 2)
        if edge_array.size:
            lo = edge_array.min(axis=1)
            hi = edge_array.max(axis=1)
            if (lo == hi).any():
                raise ValueError("edge_array contains a self-loop")
            if hi.max() >= self.num_vertices or lo.min() < 0:
                raise ValueError("edge endpoint outside 0..num_vertices-1")
            edge_array = np.stack([lo, hi], axis=1)
            order = np.lexsort((edge_array[:, 1], edge_array[:, 0]))
            edge_array = edge_array[order]
        self.edge_array = edge_array
        self.labels = labels
        self.loops_dropped = int(loops_dropped)
        self.duplicates_dropped = int(duplicates_dropped)

        self.degrees = np.zeros(self.num_vertices, dtype=np.int64)
        if edge_array.size:
            self.degrees += np.bincount(edge_array[:, 0], minlength=self.num_vertices)
            self.degrees += np.bincount(edge_array[:, 1], minlength=self.num_vertices)

        # CSR adjacency, neighbor lists sorted ascending
        if edge_array.size:
            both = np.concatenate([edge_array, edge_array[:, ::-1]])
            order = np.lexsort((both[:, 1], both[:, 0]))
            both = both[order]
            self._indices = np.ascontiguousarray(both[:, 1])
            counts = np.bincount(both[:, 0], minlength=self.num_vertices)
        else:
            self._indices = np.zeros(0, dtype=np.int64)
            counts = np.zeros(self.num_vertices, dtype=np.int64)
        self._indptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=self._indptr[1:])

    @property
    def num_edges(self) -> int:
        return self.edge_array.shape[0]

    @property
    def num_isolated(self) -> int:
        return int((self.degrees == 0).sum())

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor ids of vertex v (a read-only view)."""
        return self._indices[self._indptr[v] : self._indptr[v + 1]]

    def edge_set(self) -> set:
        return {(int(u), int(v)) for u, v in self.edge_array}

    @classmethod
    def from_pairs(cls, pairs, num_vertices: int | None = None,
                   labels: np.ndarray | None = None) -> "SimpleGraph":
        """Build from raw (u, v) pairs, dropping loops and duplicates."""
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if num_vertices is None:
            num_vertices = int(arr.max()) + 1 if arr.size else 0
        if arr.size == 0:
            return cls(num_vertices, arr, labels=labels)
        loop_mask = arr[:, 0] == arr[:, 1]
        loops = int(loop_mask.sum())
        arr = arr[~loop_mask]
        if arr.size == 0:
            return cls(num_vertices, arr, labels=labels, loops_dropped=loops)
        lo = arr.min(axis=1)
        hi = arr.max(axis=1)
        keys = lo * np.int64(num_vertices) + hi
        unique_keys = np.unique(keys)
        dups = int(keys.size - unique_keys.size)
        dedup = np.stack(
            [unique_keys // num_vertices, unique_keys % num_vertices], axis=1
        )
        return cls(num_vertices, dedup, labels=labels,
                   loops_dropped=loops, duplicates_dropped=dups)

    def __repr__(self):
        return (f"SimpleGraph(num_vertices={self.num_vertices}, "
                f"num_edges={self.num_edges})")


def load_edge_list(path, directed_input: bool = False) -> SimpleGraph:
    """Parse a plain-text edge list into a SimpleGraph.

    Format: one "u v" pair of integer labels per line, any whitespace,
    lines starting with '#' are comments.  Labels are densified in order of
    first appearance, so loading the same file twice gives identical
    graphs.  Self-loops are dropped (their vertices are kept, degree 0) and
    duplicate pairs - including reversed ones - are merged; both drop
    counts are recorded on the result.

    ``directed_input`` documents that the file lists arcs; the direction is
    discarded either way, so it does not change the resulting graph.
    """
    del directed_input  # direction is always dropped
    path = Path(path)
    ids: dict[int, int] = {}
    us: list[int] = []
    vs: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise GraphParseError(
                    path, line_no, f"expected 2 tokens, found {len(tokens)}"
                )
            try:
                a = int(tokens[0])
                b = int(tokens[1])
            except ValueError:
                raise GraphParseError(
                    path, line_no, f"non-integer vertex label in {tokens!r}"
                ) from None
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
            us.append(u)
            vs.append(v)

    labels = np.empty(len(ids), dtype=np.int64)
    for label, dense in ids.items():
        labels[dense] = label
    pairs = np.stack(
        [np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)], axis=1
    ) if us else np.zeros((0, 2), dtype=np.int64)
    return SimpleGraph.from_pairs(pairs, num_vertices=len(ids), labels=labels)


def choose_r(num_vertices: int) -> int:
    """Smallest r with 2**r >= num_vertices (the operative power when
    fitting a real graph whose vertex count is not a power of two)."""
    if num_vertices < 1:
        raise ValueError(f"num_vertices must be >= 1, got {num_vertices}")
    return int(num_vertices - 1).bit_length()
