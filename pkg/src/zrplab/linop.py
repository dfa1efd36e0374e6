"""Sparse linear maps keyed by state tuples.

Operators act on spaces whose basis vectors are labelled by hashable state
tuples (multi-indices, or tuples of multi-indices for chains).  Storage is
column major: for each in-state we keep the nonzero amplitudes of its image.
Weight conservation is a property of the builders, not enforced here.
"""

from __future__ import annotations

from gmpy2 import mpq


class SparseOperator:
    """Sparse matrix with exact entries, indexed by (out_state, in_state)."""

    __slots__ = ("cols",)

    def __init__(self):
        self.cols = {}  # in_state -> {out_state: value}

    @classmethod
    def from_entries(cls, entries):
        op = cls()
        for (out, inp), v in entries.items():
            op.add(out, inp, v)
        return op

    @classmethod
    def identity(cls, basis):
        op = cls()
        for s in basis:
            op.add(s, s, 1)
        return op

    def add(self, out, inp, v):
        if not v:
            return
        col = self.cols.setdefault(inp, {})
        w = col.get(out, 0) + v
        if w:
            col[out] = w
        else:
            del col[out]
            if not col:
                del self.cols[inp]

    def entry(self, out, inp):
        return self.cols.get(inp, {}).get(out, mpq(0))

    def in_states(self):
        return self.cols.keys()

    def items(self):
        for inp, col in self.cols.items():
            for out, v in col.items():
                yield out, inp, v

    def column(self, inp):
        return self.cols.get(inp, {})

    def column_sum(self, inp):
        return sum(self.cols.get(inp, {}).values(), mpq(0))

    def apply(self, vec: dict) -> dict:
        out = {}
        for inp, coef in vec.items():
            if not coef:
                continue
            for s, v in self.cols.get(inp, {}).items():
                w = out.get(s, 0) + coef * v
                if w:
                    out[s] = w
                else:
                    del out[s]
        return out

    def compose(self, other: "SparseOperator") -> "SparseOperator":
        """Matrix product self @ other."""
        res = SparseOperator()
        for inp, col in other.cols.items():
            img = self.apply(col)
            for out, v in img.items():
                res.add(out, inp, v)
        return res

    def __matmul__(self, other):
        return self.compose(other)

    def scaled(self, c) -> "SparseOperator":
        res = SparseOperator()
        for out, inp, v in self.items():
            res.add(out, inp, c * v)
        return res

    def __add__(self, other):
        res = SparseOperator()
        for out, inp, v in self.items():
            res.add(out, inp, v)
        for out, inp, v in other.items():
            res.add(out, inp, v)
        return res

    def __sub__(self, other):
        return self + other.scaled(-1)

    def __eq__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self.cols == other.cols

    def is_zero(self):
        return not self.cols

    def commutator(self, other):
        return self.compose(other) - other.compose(self)

    def nnz(self):
        return sum(len(c) for c in self.cols.values())

    def __repr__(self):
        return f"SparseOperator(nnz={self.nnz()}, ncols={len(self.cols)})"


def apply_embedded(op: SparseOperator, pos: tuple, vec: dict) -> dict:
    """Apply a k-site operator at chain positions pos to a dict-state."""
    out = {}
    for state, coef in vec.items():
        key = tuple(state[p] for p in pos)
        for loc_out, v in op.cols.get(key, {}).items():
            ns = list(state)
            for p, s in zip(pos, loc_out):
                ns[p] = s
            t = tuple(ns)
            w = out.get(t, 0) + coef * v
            if w:
                out[t] = w
            else:
                del out[t]
    return out
