"""Deterministic artifact writers: JSON sparse matrices with exact rational
entries, CSV histograms, and matplotlib figures rendered next to the
delimited output."""

from __future__ import annotations

import csv
import json
import os
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from gmpy2 import mpq  # noqa: E402

from .linop import SparseOperator  # noqa: E402
from .qkit import rat  # noqa: E402


def rational_str(x) -> str:
    return str(mpq(x))


def state_label(state) -> str:
    """Multiset notation for a chain state: |∅,12⟩ for ((0,0),(1,1))."""
    sites = []
    for site in state:
        s = "".join(str(a + 1) * c for a, c in enumerate(site))
        sites.append(s or "∅")
    return "|" + ",".join(sites) + "⟩"


def _atomic_write(path, data: bytes):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    data = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
    _atomic_write(path, data.encode("utf-8"))


def op_to_json(op: SparseOperator, meta=None) -> dict:
    entries = [[repr(out), repr(inp), rational_str(v)]
               for out, inp, v in op.items()]
    entries.sort()
    return {"format": "sparse-triplets", "entries": entries,
            "meta": meta or {}}


def json_to_op(obj) -> SparseOperator:
    if obj.get("format") != "sparse-triplets":
        raise ValueError("not a sparse-triplet matrix file")
    op = SparseOperator()
    for out, inp, v in obj["entries"]:
        op.add(eval(out), eval(inp), rat(v))  # noqa: S307 - trusted artifact
    return op


def write_matrix(path, op: SparseOperator, meta=None):
    write_json(path, op_to_json(op, meta))


def read_matrix(path) -> SparseOperator:
    with open(path, encoding="utf-8") as f:
        return json_to_op(json.load(f))


def write_histogram_csv(path, rows, header=("state", "label", "empirical",
                                            "exact")):
    buf = []
    out = csv.writer(_ListIO(buf), lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow(row)
    _atomic_write(path, "".join(buf).encode("utf-8"))


class _ListIO:
    def __init__(self, buf):
        self.buf = buf

    def write(self, s):
        self.buf.append(s)


def write_histogram_figure(path, labels, empirical, exact=None):
    """Bar chart of an empirical distribution, optionally overlaid with the
    exact one, rendered to file."""
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(labels)), 4))
    xs = range(len(labels))
    ax.bar(xs, empirical, width=0.6, label="empirical", color="#4878d0")
    if exact is not None:
        ax.plot(xs, exact, "o", color="#d65f5f", label="exact")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_convergence_figure(path, cutoffs, gaps):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(cutoffs, gaps, "o-")
    ax.set_xlabel("cutoff N")
    ax.set_ylabel("relative gap to doubled cutoff")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
