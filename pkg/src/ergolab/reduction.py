"""Deterministic summation over integer boxes.

The summation tree has a fixed shape that depends only on the box, never on
how rows are split between threads, so results are bit-identical for every
thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import CapExceeded, ConfigError

DEFAULT_GRID_CAP = 1 << 30
# elements materialized per task
_TASK_ELEMENTS = 1 << 18


def tree_sum(a: np.ndarray) -> np.ndarray:
    """Pairwise sum along the last axis.

    The row is zero-padded to a power of two and halved by adding
    neighbours, so each output depends only on its own row.
    """
    a = np.asarray(a)
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1], dtype=a.dtype)
    size = 1 << (n - 1).bit_length()
    if size != n:
        pad = np.zeros(a.shape[:-1] + (size - n,), dtype=a.dtype)
        a = np.concatenate([a, pad], axis=-1)
    while a.shape[-1] > 1:
        a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0]


def check_cap(N: int, D: int, cap: int = DEFAULT_GRID_CAP) -> None:
    if N < 1:
        raise ConfigError("N must be >= 1")
    if N**D > cap:
        raise CapExceeded(f"grid of {N}^{D} = {N**D} terms exceeds cap {cap}")


def linear_grid_sum(
    tables: list[np.ndarray],
    forms: np.ndarray,
    N: int,
    lows: list[int] | None = None,
    threads: int = 1,
    cap: int = DEFAULT_GRID_CAP,
) -> complex:
    """Sum over n in [0, N)^D of prod_s tables[s][forms[s] . n - lows[s]].

    ``forms`` has shape (S, D).  Each table must cover the index range its
    form sweeps over the box.  With S = 0 every term is 1.  The box is cut
    into rows along the last coordinate; factors that do not depend on it
    multiply the row sum instead of every term.
    """
    forms = np.asarray(forms, dtype=np.int64)
    if forms.ndim != 2:
        raise ConfigError("forms must be a 2-D integer array")
    S, D = forms.shape
    if D < 1:
        raise ConfigError("box dimension must be >= 1")
    check_cap(N, D, cap)
    if lows is None:
        lows = [0] * S
    for s in range(S):
        lo = int(np.minimum(forms[s], 0).sum()) * (N - 1)
        hi = int(np.maximum(forms[s], 0).sum()) * (N - 1)
        if lo < lows[s] or hi - lows[s] >= len(tables[s]):
            raise ConfigError(f"table {s} does not cover indices [{lo}, {hi}]")

    if D == 1:
        # one row; reuse the slab path with a single outer index
        forms = np.concatenate([np.zeros((S, 1), dtype=np.int64), forms], axis=1)
        D = 2
        n_rows, rows_per_slab = 1, 1
    else:
        n_rows, rows_per_slab = N ** (D - 1), N
    n_slabs = n_rows // rows_per_slab
    row_sums = np.empty(n_rows, dtype=np.complex128)
    t = np.arange(N, dtype=np.int64)
    block = max(1, _TASK_ELEMENTS // N)
    slab_shape = (N,) * (D - 2)
    itemsize = [tb.itemsize for tb in tables]
    strides = [tb.strides[0] for tb in tables]

    def work(task: tuple[int, int]) -> None:
        slab, r0 = task
        r = np.arange(r0, min(r0 + block, rows_per_slab), dtype=np.int64)
        outer = np.array(np.unravel_index(slab, slab_shape), dtype=np.int64) if D > 2 else np.zeros(0, np.int64)
        row_const = None
        varying = None
        for s in range(S):
            base = int(forms[s, : D - 2] @ outer) - lows[s]
            a, c = int(forms[s, D - 2]), int(forms[s, D - 1])
            tb = tables[s]
            if c == 0:
                vals = tb[base + a * r]
                row_const = vals if row_const is None else row_const * vals
                continue
            if a >= 0 and c > 0 and strides[s] == itemsize[s]:
                start = base + a * int(r[0])
                vals = np.lib.stride_tricks.as_strided(
                    tb[start:], shape=(len(r), N), strides=(a * itemsize[s], c * itemsize[s]), writeable=False
                )
            else:
                vals = tb[(base + a * r)[:, None] + c * t[None, :]]
            varying = vals if varying is None else varying * vals
        if varying is None:
            sums = np.full(len(r), float(N), dtype=np.complex128)
        else:
            sums = tree_sum(np.ascontiguousarray(varying))
        if row_const is not None:
            sums = row_const * sums
        row_sums[slab * rows_per_slab + r] = sums

    tasks = [(slab, r0) for slab in range(n_slabs) for r0 in range(0, rows_per_slab, block)]
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, tasks))
    else:
        for task in tasks:
            work(task)
    return complex(tree_sum(row_sums))
