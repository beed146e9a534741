"""Assembly kernels: numba-compiled loops with a pure-numpy fallback.

The active path is chosen at import time from the ``BURGERS_GFEM_KERNELS``
environment variable: "numba", "numpy", or "auto" (default; numba when
importable).  Both paths are deterministic: identical inputs produce
bit-identical outputs within a path.  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

ENV_VAR = "BURGERS_GFEM_KERNELS"


def _requested() -> str:
    value = os.environ.get(ENV_VAR, "auto").strip().lower()
    if value not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR} must be 'auto', 'numba', or 'numpy', got {value!r}"
        )
    return value


# ---------------------------------------------------------------------------
# numpy path


def sym_product_matrix_numpy(vals, wdet, gdof, n_dofs):
    """Sum over elements of w * (v_a * v_b), scattered into a dense matrix.

    The product is grouped as w * (v_a * v_b) so the result is bitwise
    symmetric.  Padding slots (gdof = -1) land in a scratch row/column that is
    dropped.
    """
    prod = vals[:, :, None, :] * vals[:, None, :, :]
    elem = (prod * wdet[:, None, None, :]).sum(axis=3)
    buf = np.zeros((n_dofs + 1, n_dofs + 1))
    np.add.at(buf, (gdof[:, :, None], gdof[:, None, :]), elem)
    return buf[:n_dofs, :n_dofs].copy()


def advection_pair_numpy(vals, ders, wdet, gdof, c):
    """Dense advection matrix and its state-derivative companion.

    Entry (i, j) of the first is the integral of v_i * u * v_j' and of the
    second v_i * v_j * u', where u is the field with coefficients ``c``.
    """
    n = c.shape[0]
    cpad = np.append(np.asarray(c, dtype=float), 0.0)
    ce = cpad[gdof]
    u = np.einsum("eaq,ea->eq", vals, ce)
    du = np.einsum("eaq,ea->eq", ders, ce)
    elem_a = (vals[:, :, None, :] * (wdet * u)[:, None, None, :] * ders[:, None, :, :]).sum(axis=3)
    elem_t = (vals[:, :, None, :] * (wdet * du)[:, None, None, :] * vals[:, None, :, :]).sum(axis=3)
    buf_a = np.zeros((n + 1, n + 1))
    buf_t = np.zeros((n + 1, n + 1))
    idx = (gdof[:, :, None], gdof[:, None, :])
    np.add.at(buf_a, idx, elem_a)
    np.add.at(buf_t, idx, elem_t)
    return buf_a[:n, :n].copy(), buf_t[:n, :n].copy()


def load_vector_numpy(vals, wdet, fq, n_dofs):
    """RHS vector with entries ∫ v_i f, given f sampled at the quadrature points."""
    elem = np.einsum("eaq,eq->ea", vals, wdet * fq)
    return elem  # scatter done by caller with gdof


# ---------------------------------------------------------------------------
# numba path

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _sym_product_kernel(vals, wdet, gdof, out):
        ne, nd, nq = vals.shape
        for e in range(ne):
            for a in range(nd):
                ga = gdof[e, a]
                if ga < 0:
                    continue
                for b in range(nd):
                    gb = gdof[e, b]
                    if gb < 0:
                        continue
                    acc = 0.0
                    for q in range(nq):
                        acc += wdet[e, q] * (vals[e, a, q] * vals[e, b, q])
                    out[ga, gb] += acc

    @numba.njit(cache=True)
    def _advection_pair_kernel(vals, ders, wdet, gdof, c, out_a, out_t):
        ne, nd, nq = vals.shape
        uq = np.empty(nq)
        duq = np.empty(nq)
        for e in range(ne):
            for q in range(nq):
                u = 0.0
                du = 0.0
                for a in range(nd):
                    g = gdof[e, a]
                    if g < 0:
                        continue
                    u += vals[e, a, q] * c[g]
                    du += ders[e, a, q] * c[g]
                uq[q] = u
                duq[q] = du
            for a in range(nd):
                ga = gdof[e, a]
                if ga < 0:
                    continue
                for b in range(nd):
                    gb = gdof[e, b]
                    if gb < 0:
                        continue
                    acc_a = 0.0
                    acc_t = 0.0
                    for q in range(nq):
                        w = wdet[e, q]
                        acc_a += w * vals[e, a, q] * uq[q] * ders[e, b, q]
                        acc_t += w * vals[e, a, q] * vals[e, b, q] * duq[q]
                    out_a[ga, gb] += acc_a
                    out_t[ga, gb] += acc_t

    def sym_product_matrix_numba(vals, wdet, gdof, n_dofs):
        out = np.zeros((n_dofs, n_dofs))
        _sym_product_kernel(vals, wdet, gdof, out)
        return out

    def advection_pair_numba(vals, ders, wdet, gdof, c):
        n = c.shape[0]
        out_a = np.zeros((n, n))
        out_t = np.zeros((n, n))
        _advection_pair_kernel(
            vals, ders, wdet, gdof, np.ascontiguousarray(c, dtype=float), out_a, out_t
        )
        return out_a, out_t


def _select():
    req = _requested()
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not HAVE_NUMBA:
            raise ImportError(
                f"{ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


_BACKEND = _select()

if _BACKEND == "numba":
    sym_product_matrix = sym_product_matrix_numba
    advection_pair = advection_pair_numba
else:
    sym_product_matrix = sym_product_matrix_numpy
    advection_pair = advection_pair_numpy


def backend() -> str:
    """Name of the active kernel path ("numba" or "numpy")."""
    return _BACKEND
