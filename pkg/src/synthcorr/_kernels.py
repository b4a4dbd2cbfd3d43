"""Hot loops with a numba implementation and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``SYNTHCORR_BACKEND=numpy``
to force the numpy path; otherwise numba is used when it can be imported.
Both paths compute the same quantities and are compared in the test suite.

Kernels
-------
propagate(rho0, maps, weights, slot_ptr, W, obs)
    Branch-wise propagation of a joint sensor+bath density matrix through a
    sequence of slots.  Slot k holds terms ``slot_ptr[k]:slot_ptr[k+1]``;
    each term is a sensor map in row-major vec form (4x4) with a weight.
    After the sensor map the joint state is conjugated by W[g, k].  Every
    combination of one term per slot is propagated as its own branch and
    the weighted branch signals Tr(obs rho) are summed.  ``g`` runs over a
    batch of grid points.
expand_rows(coeffs, factors)
    sum_i coeffs[i] * kron(factors[0][i], ..., factors[-1][i]) without
    materializing the rows.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("SYNTHCORR_BACKEND", "numba").strip().lower()

try:  # pragma: no cover - depends on the environment
    if _REQUESTED == "numpy":
        raise ImportError("numpy backend requested")
    import numba
    from numba import njit, prange

    # The OpenMP layer is safe to call from several Python threads at once.
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "omp"
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path

def _apply_sensor_map_np(states, smap):
    """states: (..., 2*Db, 2*Db); smap: (4, 4) acting on row-major sensor vec."""
    sh = states.shape
    d = sh[-1]
    db = d // 2
    s = states.reshape(sh[:-2] + (2, db, 2, db))
    m = smap.reshape(2, 2, 2, 2)  # [i, j, k, l]: out (i, j) from in (k, l)
    out = np.einsum("ijkl,...kalb->...iajb", m, s)
    return out.reshape(sh)


def propagate_numpy(rho0, maps, weights, slot_ptr, W, obs):
    G = W.shape[0]
    n_slots = len(slot_ptr) - 1
    d = rho0.shape[0]
    states = np.broadcast_to(rho0, (G, 1, d, d)).copy()
    bw = np.ones(1)
    for k in range(n_slots):
        t0, t1 = slot_ptr[k], slot_ptr[k + 1]
        nt = t1 - t0
        branched = np.empty((G, states.shape[1] * nt, d, d), dtype=complex)
        for j in range(nt):
            branched[:, j::nt] = _apply_sensor_map_np(states, maps[t0 + j])
        Wk = W[:, k][:, None]
        states = Wk @ branched @ np.conj(np.swapaxes(Wk, -1, -2))
        bw = (bw[:, None] * weights[t0:t1][None, :]).ravel()
    sig = np.einsum("ij,gbji->gb", obs, states).real
    return sig @ bw


def expand_rows_numpy(coeffs, factors, chunk: int = 64):
    R = len(coeffs)
    sizes = [f.shape[1] for f in factors]
    total = int(np.prod(sizes))
    out = np.zeros(total)
    for start in range(0, R, chunk):
        sl = slice(start, min(R, start + chunk))
        t = coeffs[sl, None] * factors[0][sl]
        for f in factors[1:]:
            t = (t[:, :, None] * f[sl][:, None, :]).reshape(t.shape[0], -1)
        out += t.sum(axis=0)
    return out


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _sensor_map_nb(src, smap, dst):
        d = src.shape[0]
        db = d // 2
        for i in range(2):
            for j in range(2):
                for a in range(db):
                    for b in range(db):
                        acc = 0j
                        for k in range(2):
                            for l in range(2):
                                c = smap[i * 2 + j, k * 2 + l]
                                if c != 0:
                                    acc += c * src[k * db + a, l * db + b]
                        dst[i * db + a, j * db + b] = acc

    @njit(cache=True)
    def _propagate_point_nb(rho0, maps, weights, slot_ptr, Wg, Wgd, obs, max_states):
        d = rho0.shape[0]
        n_slots = slot_ptr.shape[0] - 1
        cur = np.empty((max_states, d, d), dtype=np.complex128)
        nxt = np.empty((max_states, d, d), dtype=np.complex128)
        cw = np.empty(max_states)
        nw = np.empty(max_states)
        tmp = np.empty((d, d), dtype=np.complex128)
        cur[0] = rho0
        cw[0] = 1.0
        n_cur = 1
        for k in range(n_slots):
            t0 = slot_ptr[k]
            t1 = slot_ptr[k + 1]
            n_nxt = 0
            for s in range(n_cur):
                for t in range(t0, t1):
                    _sensor_map_nb(cur[s], maps[t], tmp)
                    nxt[n_nxt] = np.dot(np.dot(Wg[k], tmp), Wgd[k])
                    nw[n_nxt] = cw[s] * weights[t]
                    n_nxt += 1
            cur, nxt = nxt, cur
            cw, nw = nw, cw
            n_cur = n_nxt
        total = 0.0
        for s in range(n_cur):
            acc = 0j
            for i in range(d):
                for j in range(d):
                    acc += obs[i, j] * cur[s, j, i]
            total += cw[s] * acc.real
        return total

    @njit(cache=True, parallel=True)
    def _propagate_nb(rho0, maps, weights, slot_ptr, W, Wd, obs, max_states):
        G = W.shape[0]
        out = np.empty(G)
        for g in prange(G):
            out[g] = _propagate_point_nb(rho0, maps, weights, slot_ptr, W[g], Wd[g], obs, max_states)
        return out

    @njit(cache=True, parallel=True)
    def _expand_rows_nb(coeffs, stacked, sizes, strides):
        # stacked: (K, R, max_size); flat index decomposed by mixed radix
        K = sizes.shape[0]
        R = coeffs.shape[0]
        total = 1
        for k in range(K):
            total *= sizes[k]
        out = np.zeros(total)
        for flat in prange(total):
            acc = 0.0
            for i in range(R):
                v = coeffs[i]
                rem = flat
                for k in range(K):
                    idx = (rem // strides[k]) % sizes[k]
                    v *= stacked[k, i, idx]
                    if v == 0.0:
                        break
                acc += v
            out[flat] = acc
        return out


def propagate_numba(rho0, maps, weights, slot_ptr, W, obs):
    counts = np.diff(slot_ptr)
    max_states = int(np.prod(counts))
    W = np.ascontiguousarray(W, dtype=np.complex128)
    Wd = np.ascontiguousarray(np.conj(np.swapaxes(W, -1, -2)))
    return _propagate_nb(
        np.ascontiguousarray(rho0, dtype=np.complex128),
        np.ascontiguousarray(maps, dtype=np.complex128),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(slot_ptr, dtype=np.int64),
        W,
        Wd,
        np.ascontiguousarray(obs, dtype=np.complex128),
        max_states,
    )


def expand_rows_numba(coeffs, factors):
    sizes = np.array([f.shape[1] for f in factors], dtype=np.int64)
    strides = np.ones(len(sizes), dtype=np.int64)
    for k in range(len(sizes) - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]
    stacked = np.zeros((len(factors), len(coeffs), sizes.max()))
    for k, f in enumerate(factors):
        stacked[k, :, : f.shape[1]] = f
    return _expand_rows_nb(np.ascontiguousarray(coeffs, dtype=np.float64), stacked, sizes, strides)


def propagate(rho0, maps, weights, slot_ptr, W, obs, backend: str | None = None):
    """Dispatch to the selected backend (see module docstring)."""
    b = backend or BACKEND
    if b == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend is not available")
        return propagate_numba(rho0, maps, weights, slot_ptr, W, obs)
    return propagate_numpy(rho0, maps, weights, slot_ptr, W, obs)


def expand_rows(coeffs, factors, backend: str | None = None):
    b = backend or BACKEND
    if b == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend is not available")
        return expand_rows_numba(coeffs, factors)
    return expand_rows_numpy(coeffs, factors)
