"""Numba njit implementations of the hot kernels.

Twins of _kernels_numpy with identical input/output contracts.  Kept
free of Python objects so everything compiles in nopython mode; first
call per process pays the compile, cache=True amortizes across runs.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def free_reduce(letters):
    out = np.empty(letters.size, np.int8)
    k = 0
    for i in range(letters.size):
        x = letters[i]
        if k > 0 and out[k - 1] == x ^ 1:
            k -= 1
        else:
            out[k] = x
            k += 1
    return out[:k].copy()


@njit(cache=True)
def cyclic_subword_codes(letters, T, base):
    m = letters.size
    out = np.empty(m, np.int64)
    for i in range(m):
        c = np.int64(0)
        p = np.int64(1)
        for j in range(T):
            c += letters[(i + j) % m] * p
            p *= base
        out[i] = c
    return out


@njit(cache=True)
def fill_reduced_word(first, raws):
    n = raws.size + 1
    out = np.empty(n, np.int8)
    out[0] = first
    for i in range(1, n):
        f = out[i - 1] ^ 1
        r = raws[i - 1]
        if r < f:
            out[i] = r
        else:
            out[i] = r + 1
    return out


@njit(cache=True)
def loop_transition(step, letters):
    V = step.shape[0] - 1
    out = np.empty(V, np.int32)
    for v in range(V):
        cur = v
        for t in range(letters.size):
            cur = step[cur, letters[t]]
            if cur == V:
                break
        out[v] = cur
    return out


@njit(cache=True)
def _find(par, x):
    while par[x] != x:
        x = par[x]
    return x


@njit(cache=True)
def dfs_pairing(letters, succ, pred, partner0, cand_off, cand, order,
                budget, want_neg_chi):
    n = letters.size
    partner = partner0.copy()

    par = np.arange(n, dtype=np.int32)
    msk = np.empty(n, dtype=np.int64)
    for t in range(n):
        msk[t] = np.int64(1) << np.int64(letters[t])

    tr_a = np.empty(4 * n + 16, dtype=np.int32)
    tr_b = np.empty(4 * n + 16, dtype=np.int32)
    tr_m = np.empty(4 * n + 16, dtype=np.int64)

    def union(a, b, tr_len):
        ra = _find(par, a)
        rb = _find(par, b)
        if ra == rb:
            return 1, tr_len
        if msk[ra] & msk[rb]:
            return 0, tr_len
        par[ra] = rb
        tr_a[tr_len] = ra
        tr_b[tr_len] = rb
        tr_m[tr_len] = msk[rb]
        msk[rb] |= msk[ra]
        return 1, tr_len + 1

    def rollback(tl, target):
        while tl > target:
            tl -= 1
            ra = tr_a[tl]
            rb = tr_b[tl]
            msk[rb] = tr_m[tl]
            par[ra] = ra
        return tl

    tr_len = 0
    for t in range(n):
        if partner[t] >= 0:
            ok, tr_len = union(t, succ[partner[t]], tr_len)
            if ok == 0:
                return 0, partner, 0

    def leaf_ok():
        roots = 0
        for v in range(n):
            if _find(par, v) == v:
                roots += 1
        return (not want_neg_chi) or roots < n // 2

    no = order.size
    st_t = np.empty(no + 1, dtype=np.int32)
    st_ci = np.empty(no + 1, dtype=np.int32)
    st_ph = np.empty(no + 1, dtype=np.int32)
    st_mk = np.empty(no + 1, dtype=np.int32)
    st_u = np.empty(no + 1, dtype=np.int32)
    st_sc = np.empty(no + 1, dtype=np.int32)
    nodes = 0

    k0 = 0
    while k0 < no and partner[order[k0]] >= 0:
        k0 += 1
    if k0 >= no:
        if leaf_ok():
            return 1, partner, 0
        return 0, partner, 0

    depth = 0
    st_t[0] = order[k0]
    st_ci[0] = cand_off[order[k0]]
    st_ph[0] = 0
    st_mk[0] = tr_len
    st_u[0] = -1
    st_sc[0] = k0

    while depth >= 0:
        t = st_t[depth]
        u_prev = st_u[depth]
        if u_prev >= 0:
            partner[t] = -1
            partner[u_prev] = -1
            tr_len = rollback(tr_len, st_mk[depth])
            st_u[depth] = -1

        adv = -1
        ci = st_ci[depth]
        ph = st_ph[depth]
        while True:
            if ci >= cand_off[t + 1]:
                if ph == 0:
                    ph = 1
                    ci = cand_off[t]
                    continue
                break
            u = cand[ci]
            ci += 1
            if partner[u] >= 0:
                continue
            pt = pred[t]
            ext = partner[pt] >= 0 and partner[pt] == succ[u]
            if (ph == 0) != ext:
                continue
            ok1, tl = union(t, succ[u], tr_len)
            if ok1 == 1:
                ok2, tl = union(u, succ[t], tl)
                if ok2 == 1:
                    adv = u
                    tr_len = tl
                    break
            rollback(tl, tr_len)
        st_ci[depth] = ci
        st_ph[depth] = ph

        if adv < 0:
            depth -= 1
            nodes += 1
            if nodes > budget:
                return -1, partner, nodes
            continue

        u = adv
        partner[t] = u
        partner[u] = t
        st_u[depth] = u
        nodes += 1
        if nodes > budget:
            return -1, partner, nodes

        kn = st_sc[depth] + 1
        while kn < no and partner[order[kn]] >= 0:
            kn += 1
        if kn >= no:
            if leaf_ok():
                return 1, partner, nodes
            continue
        depth += 1
        tn = order[kn]
        st_t[depth] = tn
        st_ci[depth] = cand_off[tn]
        st_ph[depth] = 0
        st_mk[depth] = tr_len
        st_u[depth] = -1
        st_sc[depth] = kn

    return 0, partner, nodes
