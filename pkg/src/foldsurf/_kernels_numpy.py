"""Pure numpy reference implementations of the hot kernels.

These are the fallback path selected by FOLDSURF_BACKEND=numpy.  Each
function here has an njit twin in _kernels_numba with identical
semantics; tests assert the two backends agree bit for bit.  All
randomness stays outside the kernels so both paths consume the same
draws.
"""

import numpy as np

BACKEND = "numpy"


def free_reduce(letters):
    """Cancel adjacent inverse pairs until none remain.

    letters: int8 array, letter x paired with x ^ 1.  Returns a new
    int8 array.  Stack algorithm, O(n).
    """
    out = np.empty(letters.size, np.int8)
    k = 0
    for x in letters:
        if k > 0 and out[k - 1] == x ^ 1:
            k -= 1
        else:
            out[k] = x
            k += 1
    return out[:k].copy()


def cyclic_subword_codes(letters, T, base):
    """Encode the length-T cyclic window at every start position.

    Window at i reads letters[i], letters[i+1 mod m], ...; the code is
    sum letters[i+j] * base**j, fitting int64 (caller guards overflow).
    """
    m = letters.size
    idx = (np.arange(m)[:, None] + np.arange(T)[None, :]) % m
    powers = base ** np.arange(T, dtype=np.int64)
    return letters[idx].astype(np.int64) @ powers


def fill_reduced_word(first, raws):
    """Turn uniform draws into a uniformly random reduced word.

    first: initial letter (already uniform on [0, 2l)).  raws: int64
    draws uniform on [0, 2l-1); draw r after previous letter p maps to
    r if r < p ^ 1 else r + 1, i.e. uniform over letters other than
    the inverse of p.
    """
    n = raws.size + 1
    out = np.empty(n, np.int8)
    out[0] = first
    for i in range(1, n):
        f = int(out[i - 1]) ^ 1
        r = raws[i - 1]
        out[i] = r if r < f else r + 1
    return out


def loop_transition(step, letters):
    """Read a word from every vertex of a folded graph at once.

    step: int32 array of shape (V+1, 2l); row v gives the endpoint of
    the unique edge reading each letter out of v, or V when there is
    none.  Row V is the absorbing dead state.  Returns the int32 array
    of endpoints (V means the path died).
    """
    V = step.shape[0] - 1
    cur = np.arange(V, dtype=np.int32)
    for c in letters:
        cur = step[cur, c]
    return cur


def dfs_pairing(letters, succ, pred, partner0, cand_off, cand, order,
                budget, want_neg_chi):
    """Depth-first search for a folded boundary pairing.

    Pairs every position in `order` with a candidate from its CSR list
    (cand_off, cand; caller pre-shuffles for restart diversity),
    keeping the corner quotient folded throughout: a union-find over
    corners carries the letter multiset of each forming vertex as a
    bitmask, and any pair whose vertices would repeat a letter is
    pruned.  Candidates extending an existing band (the pair parallel
    to the previous position's) are tried first.  want_neg_chi skips
    complete pairings whose quotient has as many vertices as edges.

    Returns (status, partner, nodes): status 1 = found (partner is the
    full involution), 0 = search space exhausted, -1 = node budget hit.
    """
    n = letters.size
    partner = partner0.copy()

    par = np.arange(n, dtype=np.int32)
    msk = np.int64(1) << letters.astype(np.int64)

    tr_a = np.empty(4 * n + 16, dtype=np.int32)
    tr_b = np.empty(4 * n + 16, dtype=np.int32)
    tr_m = np.empty(4 * n + 16, dtype=np.int64)

    def find(x):
        while par[x] != x:
            x = par[x]
        return x

    def union(a, b, tr_len):
        ra = find(a)
        rb = find(b)
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
            if find(v) == v:
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
