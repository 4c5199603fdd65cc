"""Backend parity: the numba kernels must agree with the numpy ones.

Every kernel is exercised against a slow pure-Python oracle and, when
numba is importable, the two backends are compared output-for-output
on randomized inputs.
"""

import numpy as np
import pytest

from foldsurf import _kernels_numpy as knp

try:
    from foldsurf import _kernels_numba as knb

    BACKENDS = [knp, knb]
except ImportError:  # pragma: no cover
    knb = None
    BACKENDS = [knp]


def oracle_free_reduce(letters):
    out = []
    for x in letters:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(int(x))
    return out


def oracle_cyclic_codes(letters, T, base):
    m = len(letters)
    codes = []
    for s in range(m):
        v = 0
        for j in reversed(range(T)):
            v = v * base + int(letters[(s + j) % m])
        codes.append(v)
    return codes


def oracle_fill(first, raws):
    out = [int(first)]
    for r in raws:
        forbidden = out[-1] ^ 1
        x = int(r) if r < forbidden else int(r) + 1
        out.append(x)
    return out


def oracle_transition(step, letters, V):
    out = []
    for v in range(V):
        cur = v
        for c in letters:
            cur = step[cur][c]
            if cur == V:
                break
        out.append(cur)
    return out


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def K(request):
    return request.param


def test_free_reduce_examples(K):
    # abB -> a, full cancellation, already reduced
    assert K.free_reduce(np.array([0, 2, 3], np.int8)).tolist() == [0]
    assert K.free_reduce(np.array([0, 2, 3, 1], np.int8)).tolist() == []
    assert K.free_reduce(np.array([0, 2, 0], np.int8)).tolist() == [0, 2, 0]
    assert K.free_reduce(np.empty(0, np.int8)).tolist() == []


def test_free_reduce_nested_cancellation(K):
    # a b B A a -> a: cancellation exposes earlier cancellation
    arr = np.array([0, 2, 3, 1, 0], np.int8)
    assert K.free_reduce(arr).tolist() == [0]


def test_free_reduce_random_against_oracle(K):
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(0, 60))
        arr = rng.integers(0, 6, size=n).astype(np.int8)
        assert K.free_reduce(arr).tolist() == oracle_free_reduce(arr)


def test_cyclic_codes_against_oracle(K):
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = int(rng.integers(1, 40))
        T = int(rng.integers(1, 7))
        arr = rng.integers(0, 4, size=m).astype(np.int8)
        got = K.cyclic_subword_codes(arr, T, 4)
        assert got.tolist() == oracle_cyclic_codes(arr, T, 4)


def test_fill_reduced_word_against_oracle(K):
    rng = np.random.default_rng(13)
    for _ in range(100):
        n = int(rng.integers(1, 50))
        first = np.int8(rng.integers(0, 6))
        raws = rng.integers(0, 5, size=n - 1, dtype=np.int64)
        got = K.fill_reduced_word(first, raws)
        assert got.tolist() == oracle_fill(first, raws)
        assert oracle_free_reduce(got) == got.tolist()


def test_loop_transition_against_oracle(K):
    rng = np.random.default_rng(17)
    for _ in range(60):
        V = int(rng.integers(1, 9))
        L = 4
        step = rng.integers(0, V + 1, size=(V + 1, 2 * L)).astype(np.int32)
        step[V, :] = V
        n = int(rng.integers(1, 12))
        letters = rng.integers(0, 2 * L, size=n).astype(np.int8)
        got = K.loop_transition(step, letters)
        assert got.tolist() == oracle_transition(step.tolist(), letters, V)


@pytest.mark.skipif(knb is None, reason="numba backend unavailable")
def test_backends_agree_everywhere():
    rng = np.random.default_rng(23)
    for _ in range(50):
        arr = rng.integers(0, 8, size=int(rng.integers(0, 80))).astype(np.int8)
        assert knp.free_reduce(arr).tolist() == knb.free_reduce(arr).tolist()
    for _ in range(50):
        m = int(rng.integers(1, 50))
        T = int(rng.integers(1, 6))
        arr = rng.integers(0, 4, size=m).astype(np.int8)
        a = knp.cyclic_subword_codes(arr, T, 4)
        b = knb.cyclic_subword_codes(arr, T, 4)
        assert a.tolist() == b.tolist()


def _random_double_instance(rng, length):
    """Chain positions of {w, w-bar} for a random cyclic word."""
    from foldsurf import cyclic_reduce, sample_reduced_word

    w = cyclic_reduce(sample_reduced_word(2, length, rng))[0]
    lets = np.concatenate([w.letters, w.inverse().letters]).astype(np.int8)
    n = lets.size
    m = n // 2
    succ = np.arange(1, n + 1, dtype=np.int32)
    succ[m - 1] = 0
    succ[n - 1] = m
    pred = np.empty(n, np.int32)
    pred[succ] = np.arange(n, dtype=np.int32)
    free = np.arange(n, dtype=np.int32)
    lists, counts = [], np.zeros(n, np.int64)
    for t in range(n):
        us = free[lets == lets[t] ^ 1]
        us = us[us != t]
        lists.append(us[rng.permutation(us.size)].astype(np.int32))
        counts[t] = us.size
    off = np.zeros(n + 1, np.int32)
    np.cumsum(counts, out=off[1:])
    cand = np.concatenate(lists).astype(np.int32)
    partner0 = np.full(n, -1, np.int32)
    return lets, succ, pred, partner0, off, cand, free


@pytest.mark.skipif(knb is None, reason="numba backend unavailable")
def test_dfs_pairing_backends_agree():
    rng = np.random.default_rng(31)
    for trial in range(12):
        inst = _random_double_instance(rng, int(rng.integers(6, 16)))
        for want_neg in (False, True):
            for budget in (50, 10**6):
                a = knp.dfs_pairing(*inst, budget, want_neg)
                b = knb.dfs_pairing(*inst, budget, want_neg)
                assert a[0] == b[0]
                assert a[1].tolist() == b[1].tolist()
                assert a[2] == b[2]


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def dfs_backend(request):
    return request.param


def test_dfs_pairing_solutions_are_valid(dfs_backend):
    rng = np.random.default_rng(37)
    for trial in range(10):
        lets, succ, pred, p0, off, cand, free = _random_double_instance(
            rng, int(rng.integers(6, 20))
        )
        status, partner, nodes = dfs_backend.dfs_pairing(
            lets, succ, pred, p0, off, cand, free, 10**6, False
        )
        assert status == 1  # the mirror pairing always exists
        n = lets.size
        assert np.all(partner[partner] == np.arange(n))
        assert np.all(lets[partner] == lets ^ 1)
        # folded: no quotient vertex repeats an out-letter
        vertex_of = np.full(n, -1)
        nxt = succ[partner]
        v = 0
        for t in range(n):
            if vertex_of[t] >= 0:
                continue
            u = t
            seen = 0
            while vertex_of[u] < 0:
                vertex_of[u] = v
                bit = 1 << int(lets[u])
                assert not seen & bit
                seen |= bit
                u = int(nxt[u])
            v += 1


def test_dfs_pairing_respects_preseeded_tags(dfs_backend):
    # pair the first letters of w and w-bar up front; the search must
    # keep that pair in every reported solution
    rng = np.random.default_rng(41)
    lets, succ, pred, p0, off, cand, free = _random_double_instance(rng, 8)
    n = lets.size
    t = 0
    u = int(free[lets == lets[0] ^ 1][0])
    p0 = p0.copy()
    p0[t], p0[u] = u, t
    free2 = np.array([x for x in range(n) if x not in (t, u)], np.int32)
    status, partner, _ = dfs_backend.dfs_pairing(
        lets, succ, pred, p0, off, cand, free2, 10**6, False
    )
    if status == 1:
        assert partner[t] == u
        assert partner[u] == t


def test_backend_env_flag(monkeypatch):
    import importlib

    from foldsurf import _backend

    monkeypatch.setenv("FOLDSURF_BACKEND", "numpy")
    mod = importlib.reload(_backend)
    assert mod.backend_name() == "numpy"
    monkeypatch.setenv("FOLDSURF_BACKEND", "bogus")
    with pytest.raises(RuntimeError):
        importlib.reload(_backend)
    monkeypatch.delenv("FOLDSURF_BACKEND")
    mod = importlib.reload(_backend)
    assert mod.backend_name() in ("numba", "numpy")
