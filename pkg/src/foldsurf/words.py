"""Words and cyclic words in a finitely generated free group.

Letters are encoded as small ints: generator i is 2*i, its inverse is
2*i + 1, so x ^ 1 inverts a letter and plain integer order realizes
the letter order a < A < b < B < ...  Generator i prints as the i-th
lowercase ASCII letter and its inverse as the uppercase one, which
caps the rank at 26.

A Word is a reduced letter string; a CyclicWord is a cyclically
reduced conjugacy-class representative, stored in its lexicographically
least rotation so equal classes compare equal.  The module also
provides cyclic subword censuses, the pseudorandomness test built on
them, abelianization, and uniform sampling of reduced words.
"""

import numpy as np

from ._backend import kernels
from .errors import EmptyWordError

__all__ = [
    "Alphabet",
    "Word",
    "CyclicWord",
    "PseudorandomParams",
    "PseudorandomReport",
    "SubwordCensus",
    "inverse_letter",
    "free_reduce",
    "cyclic_reduce",
    "least_rotation",
    "census",
    "num_reduced_words",
    "is_pseudorandom",
    "abelianize",
    "is_homologically_trivial",
    "sample_reduced_word",
]

MAX_RANK = 26


def inverse_letter(x):
    """Inverse of one encoded letter."""
    return x ^ 1


def _letters_to_str(letters):
    chars = []
    for x in letters:
        g, bar = divmod(int(x), 2)
        c = chr(ord("a") + g)
        chars.append(c.upper() if bar else c)
    return "".join(chars)


def _str_to_letters(text, rank):
    letters = np.empty(len(text), np.int8)
    for i, c in enumerate(text):
        if "a" <= c <= "z":
            g, bar = ord(c) - ord("a"), 0
        elif "A" <= c <= "Z":
            g, bar = ord(c) - ord("A"), 1
        else:
            raise ValueError(f"bad letter {c!r}")
        if g >= rank:
            raise ValueError(f"letter {c!r} outside rank-{rank} alphabet")
        letters[i] = 2 * g + bar
    return letters


def _as_letter_array(letters):
    arr = np.asarray(letters, dtype=np.int8)
    if arr.ndim != 1:
        raise ValueError("letters must be one-dimensional")
    return arr


def _validate_letters(arr, rank):
    if arr.size and (arr.min() < 0 or arr.max() >= 2 * rank):
        raise ValueError(f"letter out of range for rank {rank}")


class Alphabet:
    """The 2l-letter alphabet of a rank-l free group."""

    def __init__(self, rank):
        rank = int(rank)
        if not 1 <= rank <= MAX_RANK:
            raise ValueError(f"rank must be in 1..{MAX_RANK}, got {rank}")
        self.rank = rank
        self.size = 2 * rank

    def word(self, text):
        """Parse a reduced word from its letter string.

        >>> Alphabet(2).word("abAB")
        Word('abAB', rank=2)
        """
        return Word(self.rank, _str_to_letters(text, self.rank))

    def cyclic_word(self, text):
        return CyclicWord(self.rank, _str_to_letters(text, self.rank))

    def __repr__(self):
        return f"Alphabet({self.rank})"

    def __eq__(self, other):
        return isinstance(other, Alphabet) and other.rank == self.rank

    def __hash__(self):
        return hash(("Alphabet", self.rank))


def _is_reduced(arr):
    if arr.size < 2:
        return True
    return not np.any(arr[1:] == (arr[:-1] ^ 1))


class Word:
    """A reduced word.  Immutable; equality is letter-for-letter."""

    __slots__ = ("rank", "letters")

    def __init__(self, rank, letters, _checked=False):
        arr = _as_letter_array(letters)
        if not _checked:
            rank = int(rank)
            if not 1 <= rank <= MAX_RANK:
                raise ValueError(f"rank must be in 1..{MAX_RANK}, got {rank}")
            _validate_letters(arr, rank)
            if not _is_reduced(arr):
                raise ValueError("word is not reduced")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "letters", arr)

    def __setattr__(self, *a):
        raise AttributeError("Word is immutable")

    @classmethod
    def parse(cls, rank, text):
        return cls(rank, _str_to_letters(text, rank))

    def __len__(self):
        return self.letters.size

    def __str__(self):
        return _letters_to_str(self.letters)

    def __repr__(self):
        return f"Word({str(self)!r}, rank={self.rank})"

    def __eq__(self, other):
        return (
            isinstance(other, Word)
            and other.rank == self.rank
            and other.letters.size == self.letters.size
            and bool(np.all(other.letters == self.letters))
        )

    def __hash__(self):
        return hash(("Word", self.rank, self.letters.tobytes()))

    def inverse(self):
        return Word(self.rank, self.letters[::-1] ^ 1, _checked=True)

    def __mul__(self, other):
        """Concatenate and reduce."""
        if not isinstance(other, Word):
            return NotImplemented
        if other.rank != self.rank:
            raise ValueError("rank mismatch")
        joined = np.concatenate([self.letters, other.letters])
        return Word(self.rank, kernels.free_reduce(joined), _checked=True)


def free_reduce(rank, letters):
    """Reduce an arbitrary letter sequence to a Word.

    >>> str(free_reduce(2, [0, 1, 0, 2]))
    'ab'
    """
    arr = _as_letter_array(letters)
    _validate_letters(arr, rank)
    return Word(rank, kernels.free_reduce(arr), _checked=True)


def cyclic_reduce(word):
    """Strip matching ends: word = u * core * u^-1 with core cyclically reduced.

    Returns (core, u) as (CyclicWord, Word).  Raises EmptyWordError on
    the trivial word, whose conjugacy class has no cyclic representative.
    """
    arr = word.letters
    if arr.size == 0:
        raise EmptyWordError("cannot cyclically reduce the trivial word")
    i, j = 0, arr.size - 1
    while i < j and arr[i] == arr[j] ^ 1:
        i += 1
        j -= 1
    core = CyclicWord(word.rank, arr[i : j + 1])
    # fold the canonical rotation into the conjugator so the identity
    # word == u * core * u^-1 holds exactly, not just up to conjugacy
    r = least_rotation(arr[i : j + 1])
    conj = Word(word.rank, arr[: i + r], _checked=True)
    return core, conj


def least_rotation(letters):
    """Index of the lexicographically least rotation (Booth's algorithm)."""
    seq = [int(x) for x in letters]
    n = len(seq)
    if n <= 1:
        return 0
    s = seq + seq
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n


class CyclicWord:
    """A cyclically reduced conjugacy-class representative.

    Stored in the lexicographically least rotation, so two CyclicWords
    are equal iff they name the same conjugacy class.
    """

    __slots__ = ("rank", "letters")

    def __init__(self, rank, letters, _checked=False):
        arr = _as_letter_array(letters)
        if arr.size == 0:
            raise EmptyWordError("a cyclic word must be nonempty")
        if not _checked:
            rank = int(rank)
            if not 1 <= rank <= MAX_RANK:
                raise ValueError(f"rank must be in 1..{MAX_RANK}, got {rank}")
            _validate_letters(arr, rank)
            if not _is_reduced(arr) or (arr.size > 1 and arr[0] == arr[-1] ^ 1):
                raise ValueError("cyclic word must be cyclically reduced")
        r = least_rotation(arr)
        arr = np.concatenate([arr[r:], arr[:r]])
        arr.setflags(write=False)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "letters", arr)

    def __setattr__(self, *a):
        raise AttributeError("CyclicWord is immutable")

    @classmethod
    def parse(cls, rank, text):
        return cls(rank, _str_to_letters(text, rank))

    def __len__(self):
        return self.letters.size

    def __str__(self):
        return _letters_to_str(self.letters)

    def __repr__(self):
        return f"CyclicWord({str(self)!r}, rank={self.rank})"

    def __eq__(self, other):
        return (
            isinstance(other, CyclicWord)
            and other.rank == self.rank
            and other.letters.size == self.letters.size
            and bool(np.all(other.letters == self.letters))
        )

    def __hash__(self):
        return hash(("CyclicWord", self.rank, self.letters.tobytes()))

    def inverse(self):
        return CyclicWord(self.rank, self.letters[::-1] ^ 1, _checked=True)

    def as_word(self):
        return Word(self.rank, self.letters, _checked=True)

    def rotation(self, r):
        """The rotation starting at index r, as a plain letter array."""
        arr = self.letters
        r %= arr.size
        return np.concatenate([arr[r:], arr[:r]])

    def primitive_root(self):
        """The shortest u with self = u^d, and the exponent d.

        >>> CyclicWord.parse(2, "abab").primitive_root()
        (CyclicWord('ab', rank=2), 2)
        """
        arr = self.letters
        n = arr.size
        for p in range(1, n + 1):
            if n % p:
                continue
            if bool(np.all(arr[: n - p] == arr[p:])):
                return CyclicWord(self.rank, arr[:p], _checked=True), n // p
        raise AssertionError("unreachable")


def num_reduced_words(rank, T):
    """Number of reduced words of length T: 2l * (2l-1)^(T-1)."""
    if T < 1:
        raise ValueError("T must be positive")
    return 2 * rank * (2 * rank - 1) ** (T - 1)


class PseudorandomParams:
    """Window length T and tolerance epsilon for the census test."""

    __slots__ = ("T", "epsilon")

    def __init__(self, T, epsilon):
        T = int(T)
        epsilon = float(epsilon)
        if T < 1:
            raise ValueError("T must be a positive integer")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "epsilon", epsilon)

    def __setattr__(self, *a):
        raise AttributeError("PseudorandomParams is immutable")

    def __repr__(self):
        return f"PseudorandomParams(T={self.T}, epsilon={self.epsilon})"

    def __eq__(self, other):
        return (
            isinstance(other, PseudorandomParams)
            and other.T == self.T
            and other.epsilon == self.epsilon
        )

    def __hash__(self):
        return hash(("PseudorandomParams", self.T, self.epsilon))


class PseudorandomReport:
    """Worst window of a census test: the sigma farthest from ratio 1."""

    __slots__ = ("sigma", "ratio", "T", "epsilon")

    def __init__(self, sigma, ratio, T, epsilon):
        self.sigma = sigma
        self.ratio = ratio
        self.T = T
        self.epsilon = epsilon

    def __repr__(self):
        return (
            f"PseudorandomReport(sigma={self.sigma!r}, ratio={self.ratio:.4f}, "
            f"T={self.T}, epsilon={self.epsilon})"
        )


class SubwordCensus:
    """Counts of length-T cyclic subwords of a chain.

    Every position of every component contributes exactly one window
    (wrapping as needed), so the counts total the chain length; windows
    of a cyclically reduced word are automatically reduced.
    """

    __slots__ = ("rank", "T", "total_length", "counts")

    def __init__(self, rank, T, total_length, counts):
        self.rank = rank
        self.T = T
        self.total_length = total_length
        self.counts = counts

    def ratio(self, sigma):
        """Normalized frequency of sigma: 1.0 means exactly uniform."""
        c = self.counts.get(sigma, 0)
        return c / self.total_length * num_reduced_words(self.rank, self.T)

    def __repr__(self):
        return (
            f"SubwordCensus(rank={self.rank}, T={self.T}, "
            f"total_length={self.total_length}, distinct={len(self.counts)})"
        )


def _chain_components(chain):
    if isinstance(chain, CyclicWord):
        return [chain]
    comps = list(chain)
    if not comps:
        raise ValueError("chain must have at least one component")
    ranks = {c.rank for c in comps}
    if len(ranks) != 1:
        raise ValueError("chain components must share one rank")
    return comps


def census(chain, T):
    """Census of length-T cyclic subwords over a chain of CyclicWords."""
    comps = _chain_components(chain)
    rank = comps[0].rank
    T = int(T)
    if T < 1:
        raise ValueError("T must be positive")
    base = 2 * rank
    if T * np.log2(base) > 62:
        raise ValueError(f"T={T} too large to encode windows over rank {rank}")
    merged = {}
    total = 0
    for comp in comps:
        codes = kernels.cyclic_subword_codes(comp.letters, T, base)
        vals, cnts = np.unique(codes, return_counts=True)
        for v, c in zip(vals.tolist(), cnts.tolist()):
            digits = []
            for _ in range(T):
                v, d = divmod(v, base)
                digits.append(d)
            sigma = _letters_to_str(digits)
            merged[sigma] = merged.get(sigma, 0) + c
        total += comp.letters.size
    return SubwordCensus(rank, T, total, merged)


def _first_missing_reduced(rank, T, present):
    """Lexicographically least reduced length-T word not in `present`."""
    letters = []

    def extend():
        if len(letters) == T:
            sigma = _letters_to_str(letters)
            return None if sigma in present else sigma
        for x in range(2 * rank):
            if letters and x == letters[-1] ^ 1:
                continue
            letters.append(x)
            found = extend()
            if found is not None:
                return found
            letters.pop()
        return None

    return extend()


def is_pseudorandom(chain, params):
    """Test whether every length-T window frequency is within epsilon of uniform.

    Returns (passed, report); the report names a sigma with the most
    extreme ratio.  A window that never occurs counts with ratio 0, so
    for epsilon < 1 the chain must realize every reduced window.
    """
    cen = census(chain, params.T)
    R = num_reduced_words(cen.rank, params.T)
    worst_sigma = None
    worst_ratio = None
    worst_dev = -1.0
    if len(cen.counts) < R:
        worst_sigma = _first_missing_reduced(cen.rank, params.T, cen.counts)
        worst_ratio = 0.0
        worst_dev = 1.0
    for sigma in sorted(cen.counts):
        r = cen.ratio(sigma)
        dev = abs(r - 1.0)
        if dev > worst_dev:
            worst_sigma, worst_ratio, worst_dev = sigma, r, dev
    report = PseudorandomReport(worst_sigma, worst_ratio, params.T, params.epsilon)
    return worst_dev <= params.epsilon, report


def abelianize(word):
    """Exponent-sum vector of a Word or CyclicWord, one entry per generator."""
    out = np.zeros(word.rank, np.int64)
    letters = word.letters
    if letters.size:
        gens = letters >> 1
        signs = 1 - 2 * (letters & 1).astype(np.int64)
        np.add.at(out, gens, signs)
    return out


def is_homologically_trivial(chain):
    """True iff the abelianizations of the chain components sum to zero."""
    comps = _chain_components(chain)
    total = np.zeros(comps[0].rank, np.int64)
    for comp in comps:
        total += abelianize(comp)
    return bool(np.all(total == 0))


def sample_reduced_word(rank, length, rng):
    """Uniformly random reduced word of the given length.

    First letter uniform over all 2l letters, every later letter
    uniform over the 2l - 1 letters that do not cancel.
    """
    if not 1 <= rank <= MAX_RANK:
        raise ValueError(f"rank must be in 1..{MAX_RANK}")
    length = int(length)
    if length < 0:
        raise ValueError("length must be nonnegative")
    if length == 0:
        return Word(rank, np.empty(0, np.int8), _checked=True)
    first = int(rng.integers(0, 2 * rank))
    raws = rng.integers(0, 2 * rank - 1, size=length - 1, dtype=np.int64)
    return Word(rank, kernels.fill_reduced_word(np.int8(first), raws), _checked=True)
