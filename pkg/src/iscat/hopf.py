"""Exact-arithmetic shuffle algebra on admissible two-letter words.

Admissible words over {X, Y} have equal letter counts and every prefix
carries at least as many X as Y; connected words are admissible with every
proper nonempty prefix strictly X-heavy.  The module provides the shuffle
product, the deconcatenation coproduct restricted to admissible factors,
graded formal log/exp under shuffle, and the expansion of the transmission
logarithm into connected words with exact integer coefficients.

Coefficients are kept as fractions.Fraction throughout; degree-6 entries
already overflow 16-bit integers and factorial denominators appear
transiently inside log/exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

__all__ = [
    "INADMISSIBLE",
    "ADMISSIBLE_DISCONNECTED",
    "ADMISSIBLE_CONNECTED",
    "LOGT_DEGREE_CAP",
    "Word",
    "WordSeries",
    "TensorSeries",
    "classify_word",
    "is_admissible",
    "is_connected",
    "admissible_words",
    "raw_shuffle",
    "shuffle",
    "coproduct",
    "coproduct_series",
    "t_series",
    "series_log",
    "series_exp",
    "logT_expansion",
    "check_primitive",
]

INADMISSIBLE = "inadmissible"
ADMISSIBLE_DISCONNECTED = "admissible-disconnected"
ADMISSIBLE_CONNECTED = "admissible-connected"

LOGT_DEGREE_CAP = 8


def _letters(w) -> str:
    s = w.letters if isinstance(w, Word) else str(w)
    if any(ch not in "XY" for ch in s):
        raise ValueError(f"word must use the alphabet X/Y, got {s!r}")
    return s


def is_admissible(w) -> bool:
    s = _letters(w)
    depth = 0
    for ch in s:
        depth += 1 if ch == "X" else -1
        if depth < 0:
            return False
    return depth == 0


def is_connected(w) -> bool:
    """Admissible and every proper nonempty prefix strictly X-heavy."""
    s = _letters(w)
    if not s or not is_admissible(s):
        return False
    depth = 0
    for ch in s[:-1]:
        depth += 1 if ch == "X" else -1
        if depth <= 0:
            return False
    return True


def classify_word(w) -> str:
    s = _letters(w)
    if not is_admissible(s):
        return INADMISSIBLE
    return ADMISSIBLE_CONNECTED if is_connected(s) else ADMISSIBLE_DISCONNECTED


@dataclass(frozen=True)
class Word:
    """A finite word over {X, Y}; degree counts letter pairs."""

    letters: str

    def __post_init__(self) -> None:
        _letters(self.letters)

    @property
    def degree(self) -> int:
        return len(self.letters) // 2


def admissible_words(degree: int) -> list[str]:
    """All admissible words of the given degree, lexicographically sorted."""
    out: list[str] = []

    def build(prefix: str, depth: int, remaining: int) -> None:
        if remaining == 0:
            if depth == 0:
                out.append(prefix)
            return
        if remaining - 1 >= depth + 1:  # room to come back down after an X
            build(prefix + "X", depth + 1, remaining - 1)
        if depth > 0:
            build(prefix + "Y", depth - 1, remaining - 1)

    build("", 0, 2 * degree)
    return sorted(out)


# ---------------------------------------------------------------------------
# Series containers
# ---------------------------------------------------------------------------


class WordSeries:
    """Sparse formal series over admissible words with exact coefficients.

    max_degree is a grading cutoff: words of larger degree are dropped by
    every operation, which makes log/exp finite computations.
    """

    __slots__ = ("coeffs", "max_degree")

    def __init__(self, coeffs: dict, max_degree: int, _admissible_checked=False):
        clean: dict[str, Fraction] = {}
        for w, c in coeffs.items():
            s = _letters(w)
            c = Fraction(c)
            if c == 0 or len(s) > 2 * max_degree:
                continue
            if not _admissible_checked and not is_admissible(s):
                raise ValueError(f"word {s!r} is not admissible")
            clean[s] = clean.get(s, Fraction(0)) + c
        self.coeffs = {w: c for w, c in clean.items() if c != 0}
        self.max_degree = max_degree

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, max_degree: int) -> "WordSeries":
        return cls({}, max_degree)

    @classmethod
    def unit(cls, max_degree: int) -> "WordSeries":
        return cls({"": 1}, max_degree)

    @classmethod
    def single(cls, word, coeff=1, max_degree: int | None = None) -> "WordSeries":
        s = _letters(word)
        m = max_degree if max_degree is not None else len(s) // 2
        return cls({s: coeff}, m)

    # -- inspection ---------------------------------------------------------
    @property
    def constant_term(self) -> Fraction:
        return self.coeffs.get("", Fraction(0))

    def homogeneous_part(self, degree: int) -> "WordSeries":
        part = {w: c for w, c in self.coeffs.items() if len(w) == 2 * degree}
        return WordSeries(part, self.max_degree, _admissible_checked=True)

    def with_cutoff(self, max_degree: int) -> "WordSeries":
        """Re-wrap at a different grading cutoff.

        Raising the cutoff asserts the series is exact beyond its current
        one (true for single words and finite exact sums); lowering drops
        the tail.
        """
        return WordSeries(self.coeffs, max_degree, _admissible_checked=True)

    def items_sorted(self):
        return sorted(self.coeffs.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def __eq__(self, other) -> bool:
        return isinstance(other, WordSeries) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "WordSeries(0)"
        terms = " + ".join(f"{c}*{w or '1'}" for w, c in self.items_sorted())
        return f"WordSeries({terms})"

    # -- linear structure ----------------------------------------------------
    def __add__(self, other: "WordSeries") -> "WordSeries":
        m = min(self.max_degree, other.max_degree)
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, Fraction(0)) + c
        return WordSeries(out, m, _admissible_checked=True)

    def __sub__(self, other: "WordSeries") -> "WordSeries":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "WordSeries":
        c = Fraction(scalar)
        return WordSeries(
            {w: c * v for w, v in self.coeffs.items()},
            self.max_degree,
            _admissible_checked=True,
        )

    # -- shuffle product ----------------------------------------------------
    def shuffle(self, other: "WordSeries") -> "WordSeries":
        m = min(self.max_degree, other.max_degree)
        out: dict[str, Fraction] = {}
        for w1, c1 in self.coeffs.items():
            for w2, c2 in other.coeffs.items():
                if len(w1) + len(w2) > 2 * m:
                    continue
                for w, n in raw_shuffle(w1, w2).items():
                    out[w] = out.get(w, Fraction(0)) + c1 * c2 * n
        return WordSeries(out, m, _admissible_checked=True)


class TensorSeries:
    """Sparse series over ordered pairs of admissible words."""

    __slots__ = ("coeffs", "max_degree")

    def __init__(self, coeffs: dict, max_degree: int, _admissible_checked=False):
        clean: dict[tuple[str, str], Fraction] = {}
        for (w1, w2), c in coeffs.items():
            s1, s2 = _letters(w1), _letters(w2)
            c = Fraction(c)
            if c == 0 or len(s1) + len(s2) > 2 * max_degree:
                continue
            if not _admissible_checked and not (is_admissible(s1) and is_admissible(s2)):
                raise ValueError(f"tensor factor {s1!r} or {s2!r} not admissible")
            key = (s1, s2)
            clean[key] = clean.get(key, Fraction(0)) + c
        self.coeffs = {k: c for k, c in clean.items() if c != 0}
        self.max_degree = max_degree

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        m = min(self.max_degree, other.max_degree)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return TensorSeries(out, m, _admissible_checked=True)

    def __rmul__(self, scalar) -> "TensorSeries":
        c = Fraction(scalar)
        return TensorSeries(
            {k: c * v for k, v in self.coeffs.items()},
            self.max_degree,
            _admissible_checked=True,
        )

    def with_cutoff(self, max_degree: int) -> "TensorSeries":
        """Re-wrap at a different total-degree cutoff (see WordSeries.with_cutoff)."""
        return TensorSeries(self.coeffs, max_degree, _admissible_checked=True)

    def shuffle(self, other: "TensorSeries") -> "TensorSeries":
        """Componentwise shuffle: (a1 x a2)(b1 x b2) = (a1 sh b1) x (a2 sh b2)."""
        m = min(self.max_degree, other.max_degree)
        out: dict[tuple[str, str], Fraction] = {}
        for (a1, a2), ca in self.coeffs.items():
            for (b1, b2), cb in other.coeffs.items():
                if len(a1) + len(a2) + len(b1) + len(b2) > 2 * m:
                    continue
                left = raw_shuffle(a1, b1)
                right = raw_shuffle(a2, b2)
                for w1, n1 in left.items():
                    for w2, n2 in right.items():
                        key = (w1, w2)
                        out[key] = out.get(key, Fraction(0)) + ca * cb * n1 * n2
        return TensorSeries(out, m, _admissible_checked=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, TensorSeries) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self) -> str:
        terms = " + ".join(
            f"{c}*({a or '1'}|{b or '1'})"
            for (a, b), c in sorted(self.coeffs.items())
        )
        return f"TensorSeries({terms or '0'})"


# ---------------------------------------------------------------------------
# Products and coproduct
# ---------------------------------------------------------------------------


@lru_cache(maxsize=200_000)
def _shuffle_pair(a: str, b: str) -> tuple[tuple[str, int], ...]:
    if not a:
        return ((b, 1),)
    if not b:
        return ((a, 1),)
    out: dict[str, int] = {}
    for w, n in _shuffle_pair(a[1:], b):
        key = a[0] + w
        out[key] = out.get(key, 0) + n
    for w, n in _shuffle_pair(a, b[1:]):
        key = b[0] + w
        out[key] = out.get(key, 0) + n
    return tuple(sorted(out.items()))


def raw_shuffle(a, b) -> dict[str, int]:
    """Shuffle of two unrestricted words as a word->count map.

    This is the plain interleaving count, exposed separately from the
    admissible-series algebra for testing (e.g. X sh XY = 2 XXY + XYX).
    """
    return dict(_shuffle_pair(_letters(a), _letters(b)))


def shuffle(a, b) -> WordSeries:
    """Shuffle product of two admissible words as a WordSeries."""
    sa, sb = _letters(a), _letters(b)
    for s in (sa, sb):
        if not is_admissible(s):
            raise ValueError(f"shuffle requires admissible words, got {s!r}")
    m = (len(sa) + len(sb)) // 2
    return WordSeries(raw_shuffle(sa, sb), m, _admissible_checked=True)


def coproduct(w) -> TensorSeries:
    """Deconcatenation coproduct restricted to admissible factors."""
    s = _letters(w)
    if not is_admissible(s):
        raise ValueError(f"coproduct requires an admissible word, got {s!r}")
    m = len(s) // 2
    out: dict[tuple[str, str], Fraction] = {}
    for cut in range(len(s) + 1):
        a1, a2 = s[:cut], s[cut:]
        if is_admissible(a1) and is_admissible(a2):
            key = (a1, a2)
            out[key] = out.get(key, Fraction(0)) + 1
    return TensorSeries(out, m, _admissible_checked=True)


def coproduct_series(p: WordSeries) -> TensorSeries:
    """Termwise coproduct of a series."""
    out = TensorSeries({}, p.max_degree)
    for w, c in p.coeffs.items():
        # each termwise coproduct is exact, so lift it to the series cutoff
        out = out + c * coproduct(w).with_cutoff(p.max_degree)
    return out


# ---------------------------------------------------------------------------
# Graded log / exp and the transmission-log expansion
# ---------------------------------------------------------------------------


def t_series(max_degree: int) -> WordSeries:
    """The group-like series 1 + XY + XYXY + ... (concatenation powers)."""
    return WordSeries(
        {"XY" * k: 1 for k in range(max_degree + 1)},
        max_degree,
        _admissible_checked=True,
    )


def series_log(t: WordSeries) -> WordSeries:
    """Graded shuffle-logarithm; requires constant term exactly 1."""
    if t.constant_term != 1:
        raise ValueError(f"series_log needs constant term 1, got {t.constant_term}")
    m = t.max_degree
    x = t - WordSeries.unit(m)  # no constant term; min degree >= 1
    out = WordSeries.zero(m)
    power = WordSeries.unit(m)
    for n in range(1, m + 1):
        power = power.shuffle(x)
        out = out + Fraction((-1) ** (n + 1), n) * power
    return out


def series_exp(p: WordSeries) -> WordSeries:
    """Graded shuffle-exponential; requires constant term exactly 0."""
    if p.constant_term != 0:
        raise ValueError(f"series_exp needs constant term 0, got {p.constant_term}")
    m = p.max_degree
    out = WordSeries.unit(m)
    power = WordSeries.unit(m)
    for n in range(1, m + 1):
        power = power.shuffle(p)
        out = out + Fraction(1, math.factorial(n)) * power
    return out


def _block_partition_counts(word: str) -> dict[int, int]:
    """Count set partitions of the letter positions into t parts, each part
    reading (in position order) as a nonempty power of XY.

    The scan keeps (a, b, t): a blocks awaiting their Y, b balanced blocks
    that may still grow, t blocks created so far.
    """
    states: dict[tuple[int, int, int], int] = {(0, 0, 0): 1}
    for ch in word:
        nxt: dict[tuple[int, int, int], int] = {}
        for (a, b, t), cnt in states.items():
            if ch == "X":
                key = (a + 1, b, t + 1)  # open a new block
                nxt[key] = nxt.get(key, 0) + cnt
                if b:
                    key = (a + 1, b - 1, t)  # extend one balanced block
                    nxt[key] = nxt.get(key, 0) + cnt * b
            else:
                if a:
                    key = (a - 1, b + 1, t)  # close one awaiting block
                    nxt[key] = nxt.get(key, 0) + cnt * a
        states = nxt
    return {t: cnt for (a, b, t), cnt in states.items() if a == 0}


def word_log_coefficient(word: str) -> int:
    """Coefficient of an admissible word in the transmission-log expansion.

    The series 1 + XY + XYXY + ... assigns to a word, via the n-fold shuffle
    powers, n! times its unordered block-partition count; the graded log is
    therefore sum over t of (-1)^(t+1) (t-1)! s_t.
    """
    s_t = _block_partition_counts(word)
    return sum((-1) ** (t + 1) * math.factorial(t - 1) * c for t, c in s_t.items())


def logT_expansion(max_degree: int) -> WordSeries:
    """Expansion of the transmission logarithm through the given degree.

    Every surviving word is admissible-connected; coefficients are exact
    integers (degree 1 and 2: XY - 2 XXYY).
    """
    if not (1 <= max_degree <= LOGT_DEGREE_CAP):
        raise ValueError(
            f"max_degree must lie in 1..{LOGT_DEGREE_CAP}, got {max_degree}"
        )
    coeffs: dict[str, Fraction] = {}
    for d in range(1, max_degree + 1):
        for w in admissible_words(d):
            c = word_log_coefficient(w)
            if c:
                coeffs[w] = Fraction(c)
    return WordSeries(coeffs, max_degree, _admissible_checked=True)


def check_primitive(p: WordSeries, degree: int) -> bool:
    """True iff the coproduct of p equals 1 x p + p x 1 exactly.

    p must be homogeneous of the given degree.
    """
    for w in p.coeffs:
        if len(w) != 2 * degree:
            raise ValueError(f"series not homogeneous of degree {degree}: {w!r}")
    lhs = coproduct_series(p)
    expected: dict[tuple[str, str], Fraction] = {}
    for w, c in p.coeffs.items():
        for key in (("", w), (w, "")):
            expected[key] = expected.get(key, Fraction(0)) + c
    return lhs == TensorSeries(expected, p.max_degree, _admissible_checked=True)
