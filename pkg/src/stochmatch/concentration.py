"""Balls-in-bins bounds: n balls thrown uniformly into n bins.

Two quantities are covered.  The first is the number of bins of a fixed
subset B that receive at least one ball.  The second is the number of
satisfied bin sequences: a sequence (b_1..b_c) with a designated position
set R is satisfied when some bin outside R gets a ball or some bin inside R
gets two.  Both come with closed-form bounds and seeded simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .model import make_rng

_E = math.e


class OccupancyBounds(NamedTuple):
    lower: float
    expected: float
    upper: float


def occupancy_bounds(n: int, bsize: int) -> OccupancyBounds:
    """Exact E[S] = |B|(1 - (1 - 1/n)^n) with its sandwich
    |B|(1 - 1/e) <= E[S] <= |B|(1 - (1 - 1/n)/e)."""
    if n < 1 or not 0 <= bsize <= n:
        raise ValueError("need n >= 1 and 0 <= bsize <= n")
    empty = math.exp(n * math.log1p(-1.0 / n)) if n > 1 else 0.0
    return OccupancyBounds(
        lower=bsize * (1.0 - 1.0 / _E),
        expected=bsize * (1.0 - empty),
        upper=bsize * (1.0 - (1.0 - 1.0 / n) / _E),
    )


def occupancy_sandwich_holds(n_max: int) -> np.ndarray:
    """Boolean per n in 1..n_max: does the sandwich hold for the occupancy
    probability?  E[S] is linear in |B|, so this covers every bsize <= n."""
    n = np.arange(1, n_max + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        empty = np.exp(n * np.log1p(-1.0 / n))
    p = 1.0 - empty
    lower = 1.0 - 1.0 / _E
    upper = 1.0 - (1.0 - 1.0 / n) / _E
    return (lower <= p) & (p <= upper)


def occupancy_exact_expectation(n: int, bsize: int) -> Fraction:
    return bsize * (1 - Fraction(n - 1, n) ** n)


class TailBounds(NamedTuple):
    linear_exponent: float     # 2 exp(-eps n / 2)
    quadratic_exponent: float  # 2 exp(-eps^2 n / 2)

    @property
    def weaker(self) -> float:
        return max(self.linear_exponent, self.quadratic_exponent)


def tail_probability_bounds(n: int, eps: float) -> TailBounds:
    """Both forms of the deviation bound; the quadratic one is what the
    bounded-differences argument yields and is the weaker for eps < 1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return TailBounds(2.0 * math.exp(-eps * n / 2.0), 2.0 * math.exp(-eps * eps * n / 2.0))


# ---------------------------------------------------------------------------
# bin sequences


@dataclass(frozen=True)
class BinSequenceSpec:
    n: int
    sequences: tuple[tuple[int, ...], ...]
    R: frozenset[int]   # 1-based positions needing two balls
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.sequences:
            raise ValueError("need at least one sequence")
        c = len(self.sequences[0])
        if c < 1 or any(len(s) != c for s in self.sequences):
            raise ValueError("all sequences must share a positive length")
        if not self.R <= set(range(1, c + 1)):
            raise ValueError("R must be a subset of 1..c")
        for s in self.sequences:
            if len(set(s)) != c or min(s) < 0 or max(s) >= self.n:
                raise ValueError("sequence bins must be distinct and in range")
        load = np.bincount(np.array(self.sequences).ravel(), minlength=self.n)
        if load.max() > self.d:
            raise ValueError(f"a bin lies in {int(load.max())} sequences, more than d={self.d}")

    @property
    def ell(self) -> int:
        return len(self.sequences)

    @property
    def c(self) -> int:
        return len(self.sequences[0])


def blue_red_spec(n: int) -> BinSequenceSpec:
    """The blue/red configuration: sequences (j, j+1 mod n), the second
    position needs two balls, every bin is in two sequences."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return BinSequenceSpec(n=n, sequences=tuple((j, (j + 1) % n) for j in range(n)),
                           R=frozenset({2}), d=2)


def satisfied_lower_bound(spec: BinSequenceSpec, eps: float) -> float:
    """l(1 - 2^|R|/e^c) - eps d n - (2^|R| c^2 / e^c) l / (n - c^2)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n, c, ell, r = spec.n, spec.c, spec.ell, len(spec.R)
    if n <= c * c:
        raise ValueError("bound needs n > c^2")
    q = 2.0 ** r / _E ** c
    return ell * (1.0 - q) - eps * spec.d * n - q * c * c * ell / (n - c * c)


def satisfied_expectation_bound(spec: BinSequenceSpec) -> float:
    """Lower bound on E[S]: l(1 - 2^|R|/e^c (1 + c^2/(n - c^2)))."""
    n, c = spec.n, spec.c
    if n <= c * c:
        raise ValueError("bound needs n > c^2")
    return spec.ell * (1.0 - 2.0 ** len(spec.R) / _E ** c * (1.0 + c * c / (n - c * c)))


def unsatisfied_probability(n: int, c: int, r: int) -> Fraction:
    """Exact probability that one sequence of c distinct bins, r of them in
    R, is not satisfied: sum over R' of n^(|R'|) n^-|R'| (1 - c/n)^(n - |R'|),
    with n^(k) the falling factorial."""
    if c > 8:
        raise ValueError("exact evaluation is limited to c <= 8")
    if not 0 <= r <= c or c > n:
        raise ValueError("need 0 <= r <= c <= n")
    total = Fraction(0)
    base = Fraction(n - c, n)
    for k in range(r + 1):
        ways = math.comb(r, k)
        falling = math.perm(n, k)
        total += ways * Fraction(falling, n ** k) * base ** (n - k)
    return total


def exact_expected_satisfied(spec: BinSequenceSpec) -> Fraction:
    return spec.ell * (1 - unsatisfied_probability(spec.n, spec.c, len(spec.R)))


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimResult:
    values: np.ndarray  # S per trial

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def stderr(self) -> float:
        v = self.values
        return float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0

    def fraction_below(self, threshold: float) -> float:
        return float(np.mean(self.values < threshold))

    def fraction_outside(self, lo: float, hi: float) -> float:
        return float(np.mean((self.values < lo) | (self.values > hi)))


def _bin_loads(n: int, trials: int, seed: int, chunk: int = 1000):
    """Yield (chunk_trials, n) arrays of ball counts per bin."""
    rng = make_rng(seed)
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        balls = rng.integers(0, n, size=(t, n))
        flat = balls + (np.arange(t) * n)[:, None]
        yield np.bincount(flat.ravel(), minlength=t * n).reshape(t, n)
        done += t


def simulate_occupancy(n: int, bsize: int, trials: int, seed: int) -> SimResult:
    """S per trial for B = the first ``bsize`` bins."""
    if n < 1 or not 0 <= bsize <= n or trials < 1:
        raise ValueError("need n >= 1, 0 <= bsize <= n and trials >= 1")
    out = [np.count_nonzero(loads[:, :bsize], axis=1) for loads in _bin_loads(n, trials, seed)]
    return SimResult(np.concatenate(out))


def simulate_satisfied(spec: BinSequenceSpec, trials: int, seed: int) -> SimResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seqs = np.array(spec.sequences)
    need = np.array([2 if p + 1 in spec.R else 1 for p in range(spec.c)])
    out = []
    for loads in _bin_loads(spec.n, trials, seed):
        sat = (loads[:, seqs] >= need).any(axis=2)
        out.append(sat.sum(axis=1))
    return SimResult(np.concatenate(out))
