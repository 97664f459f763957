"""Factor-parameter sequences, their frequency measures and shift constants.

A sequence (L_tau) of factor sizes is given as a finite pattern repeated
cyclically.  Each entry is an integer L > n (a scaled n x n corner of an
L x L Haar unitary) or ``INF`` (a complex Ginibre matrix).  The gaps
L_tau - n define a probability measure on {1, 2, ...} plus an atom at
infinity; every series in :mod:`picketfence.spectrum` is a functional of
its tail weights.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .special import EULER_GAMMA, digamma, harmonic

INF = math.inf

Entry = Union[int, float]


class PatternError(ValueError):
    """Malformed pattern string; ``position`` is the 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def parse_pattern(text: str) -> tuple[Entry, ...]:
    """Parse ``"inf,5,5"`` into ``(INF, 5, 5)``.

    Grammar: entry := positive-integer | "inf"; pattern := entry ("," entry)*.
    """
    entries = []
    pos = 0
    for raw in text.split(","):
        token = raw.strip()
        offset = pos + (len(raw) - len(raw.lstrip()))
        if token.lower() == "inf":
            entries.append(INF)
        elif token.isdigit() and int(token) > 0:
            entries.append(int(token))
        else:
            raise PatternError(f"bad pattern entry {token!r}", offset)
        pos += len(raw) + 1
    return tuple(entries)


def format_pattern(entries: Iterable[Entry]) -> str:
    return ",".join("inf" if e == INF else str(int(e)) for e in entries)


def _validate_entry(entry, n):
    if entry == INF:
        return INF
    if isinstance(entry, float) and entry.is_integer():
        entry = int(entry)
    if not isinstance(entry, int) or isinstance(entry, bool):
        raise ValueError(f"entry must be an integer or INF, got {entry!r}")
    if entry <= n:
        raise ValueError(f"entry L={entry} must exceed n={n}")
    return entry


@dataclass(frozen=True)
class FrequencyMeasure:
    """Finitely supported measure on {1, 2, ...} plus an atom at infinity."""

    atoms: Mapping[int, float] = field(default_factory=dict)
    weight_at_infinity: float = 0

    def __post_init__(self):
        atoms = {}
        for k, w in dict(self.atoms).items():
            k = int(k)
            if k < 1:
                raise ValueError(f"support points must be positive integers, got {k}")
            if w < 0:
                raise ValueError(f"negative weight {w} at {k}")
            if w > 0:
                atoms[k] = w
        if self.weight_at_infinity < 0:
            raise ValueError("negative weight at infinity")
        total = sum(atoms.values()) + self.weight_at_infinity
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {float(total)}, expected 1")
        object.__setattr__(self, "atoms", dict(sorted(atoms.items())))

    @property
    def max_support(self) -> int:
        """Largest finite support point (0 when all mass is at infinity)."""
        return max(self.atoms, default=0)

    def tail_weight(self, k: int) -> float:
        return float(tail_weight(self, k))

    def tail_weights(self, upto: int) -> list[float]:
        """Tail weights rho([k, inf]) for k = 1..upto."""
        out = []
        running = float(self.weight_at_infinity) + float(
            sum(w for p, w in self.atoms.items() if p > upto)
        )
        for k in range(upto, 0, -1):
            running += float(self.atoms.get(k, 0))
            out.append(running)
        return out[::-1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "atoms": {str(k): float(w) for k, w in self.atoms.items()},
                "infinity": float(self.weight_at_infinity),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FrequencyMeasure":
        obj = json.loads(text)
        return cls({int(k): float(w) for k, w in obj["atoms"].items()}, float(obj["infinity"]))


GINIBRE = FrequencyMeasure({}, 1)


def tail_weight(measure: FrequencyMeasure, k: int):
    """rho([k, inf]): mass at infinity plus finite atoms at points >= k.

    Returned exactly (Fraction) when the measure holds rational weights.
    """
    if k < 1:
        raise ValueError(f"tail_weight needs k >= 1, got {k}")
    return measure.weight_at_infinity + sum(
        (w for p, w in measure.atoms.items() if p >= k), start=0
    )


@dataclass(frozen=True)
class EnsembleSequence:
    """The sequence (L_tau) obtained by repeating ``pattern`` cyclically."""

    n: int
    pattern: tuple

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if isinstance(self.pattern, str):
            object.__setattr__(self, "pattern", parse_pattern(self.pattern))
        if len(self.pattern) == 0:
            raise ValueError("pattern must be non-empty")
        object.__setattr__(
            self, "pattern", tuple(_validate_entry(e, self.n) for e in self.pattern)
        )

    @property
    def period(self) -> int:
        return len(self.pattern)

    def entry(self, tau: int) -> Entry:
        """L_tau for tau = 1, 2, ..."""
        return self.pattern[(tau - 1) % self.period]

    def prefix(self, T: int) -> list:
        return [self.entry(t) for t in range(1, T + 1)]

    def counts(self, T: int) -> Counter:
        """Multiplicity of each L value among L_1..L_T."""
        full, rest = divmod(T, self.period)
        counter = Counter()
        for e in self.pattern:
            counter[e] += full
        for e in self.pattern[:rest]:
            counter[e] += 1
        return counter


def measure_from_sequence(seq: EnsembleSequence) -> FrequencyMeasure:
    """Exact frequency measure of the gaps L_tau - n over one period."""
    P = seq.period
    atoms = Counter()
    at_inf = 0
    for e in seq.pattern:
        if e == INF:
            at_inf += 1
        else:
            atoms[e - seq.n] += 1
    return FrequencyMeasure(
        {k: Fraction(c, P) for k, c in atoms.items()}, Fraction(at_inf, P)
    )


def empirical_tail(seq: EnsembleSequence, k: int, T: int) -> Fraction:
    """#{tau <= T : L_tau - n >= k} / T, exactly."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    hits = sum(c for e, c in seq.counts(T).items() if e - seq.n >= k)
    return Fraction(hits, T)


def shift_s(n: int, L: Entry) -> float:
    """H_{L-n} - log L for finite L, Euler's gamma for L = INF."""
    if L == INF:
        return EULER_GAMMA
    L = _validate_entry(L, n)
    m = L - n
    if m <= 4096:
        return harmonic(m) - math.log(L)
    # H_m - log L = (psi(m+1) - log(m+1)) + gamma + log1p(-(n-1)/L)
    return digamma(m + 1.0) - math.log(m + 1.0) + EULER_GAMMA + math.log1p(-(n - 1) / L)


def shift_total(n: int, entries: Iterable[Entry]) -> float:
    """Sum of shift_s over a finite list of entries."""
    counts = Counter(entries)
    return math.fsum(c * shift_s(n, e) for e, c in counts.items())


def alpha(measure: FrequencyMeasure, n: int) -> float:
    """Sum over k of rho([k, inf]) * (1/k + log(1 - 1/(k+n))).

    Terms below K = max_support + 1 are summed directly; beyond K the tail
    weight is constant and the remainder equals log(K+n-1) - psi(K).
    """
    K = measure.max_support + 1
    weights = measure.tail_weights(K - 1)
    finite = math.fsum(
        w * (1.0 / k + math.log1p(-1.0 / (k + n))) for k, w in enumerate(weights, start=1)
    )
    rho_inf = float(measure.weight_at_infinity)
    if rho_inf == 0:
        return finite
    return finite + rho_inf * (math.log(K + n - 1) - digamma(K))


def coerce_measure(obj, n: int | None = None) -> FrequencyMeasure:
    """Accept a FrequencyMeasure, an EnsembleSequence, or a pattern string (needs n)."""
    if isinstance(obj, FrequencyMeasure):
        return obj
    if isinstance(obj, EnsembleSequence):
        return measure_from_sequence(obj)
    if isinstance(obj, (str, Sequence)):
        if n is None:
            raise ValueError("n is required to build a measure from a pattern")
        return measure_from_sequence(EnsembleSequence(n, tuple(obj) if not isinstance(obj, str) else obj))
    raise TypeError(f"cannot interpret {type(obj).__name__} as a frequency measure")
