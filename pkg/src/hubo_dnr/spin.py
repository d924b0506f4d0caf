"""Binary-to-spin substitution and logical resource counts for one layer.

With ``x = (1 - z) / 2`` a monomial over the index set S expands to
``2^-|S| * sum over T subset of S of (-1)^|T| z_T``. One optimisation layer
costs one multi-qubit Z rotation per non-constant spin term (cost operator)
plus two single-qubit rotations per qubit (mixer).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .hubo import BinaryPolynomial, Variables, canonical_key, indices_of

MIXER_ROTATIONS_PER_QUBIT = 2
#: relative size below which an aggregated coefficient counts as cancelled
CANCEL_TOL = 1e-12
DEFAULT_MEMORY_BUDGET = 8 * 2 ** 30
BYTES_PER_ENTRY = 96  # key words + coefficient + |coefficient| + sort scratch, per aggregated term


@dataclass(frozen=True)
class IsingHamiltonian:
    variables: Variables
    terms: dict[int, float]
    offset: float = 0.0

    def sorted_terms(self) -> list[tuple[int, float]]:
        return sorted(self.terms.items(), key=lambda t: canonical_key(t[0]))

    def evaluate_spins(self, z) -> float:
        """Energy at spins ``z`` (sequence of +1/-1)."""
        neg = 0
        for i, s in enumerate(z):
            if s == -1:
                neg |= 1 << i
        return self.offset + sum(c if (m & neg).bit_count() % 2 == 0 else -c
                                 for m, c in self.sorted_terms())

    def to_binary(self) -> BinaryPolynomial:
        """Inverse substitution ``z = 1 - 2x``."""
        out: dict[int, float] = {0: self.offset}
        abs_sum: dict[int, float] = {0: abs(self.offset)}
        for mask, c in self.terms.items():
            _expand(mask, c, -2.0, out, abs_sum)
        return BinaryPolynomial(self.variables, _cleaned(out, abs_sum))

    def max_weight(self) -> int:
        return max((m.bit_count() for m in self.terms), default=0)

    def qubits(self) -> int:
        acc = 0
        for m in self.terms:
            acc |= m
        return acc.bit_count()


def _expand(mask: int, c: float, factor: float, out: dict, abs_sum: dict) -> None:
    """Add ``c * prod_{i in mask} (1 + factor * y_i)`` into ``out``.

    ``factor=-1`` with the prefactor 2^-|S| gives the spin map; ``factor=-2``
    is its inverse.
    """
    sub = mask
    while True:
        val = c * factor ** sub.bit_count()
        out[sub] = out.get(sub, 0.0) + val
        abs_sum[sub] = abs_sum.get(sub, 0.0) + abs(val)
        if sub == 0:
            break
        sub = (sub - 1) & mask


def _cleaned(out: dict[int, float], abs_sum: dict[int, float]) -> dict[int, float]:
    return {m: c for m, c in out.items() if abs(c) > CANCEL_TOL * abs_sum[m]}


def to_ising(h: BinaryPolynomial) -> IsingHamiltonian:
    """Exact spin form of ``h``; cancelled coefficients are dropped."""
    out: dict[int, float] = {}
    abs_sum: dict[int, float] = {}
    for mask, c in h.terms.items():
        _expand(mask, c / 2 ** mask.bit_count(), -1.0, out, abs_sum)
    kept = _cleaned(out, abs_sum)
    offset = kept.pop(0, 0.0)
    return IsingHamiltonian(h.variables, kept, offset)


@dataclass(frozen=True)
class IsingSummary:
    logical_qubits: int
    pauli_terms: int
    rotation_gates_one_layer: int
    hubo_interactions: int
    max_term_weight: int
    exact: bool = True

    def __post_init__(self):
        if self.rotation_gates_one_layer != self.pauli_terms + MIXER_ROTATIONS_PER_QUBIT * self.logical_qubits:
            raise ValueError("rotation count must equal pauli terms + 2 * qubits")

    @classmethod
    def of(cls, qubits: int, pauli_terms: int, hubo_interactions: int = 0,
           max_term_weight: int = 0, exact: bool = True) -> IsingSummary:
        return cls(qubits, pauli_terms, pauli_terms + MIXER_ROTATIONS_PER_QUBIT * qubits,
                   hubo_interactions, max_term_weight, exact)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> IsingSummary:
        return cls(**doc)


def logical_counts(ising: IsingHamiltonian, hubo_interactions: int = 0) -> IsingSummary:
    return IsingSummary.of(ising.qubits(), len(ising.terms), hubo_interactions, ising.max_weight())


# -- counting without building the operator --------------------------------------

TermSource = Callable[[], Iterable[tuple[int, float]]]


def _source(h: BinaryPolynomial | TermSource) -> TermSource:
    if isinstance(h, BinaryPolynomial):
        return lambda: h.terms.items()
    return h


class _Overflow(Exception):
    pass


_ONE = np.uint64(1)


def _to_words(masks: list[int], words: int) -> np.ndarray:
    out = np.zeros((len(masks), words), dtype=np.uint64)
    lim = (1 << 64) - 1
    for w in range(words):
        out[:, w] = np.array([(m >> (64 * w)) & lim for m in masks], dtype=np.uint64)
    return out


def _merge_rows(keys: np.ndarray, coef: np.ndarray, mag: np.ndarray):
    if len(coef) < 2:
        return keys, coef, mag
    order = np.lexsort(keys.T[::-1])
    keys, coef, mag = keys[order], coef[order], mag[order]
    starts = np.ones(len(coef), dtype=bool)
    starts[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    idx = np.flatnonzero(starts)
    return keys[idx], np.add.reduceat(coef, idx), np.add.reduceat(mag, idx)


def _bit_frequencies(keys: np.ndarray) -> np.ndarray:
    """Occurrences of each variable (word-major bit order) among the rows."""
    out = np.zeros(keys.shape[1] * 64, dtype=np.int64)
    for b in range(64):
        out[b::64] = ((keys >> np.uint64(b)) & _ONE).sum(axis=0)
    return out


def _compress(keys: np.ndarray) -> np.ndarray:
    """Relabel the (at most 64) used variables onto one word."""
    used = np.flatnonzero(_bit_frequencies(keys))
    out = np.zeros(len(keys), dtype=np.uint64)
    for pos, j in enumerate(used):
        bit = (keys[:, j >> 6] >> np.uint64(j & 63)) & _ONE
        out |= bit << np.uint64(pos)
    return out


def _expand_unit(m: np.ndarray, coef: np.ndarray, mag: np.ndarray, fixed: int) -> tuple[int, int]:
    """Count surviving subset terms of one-word masks; ``fixed`` bits are implied in every key."""
    deg = np.bitwise_count(m)
    all_k, all_c, all_a = [], [], []
    for d in np.unique(deg):
        sel = deg == d
        rem = m[sel].copy()
        subs = np.zeros((len(rem), 1), dtype=np.uint64)
        sign = np.ones((len(rem), 1))
        for _ in range(int(d)):
            low = rem & (~rem + _ONE)
            rem ^= low
            subs = np.concatenate([subs, subs | low[:, None]], axis=1)
            sign = np.concatenate([sign, -sign], axis=1)
        all_k.append(subs.reshape(-1))
        all_c.append((sign * coef[sel][:, None]).reshape(-1))
        all_a.append(np.repeat(mag[sel], 1 << int(d)))
    keys = np.concatenate(all_k)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.ones(len(keys), dtype=bool)
    starts[1:] = keys[1:] != keys[:-1]
    idx = np.flatnonzero(starts)
    c = np.add.reduceat(np.concatenate(all_c)[order], idx)
    a = np.add.reduceat(np.concatenate(all_a)[order], idx)
    keys = keys[idx]
    kept = np.abs(c) > CANCEL_TOL * a
    if fixed == 0:
        kept &= keys != 0  # constant offset
    if not kept.any():
        return 0, 0
    return int(kept.sum()), fixed + int(np.bitwise_count(keys[kept]).max())


def _exact_count(live: list[tuple[int, float]], words: int, chunk: int, budget: int) -> tuple[int, int]:
    """Exact number of non-constant spin terms and their maximum weight.

    The subset lattice is split on the most frequent variable v into subsets
    without v and subsets with v; both halves are disjoint, so counts add.
    Units small enough are expanded and aggregated in one vectorised pass.
    """
    keys = _to_words([m for m, _ in live], words)
    deg = np.array([m.bit_count() for m, _ in live])
    coef = np.array([c for _, c in live]) / np.exp2(deg)
    stack = [(keys, coef, np.abs(coef), 0)]
    count = max_w = 0
    while stack:
        if sum(len(u[1]) for u in stack) * 3 > budget:
            raise _Overflow
        keys, coef, mag, fixed = stack.pop()
        if not len(coef):
            continue
        size = float(np.exp2(np.bitwise_count(keys).sum(axis=1)).sum())
        freq = _bit_frequencies(keys)
        if size <= chunk and np.count_nonzero(freq) <= 64:
            n, w = _expand_unit(_compress(keys), coef, mag, fixed)
            count += n
            max_w = max(max_w, w)
            continue
        v = int(freq.argmax())
        word, bit = v >> 6, np.uint64(v & 63)
        has = ((keys[:, word] >> bit) & _ONE).astype(bool)
        cleared = keys.copy()
        cleared[:, word] &= ~(_ONE << bit)
        stack.append(_merge_rows(cleared, coef, mag) + (fixed,))
        stack.append((cleared[has], -coef[has], mag[has], fixed + 1))
    return count, max_w


def counting_mode(h: BinaryPolynomial | TermSource, memory_budget: int = DEFAULT_MEMORY_BUDGET,
                  max_chunk: int = 1 << 23) -> IsingSummary:
    """Resource counts from a replayable term stream without keeping the operator.

    Aggregation is exact while the working set stays within ``memory_budget``
    bytes; beyond that the result is the cancellation-free upper bound
    ``sum(2^deg - 1)`` and ``exact`` is False. The qubit count is exact in
    both cases.
    """
    source = _source(h)
    budget_entries = max(1, memory_budget // BYTES_PER_ENTRY)

    hubo: dict[int, float] = {}
    streamed = 0
    support = 0
    overflow_hubo = False
    for m, c in source():
        streamed += 1
        support |= m
        if not overflow_hubo:
            hubo[m] = hubo.get(m, 0.0) + c
            if len(hubo) > budget_entries:
                overflow_hubo = True
                hubo = {}
    qubits = support.bit_count()

    if not overflow_hubo:
        live = [(m, c) for m, c in hubo.items() if c != 0 and m]
        interactions = len(live)
        if not live:
            return IsingSummary.of(qubits, 0, 0, 0, True)
        words = max(1, (support.bit_length() + 63) // 64)
        try:
            count, max_w = _exact_count(live, words, min(max_chunk, budget_entries), budget_entries)
        except _Overflow:
            pass
        else:
            return IsingSummary.of(qubits, count, interactions, max_w, True)
        src = live
    else:
        interactions = streamed
        src = source()

    bound = 0
    max_w = 0
    for m, _ in src:
        d = m.bit_count()
        bound += (1 << d) - 1
        max_w = max(max_w, d)
    return IsingSummary.of(qubits, bound, interactions, max_w, False)
