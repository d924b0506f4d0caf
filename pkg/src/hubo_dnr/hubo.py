"""Sparse multilinear polynomials over binary variables and penalty builders.

Monomials are stored as integer bitmasks (bit i set = variable i present), so
multiplication is a bitwise OR and ``x * x == x`` holds by construction.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Sequence


class RegistryMismatch(ValueError):
    pass


class Variables:
    """Dense registry of binary variable names; ids are 0, 1, 2, ..."""

    def __init__(self, names: Iterable[str] = ()):
        self.names: list[str] = []
        self._ids: dict[str, int] = {}
        for n in names:
            self.add(n)

    def add(self, name: str) -> int:
        if name in self._ids:
            raise ValueError(f"duplicate variable {name!r}")
        self._ids[name] = len(self.names)
        self.names.append(name)
        return self._ids[name]

    def id(self, name: str) -> int:
        return self._ids[name]

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"Variables({len(self)})"


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        low = mask & -mask
        i = low.bit_length() - 1
        out.append(i)
        mask ^= low
    return tuple(out)


def canonical_key(mask: int) -> tuple[int, tuple[int, ...]]:
    """Order terms by degree, then lexicographically on their sorted indices."""
    return mask.bit_count(), indices_of(mask)


class BinaryPolynomial:
    """Real-coefficient multilinear polynomial; the constant term has mask 0."""

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Variables, terms: Mapping[int, float] | None = None):
        self.variables = variables
        self.terms: dict[int, float] = {m: c for m, c in (terms or {}).items() if c != 0}

    # construction
    @classmethod
    def constant(cls, variables: Variables, c: float) -> BinaryPolynomial:
        return cls(variables, {0: float(c)})

    @classmethod
    def var(cls, variables: Variables, i: int) -> BinaryPolynomial:
        return cls(variables, {1 << i: 1.0})

    @classmethod
    def monomial(cls, variables: Variables, indices: Iterable[int], c: float = 1.0) -> BinaryPolynomial:
        return cls(variables, {mask_of(indices): float(c)})

    def _check(self, other: BinaryPolynomial) -> None:
        if other.variables is not self.variables:
            raise RegistryMismatch("polynomials belong to different variable registries")

    def _coerce(self, other) -> BinaryPolynomial:
        if isinstance(other, (int, float)):
            return BinaryPolynomial.constant(self.variables, other)
        self._check(other)
        return other

    # arithmetic
    def __add__(self, other) -> BinaryPolynomial:
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0.0) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        return BinaryPolynomial(self.variables, out)

    __radd__ = __add__

    def __neg__(self) -> BinaryPolynomial:
        return self.scale(-1.0)

    def __sub__(self, other) -> BinaryPolynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> BinaryPolynomial:
        return self._coerce(other) - self

    def __mul__(self, other) -> BinaryPolynomial:
        if isinstance(other, (int, float)):
            return self.scale(other)
        self._check(other)
        out: dict[int, float] = {}
        get = out.get
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = ma | mb
                out[m] = get(m, 0.0) + ca * cb
        return BinaryPolynomial(self.variables, out)

    __rmul__ = __mul__

    def square(self) -> BinaryPolynomial:
        """``self * self`` exploiting symmetry of the cross terms."""
        items = list(self.terms.items())
        out: dict[int, float] = {}
        get = out.get
        for i, (ma, ca) in enumerate(items):
            out[ma] = get(ma, 0.0) + ca * ca
            for mb, cb in items[i + 1:]:
                m = ma | mb
                out[m] = get(m, 0.0) + 2.0 * ca * cb
        return BinaryPolynomial(self.variables, out)

    def scale(self, c: float) -> BinaryPolynomial:
        if c == 0:
            return BinaryPolynomial(self.variables)
        return BinaryPolynomial(self.variables, {m: v * c for m, v in self.terms.items()})

    def iadd_scaled(self, other: BinaryPolynomial, c: float = 1.0) -> BinaryPolynomial:
        """In-place ``self += c * other``; only for polynomials still under construction."""
        self._check(other)
        t = self.terms
        for m, v in other.terms.items():
            s = t.get(m, 0.0) + c * v
            if s == 0:
                t.pop(m, None)
            else:
                t[m] = s
        return self

    # queries
    def evaluate(self, assignment: Sequence[int] | Mapping[int, int] | int) -> float:
        """Value at a 0/1 point given as a sequence, an ``{index: bit}`` map or a bitmask."""
        if isinstance(assignment, int):
            ones = assignment
        elif isinstance(assignment, Mapping):
            ones = mask_of(i for i, b in assignment.items() if b)
        else:
            ones = mask_of(i for i, b in enumerate(assignment) if b)
        return sum(c for m, c in self.sorted_terms() if m & ones == m)

    @property
    def constant_term(self) -> float:
        return self.terms.get(0, 0.0)

    def degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=0)

    def term_count(self) -> int:
        """Number of non-constant terms."""
        return len(self.terms) - (0 in self.terms)

    def support(self) -> set[int]:
        acc = 0
        for m in self.terms:
            acc |= m
        return set(indices_of(acc))

    def degree_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for m in self.terms:
            if m:
                d = m.bit_count()
                hist[d] = hist.get(d, 0) + 1
        return dict(sorted(hist.items()))

    def sorted_terms(self) -> list[tuple[int, float]]:
        return sorted(self.terms.items(), key=lambda t: canonical_key(t[0]))

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], float]]:
        for m, c in self.sorted_terms():
            yield indices_of(m), c

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryPolynomial):
            return NotImplemented
        return self.variables is other.variables and self.terms == other.terms

    def close_to(self, other: BinaryPolynomial, rel: float = 1e-9) -> bool:
        self._check(other)
        if self.terms.keys() != other.terms.keys():
            return False
        return all(abs(c - other.terms[m]) <= rel * max(abs(c), abs(other.terms[m]))
                   for m, c in self.terms.items())

    def __repr__(self) -> str:
        parts = []
        for idx, c in self:
            name = "*".join(self.variables.names[i] for i in idx)
            parts.append(f"{c:+g}" + (f"*{name}" if name else ""))
        return " ".join(parts) or "0"

    def serialize(self) -> str:
        """One ``coefficient<TAB>i1,i2,...`` line per term, canonical order, constant first."""
        lines = []
        if 0 not in self.terms:
            lines.append("0.0\t")
        for idx, c in self:
            lines.append(f"{c!r}\t{','.join(map(str, idx))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, variables: Variables, text: str) -> BinaryPolynomial:
        terms = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            coeff, _, idx = line.partition("\t")
            m = mask_of(int(i) for i in idx.split(",") if i)
            terms[m] = terms.get(m, 0.0) + float(coeff)
        return cls(variables, terms)


def add_all(variables: Variables, polys: Iterable[BinaryPolynomial]) -> BinaryPolynomial:
    acc = BinaryPolynomial(variables)
    for p in polys:
        acc.iadd_scaled(p)
    return acc


# -- penalty constructors ------------------------------------------------------

def _distinct(ids: Sequence[int], what: str) -> None:
    if not ids:
        raise ValueError(f"{what}: empty variable list")
    if len(set(ids)) != len(ids):
        raise ValueError(f"{what}: repeated variable")


def linear_sum_penalty(variables: Variables, ids: Sequence[int]) -> BinaryPolynomial:
    """``(sum x_i - 1)^2`` expanded: zero iff exactly one variable is set."""
    _distinct(ids, "linear_sum_penalty")
    terms = {0: 1.0}
    for i in ids:
        terms[1 << i] = -1.0
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            terms[(1 << ids[a]) | (1 << ids[b])] = 2.0
    return BinaryPolynomial(variables, terms)


def interaction_penalty(variables: Variables, ids: Sequence[int]) -> BinaryPolynomial:
    """``prod x_i``: one when every variable is set."""
    _distinct(ids, "interaction_penalty")
    return BinaryPolynomial(variables, {mask_of(ids): 1.0})


def implies_penalty(variables: Variables, antecedent: Sequence[int], consequent: int,
                    negated: bool = False) -> BinaryPolynomial:
    """Penalty for ``prod(antecedent) => x`` (or ``=> not x`` when ``negated``).

    ``A - A*x`` for the positive form and ``A*x`` for the negated one, where
    ``A`` is the product of the antecedent variables.
    """
    _distinct(antecedent, "implies_penalty")
    if consequent in antecedent:
        raise ValueError("implies_penalty: consequent appears in the antecedent")
    a = mask_of(antecedent)
    both = a | (1 << consequent)
    if negated:
        return BinaryPolynomial(variables, {both: 1.0})
    return BinaryPolynomial(variables, {a: 1.0, both: -1.0})
