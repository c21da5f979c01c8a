"""Differential calculi on finite sets presented by digraphs.

The universal calculus on an N point set has one basis form per path with
distinct consecutive vertices; a path (i1, ..., ir) is the (r-1)-form built
by concatenating the edge forms along it.  Choosing a digraph deletes some
edge forms, which restricts the admissible paths and imposes linear
relations generated by the differentials of the deleted edges.  All quotient
linear algebra runs over exact rationals, so dimension counts and normal
forms carry no floating point ambiguity.

Vertices are 0-based integers throughout; labels are I/O metadata.
Coefficients may be int, Fraction, float or complex; operations stay exact
whenever the inputs are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError

DEFAULT_DEGREE_CAP = 6

Path = tuple[int, ...]


@dataclass(frozen=True)
class FiniteSet:
    """A finite base set; labels are arbitrary distinct identifiers."""

    labels: tuple

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValidationError("finite set needs at least one point")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("point labels must be distinct")

    @classmethod
    def of_size(cls, n: int) -> "FiniteSet":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def index_of(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown point label {label!r}") from None


def complete_arrows(n: int) -> frozenset[tuple[int, int]]:
    return frozenset((i, j) for i in range(n) for j in range(n) if i != j)


@dataclass(frozen=True)
class Digraph:
    """A digraph on a finite set: ordered arrow pairs, no self loops."""

    base: FiniteSet
    arrows: frozenset

    def __post_init__(self):
        n = self.base.n
        for a in self.arrows:
            if not (isinstance(a, tuple) and len(a) == 2):
                raise ValidationError(f"arrow {a!r} is not a pair")
            i, j = a
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"arrow {a!r} out of range for {n} points")
            if i == j:
                raise ValidationError(f"self loop {a!r} not allowed")

    @classmethod
    def from_arrows(cls, n: int, arrows: Iterable[tuple[int, int]]) -> "Digraph":
        return cls(FiniteSet.of_size(n), frozenset(tuple(a) for a in arrows))

    @classmethod
    def complete(cls, base: FiniteSet) -> "Digraph":
        return cls(base, complete_arrows(base.n))

    @property
    def n(self) -> int:
        return self.base.n


def _check_path(path) -> Path:
    if not isinstance(path, tuple) or not path:
        raise ValidationError(f"path {path!r} must be a nonempty tuple of vertices")
    for a, b in zip(path, path[1:]):
        if a == b:
            raise ValidationError(f"path {path!r} repeats consecutive vertex {a}")
    return path


class FormExpr:
    """Linear combination of basic path forms, keyed by vertex tuples.

    Zero coefficients are never stored.  The expression is homogeneous when
    all stored paths share a length; `degree` is then that common degree.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Path, complex] | None = None):
        data = {}
        for path, c in (terms or {}).items():
            if c == 0:
                continue
            data[_check_path(path)] = c
        self.terms = data

    @classmethod
    def zero(cls) -> "FormExpr":
        return cls()

    @classmethod
    def from_path(cls, path: Sequence[int], coeff=1) -> "FormExpr":
        return cls({tuple(path): coeff})

    @property
    def degree(self):
        """Common degree of all terms, or None when empty or mixed."""
        degs = {len(p) - 1 for p in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def coefficient(self, path: Sequence[int]):
        return self.terms.get(tuple(path), 0)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, FormExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        if not isinstance(other, FormExpr):
            return NotImplemented
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0) + c
        return FormExpr(out)

    def __neg__(self):
        return FormExpr({p: -c for p, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, FormExpr):
            return NotImplemented
        return self + (-other)

    def __rmul__(self, scalar):
        return FormExpr({p: scalar * c for p, c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "FormExpr(0)"
        bits = []
        for p in sorted(self.terms, key=lambda q: (len(q), q)):
            bits.append(f"{self.terms[p]!r}*e{list(p)}")
        return "FormExpr(" + " + ".join(bits) + ")"


def _rref(rows: list[dict]) -> dict:
    """Reduced row echelon form of sparse rows over the rationals.

    Rows map paths to coefficients; columns are ordered lexicographically by
    path.  Returns {pivot_path: row_dict} with unit pivots and pivot columns
    cleared from every other row.
    """
    pivots: dict[Path, dict] = {}
    for raw in rows:
        row = {p: Fraction(c) for p, c in raw.items() if c}
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                inv = Fraction(1) / row[lead]
                pivots[lead] = {p: c * inv for p, c in row.items()}
                break
            c = row.pop(lead)
            for p, v in piv.items():
                if p == lead:
                    continue
                nv = row.get(p, Fraction(0)) - c * v
                if nv:
                    row[p] = nv
                else:
                    row.pop(p, None)
    # clear pivot columns above, from the largest pivot down
    for lead in sorted(pivots, reverse=True):
        prow = pivots[lead]
        for lead2, row2 in pivots.items():
            if lead2 == lead:
                continue
            c = row2.get(lead)
            if not c:
                continue
            del row2[lead]
            for p, v in prow.items():
                if p == lead:
                    continue
                nv = row2.get(p, Fraction(0)) - c * v
                if nv:
                    row2[p] = nv
                else:
                    row2.pop(p, None)
    return pivots


class ReducedCalculus:
    """A digraph calculus: admissible path bases and quotient relations.

    Bases and relations are computed eagerly degree by degree, stopping at
    the first degree whose quotient dimension vanishes (`max_degree`) or at
    `degree_cap`, whichever comes first.  Past the cap the calculus reports
    itself truncated rather than guessing.
    """

    def __init__(self, graph: Digraph, degree_cap: int = DEFAULT_DEGREE_CAP):
        if degree_cap < 1:
            raise ValidationError("degree_cap must be at least 1")
        self.graph = graph
        self.degree_cap = degree_cap
        self._arrows = frozenset(graph.arrows)
        self._deleted = complete_arrows(graph.n) - self._arrows
        self.basis_by_degree: list[list[Path]] = []
        self.relations_by_degree: list[list[FormExpr]] = []
        self._pivots_by_degree: list[dict] = []
        self.max_degree: int | None = None
        self.truncated = False
        self._build()

    # -- construction -------------------------------------------------

    def _build(self):
        n = self.graph.n
        out = {i: sorted(j for (i2, j) in self._arrows if i2 == i) for i in range(n)}
        self.basis_by_degree.append([(i,) for i in range(n)])
        self.relations_by_degree.append([])
        self._pivots_by_degree.append({})
        for r in range(1, self.degree_cap + 1):
            prev = self.basis_by_degree[r - 1]
            cur = [p + (j,) for p in prev for j in out[p[-1]]]
            self.basis_by_degree.append(cur)
            pivots = self._relation_pivots(r) if r >= 2 and self._deleted else {}
            self._pivots_by_degree.append(pivots)
            rels = [
                FormExpr(pivots[lead]) for lead in sorted(pivots)
            ]
            self.relations_by_degree.append(rels)
            if len(cur) - len(rels) == 0:
                self.max_degree = r
                return
        self.truncated = True

    def _relation_pivots(self, r: int) -> dict:
        """Span of the degree-r differential ideal, seen on admissible paths.

        Every generator a * d(e_ij) * b of the ideal with (i, j) deleted
        projects onto admissible paths as a sum over two-arrow detours
        i -> k -> j spliced between an admissible prefix ending at i and an
        admissible suffix starting at j; all other ideal generators project
        to zero because their paths traverse the deleted arrow itself.
        """
        rows = []
        for (i, j) in sorted(self._deleted):
            mids = [
                k
                for k in range(self.graph.n)
                if (i, k) in self._arrows and (k, j) in self._arrows
            ]
            if not mids:
                continue
            for p in range(r - 1):
                q = r - 2 - p
                prefixes = [P for P in self.basis_by_degree[p] if P[-1] == i]
                suffixes = [Q for Q in self.basis_by_degree[q] if Q[0] == j]
                for P in prefixes:
                    for Q in suffixes:
                        rows.append({P + (k,) + Q: 1 for k in mids})
        return _rref(rows)

    # -- inspection ---------------------------------------------------

    def dimension(self, r: int) -> int:
        if r < len(self.basis_by_degree):
            return len(self.basis_by_degree[r]) - len(self.relations_by_degree[r])
        if self.max_degree is not None:
            return 0
        raise ValidationError(
            f"degree {r} beyond cap {self.degree_cap}; calculus is truncated"
        )

    def dimensions(self) -> list[int]:
        return [self.dimension(r) for r in range(len(self.basis_by_degree))]

    def basis(self, r: int) -> list[Path]:
        if r < len(self.basis_by_degree):
            return list(self.basis_by_degree[r])
        if self.max_degree is not None:
            return []
        raise ValidationError(
            f"degree {r} beyond cap {self.degree_cap}; calculus is truncated"
        )

    def relations(self, r: int) -> list[FormExpr]:
        if r < len(self.relations_by_degree):
            return list(self.relations_by_degree[r])
        return []

    @property
    def is_universal(self) -> bool:
        return not self._deleted

    def is_admissible_path(self, path: Path) -> bool:
        n = self.graph.n
        if not all(0 <= v < n for v in path):
            return False
        return all((a, b) in self._arrows for a, b in zip(path, path[1:]))

    def unit(self) -> FormExpr:
        return FormExpr({(i,): 1 for i in range(self.graph.n)})

    def _require_valid(self, expr: FormExpr):
        for p in expr.terms:
            if not self.is_admissible_path(p):
                raise ValidationError(f"path {p} is not admissible in this calculus")
            if len(p) - 1 >= len(self.basis_by_degree) and self.max_degree is None:
                raise ValidationError(
                    f"degree {len(p) - 1} beyond cap {self.degree_cap}"
                )

    # -- algebra ------------------------------------------------------

    def _normalized(self, raw: dict) -> FormExpr:
        """Project onto admissible paths and reduce modulo the relations."""
        out = {}
        for path, c in raw.items():
            if c == 0 or not self.is_admissible_path(path):
                continue
            out[path] = c
        degs = {len(p) - 1 for p in out}
        for r in degs:
            if r >= len(self._pivots_by_degree):
                if self.max_degree is not None:
                    # everything at and beyond max_degree is zero
                    for p in [p for p in out if len(p) - 1 == r]:
                        del out[p]
                    continue
                raise ValidationError(
                    f"result degree {r} beyond cap {self.degree_cap}; "
                    "raise degree_cap to normalize"
                )
            for lead, row in self._pivots_by_degree[r].items():
                c = out.get(lead)
                if not c:
                    continue
                del out[lead]
                for p, v in row.items():
                    if p == lead:
                        continue
                    nv = out.get(p, 0) - c * v
                    if nv:
                        out[p] = nv
                    else:
                        out.pop(p, None)
        return FormExpr(out)

    def multiply(self, a: FormExpr, b: FormExpr) -> FormExpr:
        """Concatenation product: e_{..i} e_{j..} = delta_ij e_{..i j..}."""
        self._require_valid(a)
        self._require_valid(b)
        out = {}
        for P, ca in a.terms.items():
            for Q, cb in b.terms.items():
                if P[-1] != Q[0]:
                    continue
                path = P + Q[1:]
                out[path] = out.get(path, 0) + ca * cb
        return self._normalized(out)

    def differential(self, a: FormExpr) -> FormExpr:
        """Insert every vertex at every slot with alternating sign."""
        self._require_valid(a)
        n = self.graph.n
        out = {}
        for P, c in a.terms.items():
            for pos in range(len(P) + 1):
                sign = 1 if pos % 2 == 0 else -1
                left = P[pos - 1] if pos > 0 else None
                right = P[pos] if pos < len(P) else None
                for j in range(n):
                    if left is not None and (left, j) not in self._arrows:
                        continue
                    if right is not None and (j, right) not in self._arrows:
                        continue
                    if left is None and right is None:  # unreachable: paths nonempty
                        continue
                    path = P[:pos] + (j,) + P[pos:]
                    out[path] = out.get(path, 0) + sign * c
        return self._normalized(out)

    def function_differential(self, values: Sequence) -> FormExpr:
        """df as a 1-form: sum over arrows of [f(j) - f(i)] e_ij."""
        if len(values) != self.graph.n:
            raise ValidationError(
                f"need one value per point, got {len(values)} for {self.graph.n}"
            )
        out = {}
        for (i, j) in sorted(self._arrows):
            c = values[j] - values[i]
            if c != 0:
                out[(i, j)] = c
        return FormExpr(out)


def build_universal(
    base: FiniteSet | int, degree_cap: int = DEFAULT_DEGREE_CAP
) -> ReducedCalculus:
    """Universal differential calculus: the complete digraph, no relations."""
    if isinstance(base, int):
        base = FiniteSet.of_size(base)
    return ReducedCalculus(Digraph.complete(base), degree_cap=degree_cap)


def reduce(
    universal: ReducedCalculus,
    kept_arrows: Iterable[tuple[int, int]],
    degree_cap: int | None = None,
) -> ReducedCalculus:
    """Quotient calculus keeping only the given arrows of the complete graph."""
    kept = frozenset(tuple(a) for a in kept_arrows)
    extra = kept - complete_arrows(universal.graph.n)
    if extra:
        raise ValidationError(f"arrows {sorted(extra)} not in the complete digraph")
    cap = universal.degree_cap if degree_cap is None else degree_cap
    return ReducedCalculus(
        Digraph(universal.graph.base, kept), degree_cap=cap
    )


def calculus_for(graph: Digraph, degree_cap: int = DEFAULT_DEGREE_CAP) -> ReducedCalculus:
    return ReducedCalculus(graph, degree_cap=degree_cap)


def multiply(a: FormExpr, b: FormExpr, calc: ReducedCalculus) -> FormExpr:
    return calc.multiply(a, b)


def differential(a: FormExpr, calc: ReducedCalculus) -> FormExpr:
    return calc.differential(a)


def function_differential(values: Sequence, calc: ReducedCalculus) -> FormExpr:
    return calc.function_differential(values)
