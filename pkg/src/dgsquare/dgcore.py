"""Nonpositive DG rings over Q, tabulated per bidegree.

A DG ring here is a graded ring concentrated in cohomological degrees
<= 0 (degree +1 for cylinders) together with a square-zero degree +1
derivation.  Every ring carries an auxiliary nonnegative *weight*
grading that the differential and all homomorphisms preserve; weights
make each bidegree finite-dimensional so the whole theory reduces to
exact linear algebra.

Two multiplication flavors are supported for presented rings:
``"sc"`` (strongly commutative: signed commutativity and odd squares
vanish) and ``"nc"`` (free associative over a central ground ring).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .exactlin import (
    Bidegree, BigradedMap, BigradedSpace, ChainMap, Complex, Matrix,
    NotAComplexError, PreconditionError, Q, StructuralError, WindowError,
    from_columns, kernel_basis, mat_is_zero, rref, solve, unit_vector, zeros,
)


@dataclass(frozen=True)
class Window:
    """Tabulation window: coh degrees in [dlo, dhi], weights in [0, wmax]."""

    dlo: int
    dhi: int
    wmax: int

    def contains(self, bd: Bidegree) -> bool:
        return self.dlo <= bd[0] <= self.dhi and 0 <= bd[1] <= self.wmax


def koszul_sign(i: int, j: int) -> Fraction:
    return Q(-1) if (i % 2) and (j % 2) else Q(1)


# ---------------------------------------------------------------------------
# ground rings: weighted commutative polynomial quotients in degree 0


class GroundRing:
    """Q[x_1..x_n]/(relations) with positive integer weights.

    Relations must be weight-homogeneous polynomials.  Per weight the
    ring is tabulated as (monomial basis of the quotient, reduction
    data); variables live in cohomological degree 0.
    """

    def __init__(self, variables: list[tuple[str, int]],
                 relations: Optional[list[dict[tuple, Fraction]]] = None,
                 wmax: int = 8, name: str = ""):
        self.vars = list(variables)
        for nm, w in self.vars:
            if w < 1:
                raise PreconditionError(f"variable {nm} needs positive weight")
        self.relations = [dict(r) for r in (relations or [])]
        self.wmax = wmax
        self.name = name or "Q[" + ",".join(n for n, _ in self.vars) + "]"
        for r in self.relations:
            ws = {self.mono_weight(e) for e in r}
            if len(ws) > 1:
                raise PreconditionError("relation not weight-homogeneous")
        self._tab: dict[int, tuple] = {}

    def mono_weight(self, exp: tuple) -> int:
        return sum(e * w for e, (_, w) in zip(exp, self.vars))

    def monomials(self, w: int) -> list[tuple]:
        """All exponent tuples of weight w, ordered lexicographically."""
        nv = len(self.vars)

        def rec(i, rem):
            if i == nv:
                if rem == 0:
                    yield ()
                return
            wt = self.vars[i][1]
            for e in range(rem // wt + 1):
                for tail in rec(i + 1, rem - e * wt):
                    yield (e,) + tail

        return sorted(rec(0, w))

    def _tabulate(self, w: int):
        if w in self._tab:
            return self._tab[w]
        mons = self.monomials(w)
        idx = {m: i for i, m in enumerate(mons)}
        rows = []
        for r in self.relations:
            rw = self.mono_weight(next(iter(r)))
            if rw > w:
                continue
            for m in self.monomials(w - rw):
                row = [Q(0)] * len(mons)
                for e, c in r.items():
                    tot = tuple(a + b for a, b in zip(m, e))
                    row[idx[tot]] += c
                rows.append(row)
        red, piv = rref(rows) if rows else ([], [])
        red = red[:len(piv)]
        basis = tuple(mons[i] for i in range(len(mons)) if i not in piv)
        self._tab[w] = (mons, idx, red, piv, basis)
        return self._tab[w]

    def basis(self, w: int) -> tuple:
        if w < 0 or w > self.wmax:
            return ()
        return self._tabulate(w)[4]

    def reduce(self, poly: dict[tuple, Fraction], w: int) -> dict[tuple, Fraction]:
        """Reduce a weight-w polynomial to quotient-basis coordinates."""
        mons, idx, red, piv, basis = self._tabulate(w)
        v = [Q(0)] * len(mons)
        for e, c in poly.items():
            v[idx[e]] += c
        for row, p in zip(red, piv):
            c = v[p]
            if c:
                for j in range(len(mons)):
                    if row[j]:
                        v[j] -= c * row[j]
        return {mons[j]: v[j] for j in range(len(mons)) if v[j]}

    def mul(self, e1: tuple, e2: tuple) -> dict[tuple, Fraction]:
        w = self.mono_weight(e1) + self.mono_weight(e2)
        if w > self.wmax:
            raise WindowError(f"ground product weight {w} exceeds {self.wmax}")
        return self.reduce({tuple(a + b for a, b in zip(e1, e2)): Q(1)}, w)

    def unit_label(self) -> tuple:
        return (0,) * len(self.vars)

    def key(self):
        return ("ground", tuple(self.vars),
                tuple(tuple(sorted(r.items())) for r in self.relations))


def rational_ground(wmax: int = 8) -> GroundRing:
    return GroundRing([], [], wmax=wmax, name="Q")


# ---------------------------------------------------------------------------
# elements


class El:
    """An element of a tabulated DG ring (or DG module).

    Coordinates are kept per (bidegree, basis label); elements may be
    inhomogeneous.  Arithmetic never leaves exact rationals.
    """

    __slots__ = ("carrier", "coords")

    def __init__(self, carrier, coords: Optional[dict] = None):
        self.carrier = carrier
        self.coords = {k: v for k, v in (coords or {}).items() if v}

    def __add__(self, other: "El") -> "El":
        if other.carrier is not self.carrier:
            raise StructuralError("elements of different carriers")
        out = dict(self.coords)
        for k, v in other.coords.items():
            out[k] = out.get(k, Q(0)) + v
        return El(self.carrier, out)

    def __sub__(self, other: "El") -> "El":
        return self + other.scale(Q(-1))

    def __neg__(self) -> "El":
        return self.scale(Q(-1))

    def scale(self, c: Fraction) -> "El":
        return El(self.carrier, {k: c * v for k, v in self.coords.items()})

    def __mul__(self, other: "El") -> "El":
        if other.carrier is not self.carrier:
            # ring element acting on a module element
            act = getattr(other.carrier, "act_el", None)
            if act is not None and getattr(other.carrier, "ring", None) is self.carrier:
                return act(self, other)
            raise StructuralError("product of elements of unrelated carriers")
        alg = self.carrier
        out: dict = {}
        for (bd1, l1), c1 in self.coords.items():
            for (bd2, l2), c2 in other.coords.items():
                prod = alg.mul_labels(bd1, l1, bd2, l2)
                for k, v in prod.coords.items():
                    out[k] = out.get(k, Q(0)) + c1 * c2 * v
        return El(alg, out)

    def d(self) -> "El":
        out: dict = {}
        for (bd, l), c in self.coords.items():
            dl = self.carrier.diff_label(bd, l)
            for k, v in dl.coords.items():
                out[k] = out.get(k, Q(0)) + c * v
        return El(self.carrier, out)

    def is_zero(self) -> bool:
        return not self.coords

    def is_homogeneous(self) -> Optional[Bidegree]:
        bds = {bd for (bd, _) in self.coords}
        if len(bds) == 1:
            return next(iter(bds))
        return None

    def to_dictvec(self) -> dict:
        """{(bd, index): coeff} form for the linear algebra layer."""
        out = {}
        for (bd, l), c in self.coords.items():
            out[(bd, self.carrier.basis(bd).index(l))] = c
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, El) and other.carrier is self.carrier \
            and other.coords == self.coords

    def __repr__(self):
        if not self.coords:
            return "0"
        bits = []
        for (bd, l), c in sorted(self.coords.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            bits.append(f"{c}*{l}@{bd}")
        return " + ".join(bits)


def el_from_dictvec(carrier, vec: dict) -> El:
    coords = {}
    for (bd, i), c in vec.items():
        coords[(bd, carrier.basis(bd)[i])] = c
    return El(carrier, coords)


# ---------------------------------------------------------------------------
# tabulated DG rings


class DgAlgebra:
    """Base: a DG ring tabulated on a window, with cached structure maps."""

    sc: bool = False
    window: Window

    def __init__(self):
        self._basis_cache: dict[Bidegree, tuple] = {}
        self._mul_cache: dict = {}
        self._diff_cache: dict = {}
        self._space: Optional[BigradedSpace] = None
        self._complex: Optional[Complex] = None

    # subclasses implement _basis / _mul / _diff
    def _basis(self, bd: Bidegree) -> tuple:
        raise NotImplementedError

    def _mul(self, bd1, l1, bd2, l2) -> El:
        raise NotImplementedError

    def _diff(self, bd, l) -> El:
        raise NotImplementedError

    def basis(self, bd: Bidegree) -> tuple:
        if bd not in self._basis_cache:
            self._basis_cache[bd] = self._basis(bd) if self.window.contains(bd) else ()
        return self._basis_cache[bd]

    def dim(self, bd: Bidegree) -> int:
        return len(self.basis(bd))

    def bidegrees(self) -> list[Bidegree]:
        out = []
        for k in range(self.window.dlo, self.window.dhi + 1):
            for w in range(0, self.window.wmax + 1):
                if self.dim((k, w)):
                    out.append((k, w))
        return out

    def mul_labels(self, bd1, l1, bd2, l2) -> El:
        key = (bd1, l1, bd2, l2)
        if key not in self._mul_cache:
            bd = (bd1[0] + bd2[0], bd1[1] + bd2[1])
            if bd[1] > self.window.wmax or bd[0] < self.window.dlo:
                raise WindowError(f"product escapes window at {bd}")
            self._mul_cache[key] = self._mul(bd1, l1, bd2, l2)
        return self._mul_cache[key]

    def diff_label(self, bd, l) -> El:
        key = (bd, l)
        if key not in self._diff_cache:
            self._diff_cache[key] = self._diff(bd, l)
        return self._diff_cache[key]

    def unit(self) -> El:
        raise NotImplementedError

    def zero(self) -> El:
        return El(self, {})

    def element(self, bd: Bidegree, label, c: Fraction = Q(1)) -> El:
        if label not in self.basis(bd):
            raise StructuralError(f"no basis label {label!r} at {bd}")
        return El(self, {(bd, label): c})

    def space(self) -> BigradedSpace:
        if self._space is None:
            labels = {}
            for bd in self.bidegrees():
                labels[bd] = self.basis(bd)
            self._space = BigradedSpace(labels)
        return self._space

    def d_map(self) -> BigradedMap:
        sp = self.space()
        d = BigradedMap(sp, sp, shift=1)
        for bd in self.bidegrees():
            tb = (bd[0] + 1, bd[1])
            cols = []
            n = sp.dim(tb)
            for l in self.basis(bd):
                dl = self.diff_label(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in dl.coords.items():
                    if b2 != tb:
                        raise StructuralError("differential not of shift (+1,0)")
                    col[sp.index(tb, l2)] = c
                cols.append(col)
            d.set_block(bd, from_columns(cols, n))
        return d

    def complex(self) -> Complex:
        if self._complex is None:
            self._complex = Complex(self.space(), self.d_map())
        return self._complex

    # --- structure checks, used by the verification suite -----------------

    def check_d2(self, bds: Optional[Iterable[Bidegree]] = None) -> None:
        for bd in (bds or self.bidegrees()):
            for l in self.basis(bd):
                dd = self.diff_label(bd, l)
                dd = dd.d()
                if not dd.is_zero():
                    raise NotAComplexError(f"d(d({l!r})) != 0 at {bd}")

    def check_leibniz(self, bds=None) -> None:
        bds = list(bds or self.bidegrees())
        for bd1 in bds:
            for bd2 in bds:
                if bd1[1] + bd2[1] > self.window.wmax:
                    continue
                if bd1[0] + bd2[0] < self.window.dlo:
                    continue
                for l1 in self.basis(bd1):
                    a = self.element(bd1, l1)
                    da = a.d()
                    for l2 in self.basis(bd2):
                        b = self.element(bd2, l2)
                        lhs = (a * b).d()
                        # d(ab) = d(a) b + (-1)^{|a|} a d(b)
                        rhs = da * b + (a * b.d()).scale(
                            Q(-1) if bd1[0] % 2 else Q(1))
                        if not (lhs - rhs).is_zero():
                            raise StructuralError(
                                f"Leibniz fails on {l1!r}*{l2!r} at {bd1},{bd2}")

    def check_associative(self, bds=None) -> None:
        bds = list(bds or self.bidegrees())
        for bd1, bd2, bd3 in itertools.product(bds, repeat=3):
            if bd1[1] + bd2[1] + bd3[1] > self.window.wmax:
                continue
            if bd1[0] + bd2[0] + bd3[0] < self.window.dlo:
                continue
            for l1 in self.basis(bd1):
                a = self.element(bd1, l1)
                for l2 in self.basis(bd2):
                    b = self.element(bd2, l2)
                    ab = a * b
                    for l3 in self.basis(bd3):
                        c = self.element(bd3, l3)
                        if not ((ab * c) - (a * (b * c))).is_zero():
                            raise StructuralError(
                                f"associativity fails on {l1!r},{l2!r},{l3!r}")

    def check_sign_laws(self, bds=None) -> None:
        """Signed commutativity and odd squares, for sc rings."""
        if not self.sc:
            return
        bds = list(bds or self.bidegrees())
        for bd1 in bds:
            for bd2 in bds:
                if bd1[1] + bd2[1] > self.window.wmax:
                    continue
                if bd1[0] + bd2[0] < self.window.dlo:
                    continue
                for l1 in self.basis(bd1):
                    a = self.element(bd1, l1)
                    if bd1[0] % 2 and bd1[1] * 2 <= self.window.wmax \
                            and bd1[0] * 2 >= self.window.dlo:
                        if not (a * a).is_zero():
                            raise StructuralError(f"odd square {l1!r}^2 != 0")
                    for l2 in self.basis(bd2):
                        b = self.element(bd2, l2)
                        if not (a * b - (b * a).scale(
                                koszul_sign(bd1[0], bd2[0]))).is_zero():
                            raise StructuralError(
                                f"commutativity fails on {l1!r},{l2!r}")

    def key(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# presented semi-free rings


@dataclass(frozen=True)
class Gen:
    name: str
    deg: int
    wt: int

    def __post_init__(self):
        if self.deg > 0:
            raise PreconditionError(f"generator {self.name}: degree must be <= 0")
        if self.wt < 1:
            raise PreconditionError(f"generator {self.name}: weight must be >= 1")


def sort_word_sc(word: tuple[int, ...], degs: list[int]) -> tuple[Optional[tuple], Fraction]:
    """Normal form of a generator word under signed commutativity.

    Sorts indices ascending by insertion, tracking the Koszul sign;
    returns (None, 0) when an odd generator repeats.
    """
    w = list(word)
    sign = Q(1)
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            sign *= koszul_sign(degs[w[j - 1]], degs[w[j]])
            w[j - 1], w[j] = w[j], w[j - 1]
            j -= 1
    for a, b in zip(w, w[1:]):
        if a == b and degs[a] % 2:
            return None, Q(0)
    return tuple(w), sign


class SemifreeAlgebra(DgAlgebra):
    """Semi-free extension of a ground ring by generators in degrees <= -1.

    Basis labels are pairs ``(ground monomial exponents, generator
    word)``; for the ``"sc"`` flavor words are sorted multisets with odd
    generators squarefree, for ``"nc"`` arbitrary sequences.  Generator
    differentials are elements of the algebra itself (set after
    construction; unset means zero) and extend by the graded Leibniz
    rule.
    """

    def __init__(self, ground: GroundRing, gens: list[Gen], flavor: str,
                 window: Window, name: str = ""):
        super().__init__()
        if flavor not in ("sc", "nc"):
            raise PreconditionError("flavor must be 'sc' or 'nc'")
        self.ground = ground
        self.gens = list(gens)
        self.flavor = flavor
        self.sc = flavor == "sc"
        self.window = window
        self.name = name or f"{ground.name}<{','.join(g.name for g in gens)}>"
        if len({g.name for g in gens}) != len(gens):
            raise PreconditionError("duplicate generator names")
        self.gen_index = {g.name: i for i, g in enumerate(self.gens)}
        self._gen_diffs: dict[int, El] = {}
        self._word_cache: dict = {}

    # --- construction ------------------------------------------------------

    def set_gen_diff(self, name: str, value: El) -> None:
        if value.carrier is not self:
            raise StructuralError("differential value lives in a different ring")
        i = self.gen_index[name]
        g = self.gens[i]
        hom = value.is_homogeneous()
        if not value.is_zero() and hom != (g.deg + 1, g.wt):
            raise StructuralError(
                f"d({name}) must be homogeneous of bidegree {(g.deg + 1, g.wt)}")
        self._gen_diffs[i] = value
        self._diff_cache.clear()
        self._complex = None

    def gen_diff(self, i: int) -> El:
        return self._gen_diffs.get(i, self.zero())

    def gen_el(self, name: str) -> El:
        i = self.gen_index[name]
        g = self.gens[i]
        return El(self, {(((g.deg, g.wt)), (self.ground.unit_label(), (i,))): Q(1)})

    def ground_el(self, poly: dict[tuple, Fraction], w: int) -> El:
        red = self.ground.reduce(poly, w)
        return El(self, {((0, w), (e, ())): c for e, c in red.items()})

    def var_el(self, name: str) -> El:
        for j, (nm, w) in enumerate(self.ground.vars):
            if nm == name:
                exp = tuple(1 if k == j else 0 for k in range(len(self.ground.vars)))
                return self.ground_el({exp: Q(1)}, w)
        raise StructuralError(f"no ground variable {name!r}")

    def unit(self) -> El:
        return El(self, {((0, 0), (self.ground.unit_label(), ())): Q(1)})

    def validate(self) -> None:
        """d of every generator is a cocycle of the right bidegree."""
        for i, g in enumerate(self.gens):
            dd = self.gen_diff(i).d()
            if not dd.is_zero():
                raise NotAComplexError(f"d(d({g.name})) != 0")

    def extend(self, new_gens: list[Gen], name: str = "") -> "SemifreeAlgebra":
        """A new algebra with additional generators; existing generator
        differentials are transported over."""
        out = SemifreeAlgebra(self.ground, self.gens + new_gens, self.flavor,
                              self.window, name=name or self.name + "+")
        for i, g in enumerate(self.gens):
            dv = self._gen_diffs.get(i)
            if dv is not None:
                out._gen_diffs[i] = El(out, dict(dv.coords))
        return out

    # --- tabulation ---------------------------------------------------------

    def words(self, deg: int, wmax_word: int) -> list[tuple[tuple, int]]:
        """Generator words of exact degree ``deg`` and weight <= wmax_word,
        as (word, weight) pairs, deterministically ordered."""
        key = (deg, wmax_word)
        if key in self._word_cache:
            return self._word_cache[key]
        out: list[tuple[tuple, int]] = []
        n = len(self.gens)

        # every generator has weight >= 1 and |degree| <= |remaining|,
        # so recursion depth is bounded by the weight budget
        def rec_sc(start: int, d: int, w: int, acc: tuple):
            if d == 0:
                out.append((acc, w))
            for i in range(start, n):
                g = self.gens[i]
                if g.deg < d or w + g.wt > wmax_word:
                    # g.deg < d means |g.deg| > |d|: cannot fit
                    continue
                if d == 0 and g.deg < 0:
                    continue
                rec_sc(i if g.deg % 2 == 0 else i + 1,
                       d - g.deg, w + g.wt, acc + (i,))

        def rec_nc(d: int, w: int, acc: tuple):
            if d == 0:
                out.append((acc, w))
            for i in range(n):
                g = self.gens[i]
                if g.deg < d or w + g.wt > wmax_word:
                    continue
                if d == 0 and g.deg < 0:
                    continue
                rec_nc(d - g.deg, w + g.wt, acc + (i,))

        if self.flavor == "sc":
            rec_sc(0, deg, 0, ())
        else:
            rec_nc(deg, 0, ())
        out.sort()
        self._word_cache[key] = out
        return out

    def _basis(self, bd: Bidegree) -> tuple:
        k, w = bd
        if k > 0 or w < 0:
            return ()
        labels = []
        for word, ww in self.words(k, w):
            for gm in self.ground.basis(w - ww):
                labels.append((gm, word))
        return tuple(labels)

    def _mul(self, bd1, l1, bd2, l2) -> El:
        (g1, w1), (g2, w2) = l1, l2
        if self.flavor == "sc":
            word, sign = sort_word_sc(w1 + w2, [g.deg for g in self.gens])
            if word is None:
                return self.zero()
        else:
            word, sign = w1 + w2, Q(1)
        gprod = self.ground.mul(g1, g2)  # ground is central and even
        bd = (bd1[0] + bd2[0], bd1[1] + bd2[1])
        return El(self, {(bd, (gm, word)): sign * c for gm, c in gprod.items()})

    def _diff(self, bd, l) -> El:
        gm, word = l
        if not word:
            return self.zero()
        out = self.zero()
        wg = self.ground.mono_weight(gm)
        sign = Q(1)
        for j, gi in enumerate(word):
            dgi = self.gen_diff(gi)
            if not dgi.is_zero():
                pre_deg = sum(self.gens[i].deg for i in word[:j])
                pre_wt = sum(self.gens[i].wt for i in word[:j]) + wg
                pre = El(self, {((pre_deg, pre_wt), (gm, word[:j])): Q(1)})
                suf_deg = sum(self.gens[i].deg for i in word[j + 1:])
                suf_wt = sum(self.gens[i].wt for i in word[j + 1:])
                suf = El(self, {((suf_deg, suf_wt),
                                 (self.ground.unit_label(), word[j + 1:])): Q(1)})
                s = Q(-1) if pre_deg % 2 else Q(1)
                out = out + (pre * dgi * suf).scale(s)
        return out

    def key(self):
        return ("semifree", self.ground.key(), self.flavor,
                tuple((g.name, g.deg, g.wt) for g in self.gens),
                tuple((i, tuple(sorted(
                    ((bd, lab), str(c)) for (bd, lab), c in d.coords.items())))
                    for i, d in sorted(self._gen_diffs.items())))


# ---------------------------------------------------------------------------
# ring homomorphisms


class DgRingHom:
    """Weight-preserving homomorphism of tabulated DG rings.

    Stored as a rule assigning an element of the target to every basis
    label of the source; results are cached.  ``check()`` verifies unit,
    d-compatibility and multiplicativity on tabulated bases.
    """

    def __init__(self, source: DgAlgebra, target: DgAlgebra,
                 image_fn: Callable[[Bidegree, object], El], name: str = ""):
        self.source = source
        self.target = target
        self._fn = image_fn
        self.name = name
        self._cache: dict = {}

    def image(self, bd: Bidegree, label) -> El:
        key = (bd, label)
        if key not in self._cache:
            val = self._fn(bd, label)
            hom = val.is_homogeneous()
            if not val.is_zero() and hom != bd:
                raise StructuralError(
                    f"hom {self.name}: image of {label!r} has bidegree {hom}, "
                    f"expected {bd}")
            self._cache[key] = val
        return self._cache[key]

    def apply(self, el: El) -> El:
        if el.carrier is not self.source:
            raise StructuralError("element not in the source ring")
        out = self.target.zero()
        for (bd, l), c in el.coords.items():
            out = out + self.image(bd, l).scale(c)
        return out

    def compose(self, other: "DgRingHom") -> "DgRingHom":
        if other.target is not self.source:
            raise StructuralError("composition mismatch")
        return DgRingHom(other.source, self.target,
                         lambda bd, l: self.apply(other.image(bd, l)),
                         name=f"{self.name}∘{other.name}")

    def as_chain_map(self) -> ChainMap:
        src, tgt = self.source.complex(), self.target.complex()
        f = ChainMap(src, tgt)
        for bd in self.source.bidegrees():
            n = tgt.dim(bd)
            cols = []
            for l in self.source.basis(bd):
                img = self.image(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in img.coords.items():
                    col[tgt.space.index(b2, l2)] = c
                cols.append(col)
            f.set_block(bd, from_columns(cols, n))
        return f

    def check(self, bds: Optional[Iterable[Bidegree]] = None,
              mult: bool = True) -> None:
        if (self.apply(self.source.unit()) - self.target.unit()).coords:
            raise StructuralError(f"hom {self.name} does not preserve the unit")
        bds = list(bds or self.source.bidegrees())
        for bd in bds:
            for l in self.source.basis(bd):
                el = self.source.element(bd, l)
                if not (self.apply(el.d()) - self.image(bd, l).d()).is_zero():
                    raise StructuralError(
                        f"hom {self.name} not compatible with d at {l!r}")
        if mult:
            for bd1 in bds:
                for bd2 in bds:
                    if bd1[1] + bd2[1] > self.source.window.wmax:
                        continue
                    if bd1[0] + bd2[0] < self.source.window.dlo:
                        continue
                    for l1 in self.source.basis(bd1):
                        a = self.source.element(bd1, l1)
                        fa = self.image(bd1, l1)
                        for l2 in self.source.basis(bd2):
                            b = self.source.element(bd2, l2)
                            lhs = self.apply(a * b)
                            if not (lhs - fa * self.image(bd2, l2)).is_zero():
                                raise StructuralError(
                                    f"hom {self.name} not multiplicative "
                                    f"on {l1!r},{l2!r}")

    def is_quasi_iso(self, degrees: Optional[tuple[int, int]] = None) -> bool:
        from .exactlin import is_quasi_iso_chain
        f = self.as_chain_map()
        if degrees is None:
            lo = max(self.source.window.dlo, self.target.window.dlo) + 1
            degrees = (lo, 0)
        return is_quasi_iso_chain(f, degrees)


def identity_hom(alg: DgAlgebra) -> DgRingHom:
    return DgRingHom(alg, alg, lambda bd, l: alg.element(bd, l), name="id")


def hom_from_images(source: SemifreeAlgebra, target: DgAlgebra,
                    var_images: dict[str, El], gen_images: dict[str, El],
                    name: str = "", check: bool = True) -> DgRingHom:
    """The homomorphism of a semi-free ring fixed by generator images.

    ``var_images`` sends ground variables to degree-0 target elements,
    ``gen_images`` sends generators to elements of their bidegree.
    Verifies ground relations, centrality is assumed from the target
    being well-formed, and d-compatibility on each generator.
    """
    if not isinstance(source, SemifreeAlgebra):
        raise PreconditionError("hom_from_images needs a presented source")
    for nm, w in source.ground.vars:
        if nm not in var_images:
            raise PreconditionError(f"missing image for ground variable {nm}")
        hom = var_images[nm].is_homogeneous()
        if not var_images[nm].is_zero() and hom != (0, w):
            raise StructuralError(f"image of {nm} must have bidegree {(0, w)}")
    for g in source.gens:
        if g.name not in gen_images:
            raise PreconditionError(f"missing image for generator {g.name}")

    pow_cache: dict = {}

    def vpow(j: int, e: int) -> El:
        key = (j, e)
        if key not in pow_cache:
            if e == 0:
                pow_cache[key] = target.unit()
            else:
                pow_cache[key] = vpow(j, e - 1) * var_images[source.ground.vars[j][0]]
        return pow_cache[key]

    def fn(bd: Bidegree, label) -> El:
        gm, word = label
        out = target.unit()
        for j, e in enumerate(gm):
            if e:
                out = out * vpow(j, e)
        for i in word:
            out = out * gen_images[source.gens[i].name]
    # products in the target are associative, so the order is the word order
        return out

    h = DgRingHom(source, target, fn, name=name)
    if check:
        # ground relations must map to zero
        for r in source.ground.relations:
            img = target.zero()
            for exp, c in r.items():
                term = target.unit()
                for j, e in enumerate(exp):
                    if e:
                        term = term * vpow(j, e)
                img = img + term.scale(c)
            if not img.is_zero():
                raise StructuralError("ground relation not killed by the hom")
        for g in source.gens:
            i = source.gen_index[g.name]
            lhs = h.apply(source.gen_diff(i))
            if not (lhs - gen_images[g.name].d()).is_zero():
                raise StructuralError(
                    f"d-incompatible image for generator {g.name}")
        if source.sc and not target.sc:
            for g1 in source.gens:
                a = gen_images[g1.name]
                bd1 = (g1.deg, g1.wt)
                if g1.deg % 2 and not (a * a).is_zero():
                    raise StructuralError(
                        f"image of odd generator {g1.name} does not square to 0")
                for g2 in source.gens:
                    b = gen_images[g2.name]
                    if not (a * b - (b * a).scale(
                            koszul_sign(g1.deg, g2.deg))).is_zero():
                        raise StructuralError(
                            f"images of {g1.name},{g2.name} do not commute")
    return h


# ---------------------------------------------------------------------------
# derived structural rings: tensor, quotient, opposite, cylinder


class TensorAlgebra(DgAlgebra):
    """A ⊗_Q B with the Koszul sign rule.

    Labels are 4-tuples (bd_a, label_a, bd_b, label_b).
    """

    def __init__(self, left: DgAlgebra, right: DgAlgebra):
        super().__init__()
        self.left = left
        self.right = right
        self.sc = left.sc and right.sc
        self.window = Window(left.window.dlo + right.window.dlo,
                             left.window.dhi + right.window.dhi,
                             min(left.window.wmax, right.window.wmax))
        self.name = f"({left.__dict__.get('name','?')}⊗{right.__dict__.get('name','?')})"

    def _basis(self, bd):
        k, w = bd
        out = []
        for ka in range(self.left.window.dlo, self.left.window.dhi + 1):
            kb = k - ka
            if not self.right.window.dlo <= kb <= self.right.window.dhi:
                continue
            for wa in range(0, w + 1):
                wb = w - wa
                for la in self.left.basis((ka, wa)):
                    for lb in self.right.basis((kb, wb)):
                        out.append(((ka, wa), la, (kb, wb), lb))
        return tuple(out)

    def pure(self, a: El, b: El) -> El:
        out = {}
        for (bda, la), ca in a.coords.items():
            for (bdb, lb), cb in b.coords.items():
                bd = (bda[0] + bdb[0], bda[1] + bdb[1])
                key = (bd, (bda, la, bdb, lb))
                out[key] = out.get(key, Q(0)) + ca * cb
        return El(self, out)

    def _mul(self, bd1, l1, bd2, l2) -> El:
        bda1, la1, bdb1, lb1 = l1
        bda2, la2, bdb2, lb2 = l2
        sign = koszul_sign(bda2[0], bdb1[0])
        pa = self.left.mul_labels(bda1, la1, bda2, la2)
        pb = self.right.mul_labels(bdb1, lb1, bdb2, lb2)
        return self.pure(pa, pb).scale(sign)

    def _diff(self, bd, l) -> El:
        bda, la, bdb, lb = l
        da = self.left.diff_label(bda, la)
        db = self.right.diff_label(bdb, lb)
        ea = El(self.left, {(bda, la): Q(1)})
        eb = El(self.right, {(bdb, lb): Q(1)})
        out = self.pure(da, eb)
        out = out + self.pure(ea, db).scale(Q(-1) if bda[0] % 2 else Q(1))
        return out

    def unit(self) -> El:
        return self.pure(self.left.unit(), self.right.unit())

    def key(self):
        return ("tensor", self.left.key(), self.right.key())


class QuotientAlgebra(DgAlgebra):
    """Quotient of a tabulated ring by a bidegree-wise span of relations.

    The relation spans must form a two-sided DG ideal; representatives
    of the quotient basis are parent labels not pivotal for the span.
    """

    def __init__(self, parent: DgAlgebra,
                 relations_at: Callable[[Bidegree], list[El]], name: str = ""):
        super().__init__()
        self.parent = parent
        self.sc = parent.sc
        self.window = parent.window
        self.name = name or "quotient"
        self._relations_at = relations_at
        self._red: dict[Bidegree, tuple] = {}

    def _reduction(self, bd: Bidegree):
        if bd not in self._red:
            plabels = self.parent.basis(bd)
            idx = {l: i for i, l in enumerate(plabels)}
            rows = []
            for rel in self._relations_at(bd):
                row = [Q(0)] * len(plabels)
                for (b2, l2), c in rel.coords.items():
                    if b2 != bd:
                        raise StructuralError("relation not homogeneous")
                    row[idx[l2]] += c
                rows.append(row)
            red, piv = rref(rows) if rows else ([], [])
            red = red[:len(piv)]
            basis = tuple(l for i, l in enumerate(plabels) if i not in piv)
            self._red[bd] = (plabels, idx, red, piv, basis)
        return self._red[bd]

    def _basis(self, bd):
        return self._reduction(bd)[4]

    def project(self, el: El) -> El:
        """Parent element -> quotient coordinates."""
        out: dict = {}
        bds = {bd for (bd, _) in el.coords}
        for bd in bds:
            plabels, idx, red, piv, basis = self._reduction(bd)
            v = [Q(0)] * len(plabels)
            for (b2, l2), c in el.coords.items():
                if b2 == bd:
                    v[idx[l2]] += c
            for row, p in zip(red, piv):
                c = v[p]
                if c:
                    for j in range(len(plabels)):
                        if row[j]:
                            v[j] -= c * row[j]
            for i, l in enumerate(plabels):
                if v[i]:
                    out[(bd, l)] = out.get((bd, l), Q(0)) + v[i]
        return El(self, out)

    def lift(self, el: El) -> El:
        """Quotient element -> its representative in the parent."""
        return El(self.parent, dict(el.coords))

    def _mul(self, bd1, l1, bd2, l2) -> El:
        return self.project(self.parent.mul_labels(bd1, l1, bd2, l2))

    def _diff(self, bd, l) -> El:
        return self.project(self.parent.diff_label(bd, l))

    def unit(self) -> El:
        return self.project(self.parent.unit())

    def key(self):
        return ("quotient", self.parent.key(), self.name)


class OppositeAlgebra(DgAlgebra):
    """Same space, multiplication reversed with the Koszul sign."""

    def __init__(self, parent: DgAlgebra):
        super().__init__()
        self.parent = parent
        self.sc = parent.sc
        self.window = parent.window
        self.name = "op"

    def _basis(self, bd):
        return self.parent.basis(bd)

    def _mul(self, bd1, l1, bd2, l2) -> El:
        p = self.parent.mul_labels(bd2, l2, bd1, l1)
        return El(self, dict(p.coords)).scale(koszul_sign(bd1[0], bd2[0]))

    def _diff(self, bd, l) -> El:
        return El(self, dict(self.parent.diff_label(bd, l).coords))

    def unit(self) -> El:
        return El(self, dict(self.parent.unit().coords))

    def key(self):
        return ("opposite", self.parent.key())


def opposite(alg: DgAlgebra) -> DgAlgebra:
    """Opposite ring; strongly commutative rings are their own opposite."""
    if alg.sc:
        return alg
    return OppositeAlgebra(alg)


def tensor_rings(left: DgAlgebra, right: DgAlgebra, base: GroundRing,
                 embed_left: Optional[Callable[[dict, int], El]] = None,
                 embed_right: Optional[Callable[[dict, int], El]] = None,
                 name: str = "") -> QuotientAlgebra:
    """left ⊗_base right as a quotient of the plain tensor ring.

    ``embed_left``/``embed_right`` send a base polynomial (dict of
    exponent tuples, at a weight) into the factors; they default to
    nothing for the trivial base.  The balancing relations
    (a·x)⊗y - x⊗(a·y) are divided out per bidegree.
    """
    t = TensorAlgebra(left, right)

    base_elems: list[tuple[int, object]] = []
    for w in range(1, base.wmax + 1):
        for m in base.basis(w):
            base_elems.append((w, m))

    def relations_at(bd: Bidegree) -> list[El]:
        if not base_elems:
            return []
        out = []
        k, w = bd
        for wa, m in base_elems:
            al = embed_left({m: Q(1)}, wa)
            ar = embed_right({m: Q(1)}, wa)
            for ka in range(left.window.dlo, left.window.dhi + 1):
                kb = k - ka
                for wl in range(0, w - wa + 1):
                    wr = w - wa - wl
                    for la in left.basis((ka, wl)):
                        x = left.element((ka, wl), la)
                        ax = al * x
                        for lb in right.basis((kb, wr)):
                            y = right.element((kb, wr), lb)
                            ay = ar * y
                            out.append(t.pure(ax, y) - t.pure(x, ay))
        return out

    q = QuotientAlgebra(t, relations_at, name=name or "balanced-tensor")
    q.tensor = t
    return q


# ---------------------------------------------------------------------------
# cylinders


class CylinderAlgebra(DgAlgebra):
    """The cylinder ring of A: two copies of A and a degree +1 strand.

    Labels are (part, bd, label) with part 0, 1 (the diagonal copies)
    or "x" (the ξ·A strand, sitting one degree higher).  The products
    are those of upper triangular 2x2 matrices [a0, ξb; 0, a1] and the
    differential is the inner derivation by [0, ξ; 0, 0] plus the
    entrywise differential of A.
    """

    def __init__(self, parent: DgAlgebra):
        super().__init__()
        self.parent = parent
        self.sc = False  # the cylinder of a commutative ring is not commutative
        self.window = Window(parent.window.dlo, parent.window.dhi + 1,
                             parent.window.wmax)
        self.name = "Cyl"

    def _basis(self, bd):
        k, w = bd
        out = []
        for l in self.parent.basis((k, w)):
            out.append((0, (k, w), l))
            out.append((1, (k, w), l))
        for l in self.parent.basis((k - 1, w)):
            out.append(("x", (k - 1, w), l))
        return tuple(out)

    def inject(self, part, a: El) -> El:
        out = {}
        for (bd, l), c in a.coords.items():
            k = bd[0] + 1 if part == "x" else bd[0]
            out[((k, bd[1]), (part, bd, l))] = c
        return El(self, out)

    def _mul(self, bd1, l1, bd2, l2) -> El:
        p1, bda, la = l1
        p2, bdb, lb = l2
        a = El(self.parent, {(bda, la): Q(1)})
        b = El(self.parent, {(bdb, lb): Q(1)})
        if p1 in (0, 1) and p2 in (0, 1):
            if p1 != p2:
                return self.zero()
            return self.inject(p1, a * b)
        if p1 == 0 and p2 == "x":
            # (e0⊗a)(ξ⊗b) = (-1)^{|a|} ξ⊗(ab)
            s = Q(-1) if bda[0] % 2 else Q(1)
            return self.inject("x", a * b).scale(s)
        if p1 == "x" and p2 == 1:
            return self.inject("x", a * b)
        return self.zero()

    def _diff(self, bd, l) -> El:
        part, bda, la = l
        a = El(self.parent, {(bda, la): Q(1)})
        da = self.parent.diff_label(bda, la)
        if part == 0:
            return self.inject(0, da) - self.inject("x", a)
        if part == 1:
            return self.inject(1, da) + self.inject("x", a)
        return self.inject("x", da).scale(Q(-1))

    def unit(self) -> El:
        return self.inject(0, self.parent.unit()) + self.inject(1, self.parent.unit())

    def key(self):
        return ("cylinder", self.parent.key())


def cylinder_eps(cyl: CylinderAlgebra) -> DgRingHom:
    """The diagonal quasi-isomorphism A -> Cyl(A)."""
    a = cyl.parent
    return DgRingHom(a, cyl, lambda bd, l: cyl.inject(0, a.element(bd, l))
                     + cyl.inject(1, a.element(bd, l)), name="eps")


def cylinder_eta(cyl: CylinderAlgebra, which: int) -> DgRingHom:
    """The projection Cyl(A) -> A onto copy 0 or 1."""
    a = cyl.parent

    def fn(bd, l):
        part, bda, la = l
        if part == which:
            return a.element(bda, la)
        return a.zero()

    return DgRingHom(cyl, a, fn, name=f"eta{which}")


def cylinder_of_hom(u: DgRingHom, cyl_src: CylinderAlgebra,
                    cyl_tgt: CylinderAlgebra) -> DgRingHom:
    """Cyl(u): entrywise application of u."""

    def fn(bd, l):
        part, bda, la = l
        return cyl_tgt.inject(part, u.image(bda, la))

    return DgRingHom(cyl_src, cyl_tgt, fn, name=f"Cyl({u.name})")


# ---------------------------------------------------------------------------
# centrality


def ad(a: El, b: El) -> El:
    """Graded commutator ab - (-1)^{|a||b|} ba for homogeneous inputs."""
    bda = a.is_homogeneous()
    bdb = b.is_homogeneous()
    if bda is None or bdb is None:
        raise PreconditionError("ad needs homogeneous elements")
    return a * b - (b * a).scale(koszul_sign(bda[0], bdb[0]))


def center_basis(alg: DgAlgebra, bd: Bidegree,
                 test_bds: Optional[Iterable[Bidegree]] = None) -> list[El]:
    """Basis of the degree-bd part of the graded center, i.e. the kernel
    of all graded commutators against the tabulated basis."""
    labels = alg.basis(bd)
    if not labels:
        return []
    rows = []
    for tb in (test_bds or alg.bidegrees()):
        if tb[1] + bd[1] > alg.window.wmax or tb[0] + bd[0] < alg.window.dlo:
            continue
        for tl in alg.basis(tb):
            b = alg.element(tb, tl)
            imgs = [ad(alg.element(bd, l), b) for l in labels]
            keys = sorted({k for img in imgs for k in img.coords},
                          key=lambda k: (k[0], str(k[1])))
            for kk in keys:
                rows.append([img.coords.get(kk, Q(0)) for img in imgs])
    out = []
    for v in kernel_basis(rows, len(labels)):
        out.append(El(alg, {(bd, l): c for l, c in zip(labels, v) if c}))
    return out


def normal_form(alg: SemifreeAlgebra, word: Iterable[str],
                coeff: Fraction = Q(1)) -> El:
    """Product of named ground variables / generators, in normal form."""
    out = alg.unit().scale(coeff)
    for nm in word:
        if nm in alg.gen_index:
            out = out * alg.gen_el(nm)
        else:
            out = out * alg.var_el(nm)
    return out
