"""DG modules over tabulated DG rings.

Free (semi-free) modules with assigned generator differentials, shifts,
cones, restriction of scalars, tensor products over a central base,
finitely generated Hom complexes, induced maps between them, scale
morphisms, and module cylinders.  Everything is tabulated per bidegree
(cohomological degree, weight) and all arithmetic is exact rational.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .exactlin import (
    Bidegree, BigradedMap, BigradedSpace, ChainMap, Complex,
    NotAComplexError, PreconditionError, Q, StructuralError, WindowError,
    from_columns,
)
from .dgcore import (
    DgAlgebra, DgRingHom, El, GroundRing, QuotientAlgebra, TensorAlgebra,
    Window, koszul_sign,
)


@dataclass(frozen=True)
class MGen:
    """A module generator: any cohomological degree, weight >= 0."""
    name: str
    deg: int
    wt: int

    def __post_init__(self):
        if self.wt < 0:
            raise PreconditionError(f"generator {self.name}: weight must be >= 0")

    @property
    def bidegree(self) -> Bidegree:
        return (self.deg, self.wt)


class DgModule:
    """Base: a left DG module over a tabulated DG ring.

    Subclasses provide _basis / _act / _diff; basis labels are opaque
    hashables.  Right modules are realized as left modules over the
    opposite ring.
    """

    ring: DgAlgebra
    window: Window

    def __init__(self, ring: DgAlgebra, window: Window):
        self.ring = ring
        self.window = window
        # when True, the window is the true support and escaping
        # products vanish instead of raising
        self.exact_support = False
        self._basis_cache: dict = {}
        self._act_cache: dict = {}
        self._diff_cache: dict = {}
        self._space: Optional[BigradedSpace] = None
        self._complex: Optional[Complex] = None

    # subclass hooks ------------------------------------------------------
    def _basis(self, bd: Bidegree) -> tuple:
        raise NotImplementedError

    def _act(self, rbd, rl, bd, l) -> El:
        raise NotImplementedError

    def _diff(self, bd, l) -> El:
        raise NotImplementedError

    # tabulation ----------------------------------------------------------
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

    def act_labels(self, rbd, rl, bd, l) -> El:
        key = (rbd, rl, bd, l)
        if key not in self._act_cache:
            tbd = (rbd[0] + bd[0], rbd[1] + bd[1])
            if tbd[1] < 0 or tbd[1] > self.window.wmax:
                # ring weights are nonnegative and the differential is
                # weight-preserving, so the high-weight tail is a DG
                # submodule; working modulo it is exact in every
                # tabulated weight
                return El(self, {})
            if tbd[0] < self.window.dlo:
                if self._escape_is_zero(rbd, rl):
                    return El(self, {})
                raise WindowError(f"module action escapes window at {tbd}")
            self._act_cache[key] = self._act(rbd, rl, bd, l)
        return self._act_cache[key]

    def _escape_is_zero(self, rbd, rl) -> bool:
        # the window is the module's true support exactly when
        # exact_support is set; then an escaping product is zero
        return self.exact_support

    def diff_label(self, bd, l) -> El:
        key = (bd, l)
        if key not in self._diff_cache:
            self._diff_cache[key] = self._diff(bd, l)
        return self._diff_cache[key]

    def act_el(self, a: El, m: El) -> El:
        """Bilinear extension of the action; a lives in self.ring."""
        out: dict = {}
        for (rbd, rl), c1 in a.coords.items():
            for (bd, l), c2 in m.coords.items():
                am = self.act_labels(rbd, rl, bd, l)
                for k, v in am.coords.items():
                    out[k] = out.get(k, Q(0)) + c1 * c2 * v
        return El(self, out)

    # elements ------------------------------------------------------------
    def zero(self) -> El:
        return El(self, {})

    def element(self, bd: Bidegree, label, c: Fraction = Q(1)) -> El:
        if label not in self.basis(bd):
            raise StructuralError(f"no module basis label {label!r} at {bd}")
        return El(self, {(bd, label): c})

    # linear-algebra views --------------------------------------------------
    def space(self) -> BigradedSpace:
        if self._space is None:
            self._space = BigradedSpace({bd: self.basis(bd) for bd in self.bidegrees()})
        return self._space

    def d_map(self) -> BigradedMap:
        sp = self.space()
        d = BigradedMap(sp, sp, shift=1)
        for bd in self.bidegrees():
            tb = (bd[0] + 1, bd[1])
            n = sp.dim(tb)
            cols = []
            for l in self.basis(bd):
                dl = self.diff_label(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in dl.coords.items():
                    if b2 != tb:
                        raise StructuralError("module differential not of shift (+1,0)")
                    col[sp.index(tb, l2)] = c
                cols.append(col)
            d.set_block(bd, from_columns(cols, n))
        return d

    def complex(self) -> Complex:
        if self._complex is None:
            self._complex = Complex(self.space(), self.d_map())
        return self._complex

    def cohomology(self) -> dict:
        """Per-bidegree dims; exact away from the window's degree edges."""
        return self.complex().cohomology_dims()

    # structure checks ------------------------------------------------------
    def check_d2(self, bds: Optional[Iterable[Bidegree]] = None) -> None:
        for bd in (bds or self.bidegrees()):
            for l in self.basis(bd):
                if not self.diff_label(bd, l).d().is_zero():
                    raise NotAComplexError(f"d^2 != 0 on module label {l!r} at {bd}")

    def check_leibniz(self, bds: Optional[Iterable[tuple]] = None) -> None:
        """d(a m) = d(a) m + (-1)^{|a|} a d(m) on tabulated basis pairs."""
        pairs = bds
        if pairs is None:
            pairs = [(rbd, bd) for rbd in self.ring.bidegrees()
                     for bd in self.bidegrees()
                     if self.window.contains((rbd[0] + bd[0] + 1, rbd[1] + bd[1]))]
        for rbd, bd in pairs:
            for rl in self.ring.basis(rbd):
                a = self.ring.element(rbd, rl)
                da = a.d()
                for l in self.basis(bd):
                    m = self.element(bd, l)
                    lhs = (a * m).d()
                    rhs = da * m + (a * m.d()).scale(Q(-1) if rbd[0] % 2 else Q(1))
                    if not (lhs - rhs).is_zero():
                        raise StructuralError(
                            f"module Leibniz fails at {rbd}x{bd} ({rl!r},{l!r})")

    def check_action(self, bds: Optional[Iterable[tuple]] = None) -> None:
        """Associativity (a1 a2) m = a1 (a2 m) and unitality on basis triples."""
        u = self.ring.unit()
        for bd in self.bidegrees():
            for l in self.basis(bd):
                m = self.element(bd, l)
                if not (u * m - m).is_zero():
                    raise StructuralError(f"unit does not act as identity at {bd}")
        triples = bds
        if triples is None:
            triples = []
            for r1 in self.ring.bidegrees():
                for r2 in self.ring.bidegrees():
                    for bd in self.bidegrees():
                        t = (r1[0] + r2[0] + bd[0], r1[1] + r2[1] + bd[1])
                        if self.window.contains(t) and self.ring.window.contains(
                                (r1[0] + r2[0], r1[1] + r2[1])):
                            triples.append((r1, r2, bd))
        for r1, r2, bd in triples:
            for l1 in self.ring.basis(r1):
                a1 = self.ring.element(r1, l1)
                for l2 in self.ring.basis(r2):
                    a2 = self.ring.element(r2, l2)
                    a12 = a1 * a2
                    for l in self.basis(bd):
                        m = self.element(bd, l)
                        if not (a12 * m - a1 * (a2 * m)).is_zero():
                            raise StructuralError(
                                f"action not associative at {r1},{r2},{bd}")


# ---------------------------------------------------------------------------
# free / semi-free modules


class FreeModule(DgModule):
    """Semi-free left module on finitely many generators.

    Basis labels are (gen_name, ring_bd, ring_label), standing for the
    product (ring basis element) . e_gen.  Generator differentials are
    assigned after construction; unassigned generators have d = 0.
    """

    def __init__(self, ring: DgAlgebra, gens: list[MGen],
                 window: Optional[Window] = None, name: Optional[str] = None):
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            raise PreconditionError("duplicate module generator names")
        if window is None:
            # the differential multiplies ring coefficients together, so
            # the defaults keep every d-computation inside the ring window
            rw = ring.window
            if gens:
                dlo = rw.dlo + 1 + min(g.deg for g in gens)
                dhi = rw.dhi + max(g.deg for g in gens)
            else:
                dlo, dhi = rw.dlo, rw.dhi
            window = Window(min(dlo, dhi), dhi, rw.wmax)
        super().__init__(ring, window)
        self.gens = list(gens)
        self.gen_index = {g.name: g for g in gens}
        self.gen_diffs: dict[str, El] = {}
        self.name = name or f"free({','.join(names)})"

    def set_gen_diff(self, name: str, value: El) -> None:
        g = self.gen_index[name]
        if value.carrier is not self:
            raise StructuralError("generator differential must live in this module")
        hb = value.is_homogeneous()
        if not value.is_zero() and hb != (g.deg + 1, g.wt):
            raise StructuralError(
                f"d({name}) must be homogeneous of bidegree {(g.deg + 1, g.wt)}")
        self.gen_diffs[name] = value
        self._diff_cache.clear()
        self._space = None
        self._complex = None

    def gen_el(self, name: str) -> El:
        """The element 1 . e_name (the ring unit may be a sum of labels)."""
        g = self.gen_index[name]
        coords = {}
        for (rbd, rl), c in self.ring.unit().coords.items():
            coords[((rbd[0] + g.deg, rbd[1] + g.wt), (name, rbd, rl))] = c
        return El(self, coords)

    def validate(self) -> None:
        for g in self.gens:
            dd = self.gen_diffs.get(g.name)
            if dd is not None and not dd.d().is_zero():
                raise NotAComplexError(f"d^2 != 0 on module generator {g.name}")

    def _basis(self, bd: Bidegree) -> tuple:
        out = []
        for g in self.gens:
            rbd = (bd[0] - g.deg, bd[1] - g.wt)
            for rl in self.ring.basis(rbd):
                out.append((g.name, rbd, rl))
        return tuple(out)

    def _act(self, rbd, rl, bd, l) -> El:
        gname, cbd, cl = l
        g = self.gen_index[gname]
        prod = self.ring.mul_labels(rbd, rl, cbd, cl)
        coords = {}
        for (pbd, pl), c in prod.coords.items():
            coords[((pbd[0] + g.deg, pbd[1] + g.wt), (gname, pbd, pl))] = c
        return El(self, coords)

    def _diff(self, bd, l) -> El:
        gname, cbd, cl = l
        g = self.gen_index[gname]
        # d(r e) = d(r) e + (-1)^{|r|} r d(e)
        out: dict = {}
        dr = self.ring.diff_label(cbd, cl)
        for (pbd, pl), c in dr.coords.items():
            k = ((pbd[0] + g.deg, pbd[1] + g.wt), (gname, pbd, pl))
            out[k] = out.get(k, Q(0)) + c
        de = self.gen_diffs.get(gname)
        if de is not None and not de.is_zero():
            r = self.ring.element(cbd, cl)
            term = self.act_el(r, de)
            sgn = Q(-1) if cbd[0] % 2 else Q(1)
            for k, v in term.coords.items():
                out[k] = out.get(k, Q(0)) + sgn * v
        return El(self, out)


def free_module(ring: DgAlgebra, gen_bidegrees: list[Bidegree],
                name: Optional[str] = None) -> FreeModule:
    gens = [MGen(f"e{i}", d, w) for i, (d, w) in enumerate(gen_bidegrees)]
    return FreeModule(ring, gens, name=name)


class AlgebraModule(DgModule):
    """A DG algebra as a left module over a ring acting through a hom.

    With hom = None the ring acts on itself by left multiplication.
    """

    def __init__(self, alg: DgAlgebra, ring: Optional[DgAlgebra] = None,
                 hom: Optional[DgRingHom] = None):
        super().__init__(ring or alg, alg.window)
        self.alg = alg
        self.hom = hom

    def _basis(self, bd):
        return self.alg.basis(bd)

    def _act(self, rbd, rl, bd, l) -> El:
        a = self.ring.element(rbd, rl) if self.hom is None \
            else self.hom.image(rbd, rl)
        prod = a * self.alg.element(bd, l)
        return El(self, dict(prod.coords))

    def _diff(self, bd, l) -> El:
        return El(self, dict(self.alg.diff_label(bd, l).coords))

    def wrap(self, el: El) -> El:
        if el.carrier is not self.alg:
            raise StructuralError("element does not live in the wrapped algebra")
        return El(self, dict(el.coords))

    def unwrap(self, el: El) -> El:
        return El(self.alg, dict(el.coords))


class BimoduleFromAlgebra(DgModule):
    """A DG algebra as a left module over an enveloping-style tensor ring.

    The ring's basis labels must be tensor labels (bd_b, l_b, bd_c, l_c);
    the action is (b (x) c^op) . m = (-1)^{|m||c|} lh(b) . m . rh(c).
    """

    def __init__(self, env: DgAlgebra, alg: DgAlgebra,
                 left_hom: Callable[[Bidegree, object], El],
                 right_hom: Callable[[Bidegree, object], El]):
        super().__init__(env, alg.window)
        self.alg = alg
        self.left_hom = left_hom
        self.right_hom = right_hom

    def _basis(self, bd):
        return self.alg.basis(bd)

    def _act(self, rbd, rl, bd, l) -> El:
        bda, la, bdb, lb = rl
        b = self.left_hom(bda, la)
        c = self.right_hom(bdb, lb)
        sgn = koszul_sign(bd[0], bdb[0])
        prod = (b * self.alg.element(bd, l) * c).scale(sgn)
        return El(self, dict(prod.coords))

    def _diff(self, bd, l) -> El:
        return El(self, dict(self.alg.diff_label(bd, l).coords))

    def wrap(self, el: El) -> El:
        return El(self, dict(el.coords))

    def unwrap(self, el: El) -> El:
        return El(self.alg, dict(el.coords))


# ---------------------------------------------------------------------------
# shift, cone, restriction


class ShiftModule(DgModule):
    """T^k(M): basis at bd is the parent basis at (bd+k, w); d gets (-1)^k,
    the action the sign (-1)^{ik} for a ring element of degree i."""

    def __init__(self, parent: DgModule, k: int = 1):
        w = parent.window
        super().__init__(parent.ring, Window(w.dlo - k, w.dhi - k, w.wmax))
        self.parent = parent
        self.k = k

    def _basis(self, bd):
        return self.parent.basis((bd[0] + self.k, bd[1]))

    def _transport(self, el: El) -> El:
        return El(self, {((bd[0] - self.k, bd[1]), l): c
                         for (bd, l), c in el.coords.items()})

    def _act(self, rbd, rl, bd, l) -> El:
        am = self.parent.act_labels(rbd, rl, (bd[0] + self.k, bd[1]), l)
        sgn = koszul_sign(rbd[0], self.k)
        return self._transport(am).scale(sgn)

    def _diff(self, bd, l) -> El:
        d = self.parent.diff_label((bd[0] + self.k, bd[1]), l)
        return self._transport(d).scale(Q(1) if self.k % 2 == 0 else Q(-1))

    def shift_in(self, el: El) -> El:
        """t^k applied to a parent element."""
        return self._transport(el)

    def shift_out(self, el: El) -> El:
        return El(self.parent, {((bd[0] + self.k, bd[1]), l): c
                                for (bd, l), c in el.coords.items()})


def shift(m: DgModule, k: int = 1) -> DgModule:
    if k == 0:
        return m
    return ShiftModule(m, k)


class ConeModule(DgModule):
    """Cone(phi) = N (+) M[1] for a chain module map phi: M -> N."""

    def __init__(self, phi: "ModuleHom"):
        if phi.k != 0 or phi.wshift != 0:
            raise PreconditionError("cone requires a degree-(0,0) map")
        m, n = phi.source, phi.target
        if m.ring is not n.ring:
            raise StructuralError("cone requires modules over the same ring")
        window = Window(min(n.window.dlo, m.window.dlo - 1),
                        max(n.window.dhi, m.window.dhi - 1),
                        max(n.window.wmax, m.window.wmax))
        super().__init__(n.ring, window)
        self.phi = phi
        self.m = m
        self.n = n

    def _basis(self, bd):
        out = [("n", l) for l in self.n.basis(bd)]
        out += [("m", l) for l in self.m.basis((bd[0] + 1, bd[1]))]
        return tuple(out)

    def inject_n(self, el: El) -> El:
        return El(self, {(bd, ("n", l)): c for (bd, l), c in el.coords.items()})

    def inject_m(self, el: El) -> El:
        """t(m) for a parent M element."""
        return El(self, {((bd[0] - 1, bd[1]), ("m", l)): c
                         for (bd, l), c in el.coords.items()})

    def _act(self, rbd, rl, bd, l) -> El:
        part, lab = l
        if part == "n":
            return self.inject_n(self.n.act_labels(rbd, rl, bd, lab))
        am = self.m.act_labels(rbd, rl, (bd[0] + 1, bd[1]), lab)
        return self.inject_m(am).scale(koszul_sign(rbd[0], 1))

    def _diff(self, bd, l) -> El:
        part, lab = l
        if part == "n":
            return self.inject_n(self.n.diff_label(bd, lab))
        mbd = (bd[0] + 1, bd[1])
        mel = self.m.element(mbd, lab)
        return self.inject_n(self.phi.apply(mel)) - self.inject_m(mel.d())


def cone(phi: "ModuleHom") -> ConeModule:
    cm = ConeModule(phi)
    return cm


class RestrictedModule(DgModule):
    """Restriction of scalars along a ring hom u: A -> B."""

    def __init__(self, parent: DgModule, u: DgRingHom):
        if u.target is not parent.ring:
            raise StructuralError("hom target must be the module's ring")
        super().__init__(u.source, parent.window)
        self.parent = parent
        self.u = u
        self.exact_support = parent.exact_support

    def _basis(self, bd):
        return self.parent.basis(bd)

    def _act(self, rbd, rl, bd, l) -> El:
        a = self.u.image(rbd, rl)
        out = self.parent.act_el(a, self.parent.element(bd, l))
        return El(self, dict(out.coords))

    def _escape_is_zero(self, rbd, rl) -> bool:
        # the acting element may die under u even though its formal
        # bidegree escapes the parent's support
        return self.exact_support or self.u.image(rbd, rl).is_zero()

    def _diff(self, bd, l) -> El:
        return El(self, dict(self.parent.diff_label(bd, l).coords))

    def wrap(self, el: El) -> El:
        return El(self, dict(el.coords))


def restrict_scalars(m: DgModule, u: DgRingHom) -> DgModule:
    return RestrictedModule(m, u)


# ---------------------------------------------------------------------------
# tensor over the base


class PlainTensorModule(DgModule):
    """M (x)_QQ N with the tensor ring action and the standard signs."""

    def __init__(self, ring: DgAlgebra, left: DgModule, right: DgModule):
        lw, rw = left.window, right.window
        super().__init__(ring, Window(lw.dlo + rw.dlo, lw.dhi + rw.dhi,
                                      lw.wmax + rw.wmax))
        self.left = left
        self.right = right

    def _basis(self, bd):
        out = []
        for i in range(self.left.window.dlo, self.left.window.dhi + 1):
            for w in range(0, min(bd[1], self.left.window.wmax) + 1):
                lb = (i, w)
                rb = (bd[0] - i, bd[1] - w)
                for ll in self.left.basis(lb):
                    for rl in self.right.basis(rb):
                        out.append((lb, ll, rb, rl))
        return tuple(out)

    def pure(self, m: El, n: El) -> El:
        out: dict = {}
        for (lb, ll), c1 in m.coords.items():
            for (rb, rl), c2 in n.coords.items():
                k = ((lb[0] + rb[0], lb[1] + rb[1]), (lb, ll, rb, rl))
                out[k] = out.get(k, Q(0)) + c1 * c2
        return El(self, out)

    def _act(self, rbd, rl, bd, l) -> El:
        # ring label must be a tensor label (bd_b, l_b, bd_c, l_c)
        bda, la, bdb, lb = rl
        mlb, mll, mrb, mrl = l
        bm = self.left.act_labels(bda, la, mlb, mll)
        cn = self.right.act_labels(bdb, lb, mrb, mrl)
        sgn = koszul_sign(bdb[0], mlb[0])
        return self.pure(bm, cn).scale(sgn)

    def _diff(self, bd, l) -> El:
        mlb, mll, mrb, mrl = l
        m = self.left.element(mlb, mll)
        n = self.right.element(mrb, mrl)
        out = self.pure(m.d(), n)
        out = out + self.pure(m, n.d()).scale(koszul_sign(mlb[0], 1))
        return out


class QuotientModule(DgModule):
    """Per-bidegree quotient of a module by a span of relation elements."""

    def __init__(self, parent: DgModule, relations_at: Callable[[Bidegree], list[El]],
                 ring: Optional[DgAlgebra] = None):
        super().__init__(ring or parent.ring, parent.window)
        self.parent = parent
        self.relations_at = relations_at
        self._red_cache: dict = {}

    def _reduction(self, bd):
        if bd not in self._red_cache:
            from .exactlin import rref
            pbasis = self.parent.basis(bd)
            idx = {l: i for i, l in enumerate(pbasis)}
            rows = []
            for rel in self.relations_at(bd):
                row = [Q(0)] * len(pbasis)
                for (b2, l2), c in rel.coords.items():
                    if b2 != bd:
                        raise StructuralError("relation not homogeneous")
                    row[idx[l2]] += c
                rows.append(row)
            if rows:
                red, pivots = rref(rows)
                red = red[:len(pivots)]
            else:
                red, pivots = [], []
            free = tuple(l for i, l in enumerate(pbasis) if i not in pivots)
            self._red_cache[bd] = (red, pivots, pbasis, free)
        return self._red_cache[bd]

    def _basis(self, bd):
        return self._reduction(bd)[3]

    def project(self, el: El) -> El:
        out: dict = {}
        bds = {bd for bd, _ in el.coords}
        for bd in bds:
            red, pivots, pbasis, free = self._reduction(bd)
            idx = {l: i for i, l in enumerate(pbasis)}
            vec = [Q(0)] * len(pbasis)
            for (b2, l2), c in el.coords.items():
                if b2 == bd:
                    vec[idx[l2]] = c
            for r, row in enumerate(red):
                p = pivots[r]
                if vec[p]:
                    c = vec[p]
                    for j in range(len(vec)):
                        vec[j] -= c * row[j]
            for i, l in enumerate(pbasis):
                if vec[i] and i not in pivots:
                    out[(bd, l)] = out.get((bd, l), Q(0)) + vec[i]
        return El(self, out)

    def lift(self, el: El) -> El:
        return El(self.parent, dict(el.coords))

    def _act(self, rbd, rl, bd, l) -> El:
        return self.project(self.parent.act_labels(rbd, rl, bd, l))

    def _diff(self, bd, l) -> El:
        return self.project(self.parent.diff_label(bd, l))


def tensor_over_base(left: DgModule, right: DgModule, env: DgAlgebra,
                     base: Optional[GroundRing] = None,
                     embed_left: Optional[Callable] = None,
                     embed_right: Optional[Callable] = None) -> DgModule:
    """M (x)_A N as a module over env = (left ring) (x)_A (right ring).

    env must be a TensorAlgebra, or a quotient of one whose basis labels
    are tensor labels.  With base given, the result is the quotient by
    the balancing relations (a.m) (x) n - m (x) (a.n) for base elements
    of positive weight, embedded via embed_left / embed_right.
    """
    plain_ring = env.tensor if isinstance(env, QuotientAlgebra) else env
    plain = PlainTensorModule(plain_ring, left, right)
    if base is None:
        return plain

    def relations_at(bd):
        rels = []
        for w in range(1, bd[1] + 1):
            for mono in base.basis(w):
                poly = {mono: Q(1)}
                al = embed_left(poly, w)
                ar = embed_right(poly, w)
                for i in range(left.window.dlo, left.window.dhi + 1):
                    for wl in range(0, bd[1] + 1):
                        lb = (i, wl)
                        rb = (bd[0] - i, bd[1] - w - wl)
                        # when a.x or a.y escapes its factor's weight
                        # window that side is zero in the truncated
                        # factor, but the relation must still be kept
                        if wl > left.window.wmax or \
                                rb[1] > right.window.wmax or rb[1] < 0:
                            continue
                        for ll in left.basis(lb):
                            x = left.element(lb, ll)
                            for rl in right.basis(rb):
                                y = right.element(rb, rl)
                                rels.append(plain.pure(left.act_el(al, x), y)
                                            - plain.pure(x, right.act_el(ar, y)))
        return rels

    qm = QuotientModule(plain, relations_at, ring=env)
    qm.plain = plain
    return qm


# ---------------------------------------------------------------------------
# module homomorphisms


class ModuleHom:
    """A module map of shift (k, wshift), possibly over a ring hom.

    Linearity carries the sign phi(a.m) = (-1)^{ik} v(a).phi(m).  Two
    storage modes: generator images (source a FreeModule) or raw blocks.
    """

    def __init__(self, source: DgModule, target: DgModule, k: int = 0,
                 wshift: int = 0, gen_images: Optional[dict] = None,
                 blocks: Optional[dict] = None,
                 ring_hom: Optional[DgRingHom] = None,
                 name: Optional[str] = None):
        self.source = source
        self.target = target
        self.k = k
        self.wshift = wshift
        self.ring_hom = ring_hom
        self.name = name
        self.gen_images = gen_images
        self.blocks = blocks
        if gen_images is not None:
            if not isinstance(source, FreeModule):
                raise PreconditionError("generator images need a free source")
            for g in source.gens:
                img = gen_images.get(g.name)
                if img is None:
                    raise PreconditionError(f"missing image for generator {g.name}")
                hb = img.is_homogeneous()
                want = (g.deg + k, g.wt + wshift)
                if not img.is_zero() and hb != want:
                    raise StructuralError(
                        f"image of {g.name} must be homogeneous of bidegree {want}")
        elif blocks is None:
            self.blocks = {}
        self._img_cache: dict = {}

    def image(self, bd: Bidegree, label) -> El:
        key = (bd, label)
        if key not in self._img_cache:
            if self.gen_images is not None:
                gname, rbd, rl = label
                base = self.gen_images[gname]
                a = self.source.ring.element(rbd, rl) if self.ring_hom is None \
                    else self.ring_hom.image(rbd, rl)
                out = self.target.act_el(a, base).scale(koszul_sign(rbd[0], self.k))
            else:
                tb = (bd[0] + self.k, bd[1] + self.wshift)
                blk = self.blocks.get(bd)
                tl = self.target.basis(tb)
                out = self.target.zero()
                if blk is not None:
                    j = self.source.basis(bd).index(label)
                    coords = {}
                    for i in range(len(blk)):
                        if blk[i][j]:
                            coords[(tb, tl[i])] = blk[i][j]
                    out = El(self.target, coords)
            self._img_cache[key] = out
        return self._img_cache[key]

    def apply(self, el: El) -> El:
        out = self.target.zero()
        for (bd, l), c in el.coords.items():
            out = out + self.image(bd, l).scale(c)
        return out

    def as_chain_map(self) -> ChainMap:
        sp, tp = self.source.space(), self.target.space()
        f = ChainMap(self.source.complex(), self.target.complex(),
                     shift=self.k, wshift=self.wshift)
        for bd in self.source.bidegrees():
            tb = (bd[0] + self.k, bd[1] + self.wshift)
            n = tp.dim(tb)
            cols = []
            for l in self.source.basis(bd):
                img = self.image(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in img.coords.items():
                    col[tp.index(tb, l2)] = c
                cols.append(col)
            f.set_block(bd, from_columns(cols, n))
        return f

    def is_chain(self, bds: Optional[Iterable[Bidegree]] = None) -> bool:
        """d_T phi - (-1)^k phi d_S = 0 on the given source bidegrees."""
        sgn = koszul_sign(self.k, 1)
        for bd in (bds or self.source.bidegrees()):
            if bd[1] + self.wshift > self.target.window.wmax:
                continue
            for l in self.source.basis(bd):
                m = self.source.element(bd, l)
                if not (self.apply(m).d() - self.apply(m.d()).scale(sgn)).is_zero():
                    return False
        return True

    def compose(self, other: "ModuleHom") -> "ModuleHom":
        """self after other."""
        if other.target is not self.source:
            raise StructuralError("module homs not composable")
        blocks: dict = {}
        sp = other.source
        k = self.k + other.k
        ws = self.wshift + other.wshift
        tp = self.target.space()
        for bd in sp.bidegrees():
            tb = (bd[0] + k, bd[1] + ws)
            n = tp.dim(tb)
            cols = []
            for l in sp.basis(bd):
                img = self.apply(other.image(bd, l))
                col = [Q(0)] * n
                for (b2, l2), c in img.coords.items():
                    col[tp.index(tb, l2)] = c
                cols.append(col)
            blocks[bd] = from_columns(cols, n)
        rh = self.ring_hom or other.ring_hom
        if self.ring_hom is not None and other.ring_hom is not None:
            rh = self.ring_hom.compose(other.ring_hom)
        return ModuleHom(sp, self.target, k, ws, blocks=blocks, ring_hom=rh)

    def add(self, other: "ModuleHom") -> "ModuleHom":
        blocks: dict = {}
        tp = self.target.space()
        for bd in self.source.bidegrees():
            tb = (bd[0] + self.k, bd[1] + self.wshift)
            n = tp.dim(tb)
            cols = []
            for l in self.source.basis(bd):
                img = self.image(bd, l) + other.image(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in img.coords.items():
                    col[tp.index(tb, l2)] = c
                cols.append(col)
            blocks[bd] = from_columns(cols, n)
        return ModuleHom(self.source, self.target, self.k, self.wshift,
                         blocks=blocks, ring_hom=self.ring_hom)

    def scale(self, c: Fraction) -> "ModuleHom":
        if self.gen_images is not None:
            return ModuleHom(self.source, self.target, self.k, self.wshift,
                             gen_images={g: v.scale(c) for g, v in self.gen_images.items()},
                             ring_hom=self.ring_hom)
        blocks = {bd: [[c * x for x in row] for row in blk]
                  for bd, blk in self.blocks.items()}
        return ModuleHom(self.source, self.target, self.k, self.wshift,
                         blocks=blocks, ring_hom=self.ring_hom)

    def sub(self, other: "ModuleHom") -> "ModuleHom":
        return self.add(other.scale(Q(-1)))


def identity_module_hom(m: DgModule) -> ModuleHom:
    blocks = {}
    from .exactlin import identity
    for bd in m.bidegrees():
        blocks[bd] = identity(m.dim(bd))
    return ModuleHom(m, m, 0, 0, blocks=blocks)


def zero_module_hom(source: DgModule, target: DgModule, k: int = 0,
                    wshift: int = 0) -> ModuleHom:
    return ModuleHom(source, target, k, wshift, blocks={})


def scale_morphism(theta: ModuleHom, c: El) -> ModuleHom:
    """Post-multiply a chain map by a degree-0 cocycle of the target's ring."""
    hb = c.is_homogeneous()
    if c.is_zero():
        return zero_module_hom(theta.source, theta.target, theta.k, theta.wshift)
    if hb is None or hb[0] != 0:
        raise PreconditionError("scale class must be homogeneous of degree 0")
    if not c.d().is_zero():
        raise PreconditionError("scale representative must be a cocycle")
    tgt = theta.target
    if theta.gen_images is not None:
        return ModuleHom(theta.source, tgt, theta.k, theta.wshift + hb[1],
                         gen_images={g: tgt.act_el(c, v)
                                     for g, v in theta.gen_images.items()},
                         ring_hom=theta.ring_hom)
    blocks = {}
    tp = tgt.space()
    for bd in theta.source.bidegrees():
        tb = (bd[0] + theta.k, bd[1] + theta.wshift + hb[1])
        n = tp.dim(tb)
        cols = []
        for l in theta.source.basis(bd):
            img = tgt.act_el(c, theta.image(bd, l))
            col = [Q(0)] * n
            for (b2, l2), cc in img.coords.items():
                col[tp.index(tb, l2)] = cc
            cols.append(col)
        blocks[bd] = from_columns(cols, n)
    return ModuleHom(theta.source, tgt, theta.k, theta.wshift + hb[1],
                     blocks=blocks, ring_hom=theta.ring_hom)


# ---------------------------------------------------------------------------
# Hom complexes


class HomComplex:
    """Hom_A(M, N) for a free source M, tabulated per (degree, weight) shift.

    Basis at bidegree (q, t): pairs (generator g, target basis label at
    (deg g + q, wt g + t)).  Weights t may be negative.  Elements are El
    instances carried by this object; El.d() works through diff_label.
    """

    def __init__(self, source: FreeModule, target: DgModule):
        if not isinstance(source, FreeModule):
            raise PreconditionError("Hom complex needs a free source")
        if source.ring is not target.ring:
            raise StructuralError("Hom complex requires a shared ring")
        self.source = source
        self.target = target
        self.ring = None  # not a module over anything by default
        gd = [g.deg for g in source.gens] or [0]
        gw = [g.wt for g in source.gens] or [0]
        self.qlo = target.window.dlo - max(gd)
        self.qhi = target.window.dhi - min(gd)
        self.tlo = -max(gw)
        self.thi = target.window.wmax - max(gw)
        self._basis_cache: dict = {}
        self._diff_cache: dict = {}
        self._space: Optional[BigradedSpace] = None
        self._complex: Optional[Complex] = None

    def basis(self, bd: Bidegree) -> tuple:
        if bd not in self._basis_cache:
            q, t = bd
            out = []
            if self.qlo <= q <= self.qhi and self.tlo <= t <= self.thi:
                for g in self.source.gens:
                    for tl in self.target.basis((g.deg + q, g.wt + t)):
                        out.append((g.name, tl))
            self._basis_cache[bd] = tuple(out)
        return self._basis_cache[bd]

    def dim(self, bd: Bidegree) -> int:
        return len(self.basis(bd))

    def bidegrees(self) -> list[Bidegree]:
        out = []
        for q in range(self.qlo, self.qhi + 1):
            for t in range(self.tlo, self.thi + 1):
                if self.dim((q, t)):
                    out.append((q, t))
        return out

    def element(self, bd: Bidegree, label, c: Fraction = Q(1)) -> El:
        if label not in self.basis(bd):
            raise StructuralError(f"no Hom basis label {label!r} at {bd}")
        return El(self, {(bd, label): c})

    def zero(self) -> El:
        return El(self, {})

    def _apply_basis(self, qt: Bidegree, lab, el: El) -> El:
        """Apply the basis morphism (g, tl) at (q, t) to a source element."""
        q, t = qt
        g0, tl = lab
        g = self.source.gen_index[g0]
        base = self.target.element((g.deg + q, g.wt + t), tl)
        out = self.target.zero()
        for (bd, l), c in el.coords.items():
            gname, rbd, rl = l
            if gname != g0:
                continue
            r = self.source.ring.element(rbd, rl)
            out = out + self.target.act_el(r, base).scale(
                c * koszul_sign(rbd[0], q))
        return out

    def apply(self, hel: El, el: El) -> El:
        """Apply a Hom element (possibly inhomogeneous) to a source element."""
        out = self.target.zero()
        for (qt, lab), c in hel.coords.items():
            out = out + self._apply_basis(qt, lab, el).scale(c)
        return out

    def diff_label(self, bd: Bidegree, lab) -> El:
        key = (bd, lab)
        if key in self._diff_cache:
            return self._diff_cache[key]
        q, t = bd
        g0, tl = lab
        g = self.source.gen_index[g0]
        out: dict = {}
        # d_N after phi
        dn = self.target.diff_label((g.deg + q, g.wt + t), tl)
        for (nbd, nl), c in dn.coords.items():
            k = ((q + 1, t), (g0, nl))
            out[k] = out.get(k, Q(0)) + c
        # -(-1)^q phi after d_M, evaluated on every generator
        sgn = -koszul_sign(q, 1)
        for h in self.source.gens:
            dh = self.source.gen_diffs.get(h.name)
            if dh is None or dh.is_zero():
                continue
            v = self._apply_basis(bd, lab, dh)
            for (nbd, nl), c in v.coords.items():
                k = ((q + 1, t), (h.name, nl))
                out[k] = out.get(k, Q(0)) + sgn * c
        res = El(self, out)
        self._diff_cache[key] = res
        return res

    def space(self) -> BigradedSpace:
        if self._space is None:
            self._space = BigradedSpace({bd: self.basis(bd) for bd in self.bidegrees()})
        return self._space

    def d_map(self) -> BigradedMap:
        sp = self.space()
        d = BigradedMap(sp, sp, shift=1)
        for bd in self.bidegrees():
            tb = (bd[0] + 1, bd[1])
            n = sp.dim(tb)
            cols = []
            for l in self.basis(bd):
                dl = self.diff_label(bd, l)
                col = [Q(0)] * n
                for (b2, l2), c in dl.coords.items():
                    if b2 != tb:
                        raise StructuralError("Hom differential not of shift (+1,0)")
                    col[sp.index(tb, l2)] = c
                cols.append(col)
            d.set_block(bd, from_columns(cols, n))
        return d

    def complex(self) -> Complex:
        if self._complex is None:
            self._complex = Complex(self.space(), self.d_map())
        return self._complex

    def cohomology(self) -> dict:
        return self.complex().cohomology_dims()

    def from_module_hom(self, phi: ModuleHom) -> El:
        """The Hom-complex element of a map given by generator images."""
        coords: dict = {}
        for g in self.source.gens:
            img = phi.image(*next(iter(self.source.gen_el(g.name).coords))) \
                if phi.gen_images is None else phi.gen_images[g.name]
            img = phi.apply(self.source.gen_el(g.name))
            for (bd, l), c in img.coords.items():
                qt = (bd[0] - g.deg, bd[1] - g.wt)
                coords[(qt, (g.name, l))] = coords.get((qt, (g.name, l)), Q(0)) + c
        return El(self, coords)

    def to_module_hom(self, hel: El, k: int, wshift: int = 0) -> ModuleHom:
        """The module map of a homogeneous-shift Hom element."""
        gen_images = {}
        for g in self.source.gens:
            img = self.target.zero()
            for (qt, lab), c in hel.coords.items():
                if lab[0] != g.name:
                    continue
                if qt != (k, wshift):
                    raise PreconditionError("Hom element has mixed shift")
                img = img + self.target.element(
                    (g.deg + qt[0], g.wt + qt[1]), lab[1], c)
            gen_images[g.name] = img
        return ModuleHom(self.source, self.target, k, wshift,
                         gen_images=gen_images)


def hom_complex(m: FreeModule, n: DgModule) -> HomComplex:
    return HomComplex(m, n)


def induced_hom(hc0: HomComplex, hc1: HomComplex, zeta: ModuleHom,
                theta: ModuleHom) -> ChainMap:
    """Hom(zeta, theta): Hom(M0, N0) -> Hom(M1, N1), phi -> theta.phi.zeta.

    zeta: M1 -> M0 (possibly over a ring hom), theta: N0 -> N1 likewise;
    both must be chain maps of shift (0, 0).
    """
    def same_space(a, b):
        # a module and its restriction of scalars share basis labels
        return a is b or getattr(a, "parent", None) is b \
            or getattr(b, "parent", None) is a

    if zeta.k != 0 or theta.k != 0 or zeta.wshift != 0:
        raise PreconditionError("induced maps need degree-0 inputs")
    if zeta.source is not hc1.source or not same_space(zeta.target, hc0.source):
        raise StructuralError("zeta must map the new source to the old")
    if not same_space(theta.source, hc0.target) or theta.target is not hc1.target:
        raise StructuralError("theta must map the old target to the new")
    ws = theta.wshift
    f = ChainMap(hc0.complex(), hc1.complex(), shift=0, wshift=ws)
    sp1 = hc1.space()
    for bd in hc0.bidegrees():
        if bd[1] + ws > hc1.thi:
            # weight is preserved by the differentials, so dropping the
            # weights that escape the target tabulation is exact
            continue
        tb = (bd[0], bd[1] + ws)
        n = sp1.dim(tb)
        cols = []
        for lab in hc0.basis(bd):
            coords: dict = {}
            for g in hc1.source.gens:
                val = theta.apply(hc0._apply_basis(
                    bd, lab, zeta.apply(hc1.source.gen_el(g.name))))
                for (nbd, nl), c in val.coords.items():
                    qt = (nbd[0] - g.deg, nbd[1] - g.wt)
                    if qt != tb:
                        raise StructuralError("induced image not of the same shift")
                    coords[(qt, (g.name, nl))] = coords.get(
                        (qt, (g.name, nl)), Q(0)) + c
            col = [Q(0)] * n
            for (b2, l2), c in coords.items():
                col[sp1.index(tb, l2)] = c
            cols.append(col)
        f.set_block(bd, from_columns(cols, n))
    return f


# ---------------------------------------------------------------------------
# module cylinders


class CylinderModule(DgModule):
    """Cyl(M) over Cyl(A): e0.M + e1.M + xi.M with xi of degree +1."""

    def __init__(self, cyl_ring, parent: DgModule):
        w = parent.window
        super().__init__(cyl_ring, Window(w.dlo, w.dhi + 1, w.wmax))
        self.parent = parent

    def _basis(self, bd):
        out = [(p, bd, l) for p in (0, 1) for l in self.parent.basis(bd)]
        pb = (bd[0] - 1, bd[1])
        out += [("x", pb, l) for l in self.parent.basis(pb)]
        return tuple(out)

    def inject(self, part, el: El) -> El:
        shiftd = 1 if part == "x" else 0
        return El(self, {((bd[0] + shiftd, bd[1]), (part, bd, l)): c
                         for (bd, l), c in el.coords.items()})

    def _act(self, rbd, rl, bd, l) -> El:
        rpart, rb, rlab = rl
        mpart, mb, mlab = l
        a = self.ring.parent.element(rb, rlab)
        m = self.parent.element(mb, mlab)
        if rpart in (0, 1) and mpart in (0, 1):
            if rpart != mpart:
                return self.zero()
            return self.inject(mpart, self.parent.act_el(a, m))
        if rpart == 0 and mpart == "x":
            return self.inject("x", self.parent.act_el(a, m)).scale(
                koszul_sign(rb[0], 1))
        if rpart == "x" and mpart == 1:
            return self.inject("x", self.parent.act_el(a, m))
        return self.zero()

    def _diff(self, bd, l) -> El:
        part, mb, mlab = l
        m = self.parent.element(mb, mlab)
        if part == 0:
            return self.inject(0, m.d()) - self.inject("x", m)
        if part == 1:
            return self.inject(1, m.d()) + self.inject("x", m)
        return self.inject("x", m.d()).scale(Q(-1))

    def eps(self) -> ModuleHom:
        """The diagonal M -> Cyl(M), a chain map over the ring diagonal."""
        blocks = {}
        sp = self.space()
        for bd in self.parent.bidegrees():
            n = sp.dim(bd)
            cols = []
            for l in self.parent.basis(bd):
                col = [Q(0)] * n
                col[sp.index(bd, (0, bd, l))] = Q(1)
                col[sp.index(bd, (1, bd, l))] = Q(1)
                cols.append(col)
            blocks[bd] = from_columns(cols, n)
        return ModuleHom(self.parent, self, 0, 0, blocks=blocks)

    def eta(self, which: int) -> ModuleHom:
        blocks = {}
        sp = self.parent.space()
        for bd in self.bidegrees():
            n = sp.dim(bd)
            cols = []
            for (part, mb, mlab) in self.basis(bd):
                col = [Q(0)] * n
                if part == which:
                    col[sp.index(bd, mlab)] = Q(1)
                cols.append(col)
            blocks[bd] = from_columns(cols, n)
        return ModuleHom(self, self.parent, 0, 0, blocks=blocks)


def cylinder_module(cyl_ring, m: DgModule) -> CylinderModule:
    return CylinderModule(cyl_ring, m)
