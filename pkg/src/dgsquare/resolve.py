"""Resolutions and lifting for nonpositive DG rings and modules.

Builds semi-free ring resolutions (a Tate-style tower of generators
killing cohomology defects, plus contractible pairs enforcing
degreewise surjectivity), semi-free module resolutions via cone
defects, lifts of ring homomorphisms along resolutions, homotopies
between such lifts with their cylinder encoding, and lifting of module
maps through quasi-isomorphisms.
"""

import random
from dataclasses import dataclass
from typing import Callable, Optional

from .exactlin import (
    Bidegree, DepthError, PreconditionError, Q, StructuralError,
    from_columns, hstack, in_span, is_quasi_iso_chain, kernel_basis,
    mat_vec, solve, vstack, zeros,
)
from .dgcore import (
    CylinderAlgebra, DgAlgebra, DgRingHom, El, Gen, GroundRing,
    SemifreeAlgebra, Window, hom_from_images, koszul_sign,
)
from .dgmod import DgModule, FreeModule, MGen, ModuleHom


def _vec(carrier, el: El, bd: Bidegree) -> list:
    basis = carrier.basis(bd)
    v = [Q(0)] * len(basis)
    for (b2, l2), c in el.coords.items():
        if b2 != bd:
            raise StructuralError("element not homogeneous at the expected bidegree")
        v[basis.index(l2)] = c
    return v

def _el(carrier, bd: Bidegree, vec) -> El:
    basis = carrier.basis(bd)
    return El(carrier, {(bd, basis[i]): c for i, c in enumerate(vec) if c})


# ---------------------------------------------------------------------------
# Koszul rings


def koszul(ground: GroundRing, elems: list[tuple[dict, int]],
           window: Optional[Window] = None, name: Optional[str] = None
           ) -> SemifreeAlgebra:
    """The Koszul ring on weight-homogeneous degree-0 ground elements."""
    gens = [Gen(f"e{i}", -1, w) for i, (_, w) in enumerate(elems)]
    if window is None:
        window = Window(-len(elems) - 1, 0, ground.wmax)
    alg = SemifreeAlgebra(ground, gens, "sc", window,
                          name=name or f"K({ground.name};{len(elems)})")
    for i, (poly, w) in enumerate(elems):
        alg.set_gen_diff(f"e{i}", alg.ground_el(poly, w))
    alg.validate()
    return alg


# ---------------------------------------------------------------------------
# ring resolutions


@dataclass
class RingResolution:
    """A semi-free resolution s: tilde -> target over the given base.

    ``s`` is a degreewise-surjective quasi-isomorphism of DG rings;
    cohomology agreement is certified for degrees in ``certified``.
    """
    base: GroundRing
    target: DgAlgebra
    tilde: SemifreeAlgebra
    s: DgRingHom
    certified: tuple[int, int]
    depth: int

    def verify(self) -> None:
        self.tilde.validate()
        self.s.check([bd for bd in self.tilde.bidegrees()
                      if self.tilde.window.contains((bd[0] + 1, bd[1]))],
                     mult=False)
        if not self.s.is_quasi_iso(self.certified):
            raise DepthError("resolution is not a quasi-isomorphism "
                             "on its certified range")


def _rebuild(F: SemifreeAlgebra, B: DgAlgebra, var_images: dict,
             gen_images: dict, new_gens: list[Gen], new_diffs: dict,
             new_images: dict, check: bool = False):
    """Extend the tower by generators with assigned d and s values."""
    F2 = F.extend(new_gens)
    for nm, de in new_diffs.items():
        F2.set_gen_diff(nm, El(F2, dict(de.coords)))
    gen_images = dict(gen_images)
    gen_images.update(new_images)
    v2 = hom_from_images(F2, B, var_images, gen_images, check=check)
    return F2, v2


def is_surjective(v: DgRingHom, degrees: tuple[int, int]) -> bool:
    """Degreewise surjectivity of a ring hom on its tabulated weights."""
    B = v.target
    lo, hi = degrees
    for bd in B.bidegrees():
        if not lo <= bd[0] <= hi:
            continue
        n = B.dim(bd)
        cols = []
        for l in v.source.basis(bd):
            cols.append(_vec(B, v.image(bd, l), bd))
        span = from_columns(cols, n)
        for i in range(n):
            e = [Q(1) if j == i else Q(0) for j in range(n)]
            if in_span(span, e) is None:
                return False
    return True


def resolve_ring(base: GroundRing, B: DgAlgebra,
                 embed_base: Optional[Callable[[dict, int], El]],
                 depth: int, dlo: Optional[int] = None,
                 wmax: Optional[int] = None,
                 flavor: str = "sc",
                 name: Optional[str] = None) -> RingResolution:
    """Semi-free resolution of B as an algebra over the base ground ring.

    The tower starts from the base together with degree-0 polynomial
    generators surjecting onto the degree-0 part of B, then descends one
    degree per stage: contractible pairs restore degreewise
    surjectivity, new generators kill the kernel of H one degree up and
    hit the cokernel of H in the current degree.
    """
    if wmax is None:
        wmax = min(base.wmax, B.window.wmax)
    if dlo is None:
        dlo = -(depth + 2)
    if embed_base is None:
        embed_base = lambda poly, w: B.ground_el(poly, w)

    # stage 0: degree-0 polynomial generators covering B^0
    deg0 = [Gen(f"t_{nm}", 0, w) for nm, w in B.ground.vars]
    F = SemifreeAlgebra(base, deg0, flavor, Window(dlo, 0, wmax),
                        name=name or f"res({getattr(B, 'name', 'B')})")
    nvars = len(base.vars)
    var_images = {nm: embed_base({tuple(1 if i == k else 0
                                        for i in range(nvars)): Q(1)}, w)
                  for k, (nm, w) in enumerate(base.vars)}
    gen_images = {f"t_{nm}": B.var_el(nm) for nm, w in B.ground.vars}
    v = hom_from_images(F, B, var_images, gen_images, check=True)

    counter = [0]

    def fresh(tag):
        counter[0] += 1
        return f"{tag}{counter[0]}"

    Bcx = B.complex()
    for j in range(-1, -depth - 1, -1):
        # (1) kill the kernel of H^{j+1}(v), one weight at a time so
        # that lower-weight generators absorb their multiples first
        for w in range(0, wmax + 1):
            cm = v.as_chain_map()
            Fcx = cm.source
            bd = (j + 1, w)
            hs = Fcx.cohomology(bd)
            if hs.dim == 0:
                continue
            mat = cm.induced_on_cohomology(bd)
            new_gens, new_diffs, new_images = [], {}, {}
            for kv in kernel_basis(mat, hs.dim):
                amb = [Q(0)] * Fcx.dim(bd)
                for i, c in enumerate(kv):
                    for r, x in enumerate(hs.reps[i]):
                        amb[r] += c * x
                c_el = _el(F, bd, amb)
                rhs = _vec(B, v.apply(c_el), bd)
                bvec = solve(Bcx.d.block((j, w)), rhs)
                if bvec is None:
                    raise DepthError("kernel class has no bounding element")
                bvec = bvec + [Q(0)] * (B.dim((j, w)) - len(bvec))
                nm = fresh("k")
                new_gens.append(Gen(nm, j, w))
                new_diffs[nm] = c_el
                new_images[nm] = _el(B, (j, w), bvec)
            if new_gens:
                F, v = _rebuild(F, B, var_images, gen_images, new_gens,
                                new_diffs, new_images)
                gen_images.update(new_images)

        # (2) hit the cokernel of H^j(v), minimally per ascending weight
        cm = v.as_chain_map()
        Fcx = cm.source
        h0_reps = {}  # weight -> positive-weight degree-0 cocycle reps of B
        for w in range(1, wmax + 1):
            h0_reps[w] = [_el(B, (0, w), r) for r in Bcx.cohomology((0, w)).reps]
        chosen: list[tuple[El, int]] = []
        new_gens, new_diffs, new_images = [], {}, {}
        for w in range(0, wmax + 1):
            bd = (j, w)
            ht = Bcx.cohomology(bd)
            if ht.dim == 0:
                continue
            cols = []
            hs = Fcx.cohomology(bd)
            if hs.dim:
                m = cm.induced_on_cohomology(bd)
                cols = [[m[r][i] for r in range(len(m))] for i in range(hs.dim)]
            for z, wz in chosen:
                for h in h0_reps.get(w - wz, []):
                    qc = ht.reduce(_vec(B, h * z, bd))
                    if qc is not None:
                        cols.append(qc)
            span = from_columns(cols, ht.dim)
            for i in range(ht.dim):
                e = [Q(1) if r == i else Q(0) for r in range(ht.dim)]
                if in_span(span, e) is not None:
                    continue
                z_el = _el(B, bd, ht.reps[i])
                nm = fresh("c")
                new_gens.append(Gen(nm, j, w))
                new_images[nm] = z_el
                chosen.append((z_el, w))
                span = hstack(span, from_columns([e], ht.dim))
        if new_gens:
            F, v = _rebuild(F, B, var_images, gen_images, new_gens,
                            new_diffs, new_images)
            gen_images.update(new_images)

        # (3) restore degreewise surjectivity at degree j with
        # contractible pairs (invisible in cohomology)
        new_gens, new_diffs, new_images = [], {}, {}
        pending: list[tuple] = []
        for w in range(0, wmax + 1):
            bd = (j, w)
            n = B.dim(bd)
            if n == 0:
                continue
            cols = [_vec(B, v.image(bd, l), bd) for l in F.basis(bd)]
            span = from_columns(cols, n)
            for i in range(n):
                e = [Q(1) if r == i else Q(0) for r in range(n)]
                if in_span(span, e) is not None:
                    continue
                b_el = _el(B, bd, e)
                nz, nzp = fresh("z"), fresh("w")
                new_gens.append(Gen(nzp, j + 1, w))
                new_gens.append(Gen(nz, j, w))
                new_images[nzp] = b_el.d()
                new_images[nz] = b_el
                pending.append((nz, nzp, j + 1, w))
                span = hstack(span, from_columns([e], n))
        if new_gens:
            F2 = F.extend(new_gens)
            for nz, nzp, dg, w in pending:
                F2.set_gen_diff(nz, F2.gen_el(nzp))
            gen_images.update(new_images)
            v = hom_from_images(F2, B, var_images, gen_images, check=False)
            F = F2

    v = hom_from_images(F, B, var_images, gen_images, check=True)
    F.validate()
    return RingResolution(base=base, target=B, tilde=F, s=v,
                          certified=(-depth + 1, 0), depth=depth)


def add_contractible_pair(res: RingResolution, deg: int, wt: int,
                          tag: str = "pad") -> RingResolution:
    """Pad a resolution with a contractible pair mapping to zero.

    Adds generators p at (deg, wt) and q at (deg+1, wt) with d(p) = q
    and s(p) = s(q) = 0; cohomology and surjectivity are unchanged.
    """
    k = sum(1 for g in res.tilde.gens if g.name.startswith(tag)) // 2
    np_, nq = f"{tag}p{k}", f"{tag}q{k}"
    F2 = res.tilde.extend([Gen(nq, deg + 1, wt), Gen(np_, deg, wt)])
    F2.set_gen_diff(np_, F2.gen_el(nq))
    gen_images = {g.name: res.s.apply(res.tilde.gen_el(g.name))
                  for g in res.tilde.gens}
    gen_images[np_] = res.target.zero()
    gen_images[nq] = res.target.zero()
    var_images = {nm: res.s.apply(res.tilde.var_el(nm))
                  for nm, _ in res.base.vars}
    s2 = hom_from_images(F2, res.target, var_images, gen_images, check=True)
    return RingResolution(base=res.base, target=res.target, tilde=F2, s=s2,
                          certified=res.certified, depth=res.depth)


def identity_resolution(B: SemifreeAlgebra, base: GroundRing,
                        depth: int) -> RingResolution:
    """A semi-free B used as its own resolution (s = identity)."""
    from .dgcore import identity_hom
    return RingResolution(base=base, target=B, tilde=B, s=identity_hom(B),
                          certified=(B.window.dlo + 1, 0), depth=depth)


# ---------------------------------------------------------------------------
# lifting ring homomorphisms


def _sorted_gens(alg: SemifreeAlgebra):
    return sorted(alg.gens, key=lambda g: (-g.deg, g.wt, g.name))


def _partial_eval(src: SemifreeAlgebra, tgt: DgAlgebra, var_images: dict,
                  gen_images: dict, el: El) -> El:
    """Evaluate a hom given by images on an element whose monomials only
    involve generators already present in gen_images."""
    out = tgt.zero()
    for (bd, (gm, word)), c in el.coords.items():
        gw = bd[1] - sum(src.gens[i].wt for i in word)
        term = _ground_image(src, tgt, var_images, gm, gw)
        for i in word:
            term = term * gen_images[src.gens[i].name]
        out = out + term.scale(c)
    return out


def _ground_image(src: SemifreeAlgebra, tgt: DgAlgebra, var_images: dict,
                  gm: tuple, gw: int) -> El:
    out = tgt.unit()
    for k, e in enumerate(gm):
        nm, w = src.ground.vars[k]
        for _ in range(e):
            out = out * var_images[nm]
    return out


def lift_ring_hom(src: RingResolution, tgt: RingResolution, v: DgRingHom,
                  seed: Optional[int] = None,
                  name: Optional[str] = None) -> DgRingHom:
    """Lift v: B -> B' to w: tilde(B) -> tilde(B') with s' w = v s.

    Generators are lifted in descending degree by solving the stacked
    linear system d(b) = w(d x), s'(b) = v(s(x)); the target resolution
    must be degreewise surjective (resolve_ring output is).  A seed
    shifts each solution by a pseudo-random element of the solution
    space, producing different strictly-commuting lifts.
    """
    if src.base is not tgt.base and src.base.key() != tgt.base.key():
        raise PreconditionError("lift requires resolutions over the same base")
    rng = random.Random(seed) if seed is not None else None
    Bp = tgt.tilde
    Bpcx = Bp.complex()
    scm = tgt.s.as_chain_map()
    var_images = {nm: Bp.ground_el({tuple(1 if i == k else 0
                                    for i in range(len(src.base.vars))): Q(1)}, w)
                  for k, (nm, w) in enumerate(src.base.vars)}
    gen_images: dict = {}
    for g in _sorted_gens(src.tilde):
        bd = (g.deg, g.wt)
        dx = src.tilde.gen_el(g.name).d()
        rhs1 = _partial_eval(src.tilde, Bp, var_images, gen_images, dx)
        rhs2 = v.apply(src.s.apply(src.tilde.gen_el(g.name)))
        mat = vstack(Bpcx.d.block(bd), scm.block(bd))
        vec = _vec(Bp, rhs1, (bd[0] + 1, bd[1])) + _vec(v.target, rhs2, bd)
        sol = solve(mat, vec)
        if sol is None:
            raise DepthError(f"no lift for generator {g.name} at {bd}; "
                             "target resolution too shallow or not surjective")
        sol = sol + [Q(0)] * (Bp.dim(bd) - len(sol))
        if rng is not None:
            for kv in kernel_basis(mat, Bp.dim(bd)):
                c = Q(rng.randint(-1, 1))
                if c:
                    sol = [a + c * b for a, b in zip(sol, kv)]
        gen_images[g.name] = _el(Bp, bd, sol)
    return hom_from_images(src.tilde, Bp, var_images, gen_images,
                           check=True, name=name)


# ---------------------------------------------------------------------------
# homotopies between ring homs


class RingHomotopy:
    """A degree -1 (w0, w1)-derivation gamma with w0 - w1 = d gamma + gamma d.

    Requires a noncommutatively semi-free source: gamma extends from
    generator values over each word by
    gamma(x_1 ... x_m) = sum_i +- w0(x_1 .. x_{i-1}) gamma(x_i) w1(x_{i+1} .. x_m).
    """

    def __init__(self, source: SemifreeAlgebra, target: DgAlgebra,
                 w0: DgRingHom, w1: DgRingHom, gamma_gens: dict,
                 gamma_vars: Optional[dict] = None):
        if source.flavor != "nc":
            raise PreconditionError(
                "ring homotopies need a noncommutatively semi-free source")
        self.source = source
        self.target = target
        self.w0 = w0
        self.w1 = w1
        self.gamma_gens = gamma_gens
        self.gamma_vars = gamma_vars or {}

    def apply(self, el: El) -> El:
        out = self.target.zero()
        src = self.source
        for (bd, (gm, word)), c in el.coords.items():
            gw = bd[1] - sum(src.gens[i].wt for i in word)
            ground_poly = El(src, {(((0, gw)), (gm, ())): Q(1)})
            g0 = self.w0.apply(ground_poly)  # ground is degree 0: no sign
            sign = 1
            for i, gi in enumerate(word):
                gname = src.gens[gi].name
                gv = self.gamma_gens.get(gname)
                if gv is not None and not gv.is_zero():
                    pre = self.w0.apply(El(src, {_word_key(src, word[:i]): Q(1)}))
                    post = self.w1.apply(El(src, {_word_key(src, word[i + 1:]): Q(1)}))
                    term = g0 * pre * gv * post
                    out = out + term.scale(c * Q(sign))
                sign *= (-1) ** (src.gens[gi].deg % 2)
        return out

    def check(self, bds=None) -> None:
        src = self.source
        for bd in (bds or src.bidegrees()):
            if not src.window.contains((bd[0] + 1, bd[1])):
                continue
            for l in src.basis(bd):
                x = src.element(bd, l)
                lhs = self.w0.apply(x) - self.w1.apply(x)
                rhs = self.apply(x).d() + self.apply(x.d())
                if not (lhs - rhs).is_zero():
                    raise StructuralError(f"homotopy identity fails at {bd} {l!r}")


def _word_key(src: SemifreeAlgebra, word: tuple):
    deg = sum(src.gens[i].deg for i in word)
    wt = sum(src.gens[i].wt for i in word)
    gm = src.ground.unit_label()
    return ((deg, wt), (gm, word))


def build_ring_homotopy(src: SemifreeAlgebra, tgt_res: RingResolution,
                        w0: DgRingHom, w1: DgRingHom) -> RingHomotopy:
    """Homotopy between two lifts agreeing after the target resolution map.

    Solves, generator by generator in descending degree, the stacked
    system d(g) = w0(x) - w1(x) - gamma(d x), s(g) = 0.
    """
    if src.flavor != "nc":
        raise PreconditionError(
            "ring homotopies need a noncommutatively semi-free source")
    C = tgt_res.tilde
    Ccx = C.complex()
    scm = tgt_res.s.as_chain_map()
    gamma = RingHomotopy(src, C, w0, w1, {})
    for nm, _ in src.ground.vars:
        if not (w0.apply(src.var_el(nm)) - w1.apply(src.var_el(nm))).is_zero():
            raise PreconditionError("lifts differ on the ground ring")
    for g in _sorted_gens(src):
        x = src.gen_el(g.name)
        c_el = w0.apply(x) - w1.apply(x) - gamma.apply(x.d())
        bd = (g.deg, g.wt)
        hbd = (g.deg - 1, g.wt)
        if not c_el.is_zero() and c_el.is_homogeneous() != bd:
            raise StructuralError("homotopy defect not homogeneous")
        mat = vstack(Ccx.d.block(hbd), scm.block(hbd))
        vec = _vec(C, c_el, bd) + [Q(0)] * tgt_res.target.dim(hbd)
        sol = solve(mat, vec)
        if sol is None:
            raise DepthError(f"no homotopy value for generator {g.name}")
        sol = sol + [Q(0)] * (C.dim(hbd) - len(sol))
        gamma.gamma_gens[g.name] = _el(C, hbd, sol)
    return gamma


def homotopy_cylinder_encode(gamma: RingHomotopy,
                             cyl: CylinderAlgebra) -> DgRingHom:
    """The DG ring hom source -> Cyl(target) packaging (w0, gamma, w1)."""
    if cyl.parent is not gamma.target:
        raise StructuralError("cylinder must be over the homotopy's target")
    src = gamma.source
    var_images = {}
    for nm, _ in src.ground.vars:
        a = src.var_el(nm)
        var_images[nm] = cyl.inject(0, gamma.w0.apply(a)) \
            + cyl.inject(1, gamma.w1.apply(a))
    gen_images = {}
    for g in src.gens:
        x = src.gen_el(g.name)
        gen_images[g.name] = cyl.inject(0, gamma.w0.apply(x)) \
            + cyl.inject("x", gamma.apply(x).scale(Q(-1))) \
            + cyl.inject(1, gamma.w1.apply(x))
    return hom_from_images(src, cyl, var_images, gen_images, check=True)


def homotopy_cylinder_decode(u: DgRingHom, cyl: CylinderAlgebra,
                             w0: DgRingHom, w1: DgRingHom) -> RingHomotopy:
    """Recover the homotopy from a hom into the cylinder and verify it."""
    src = u.source
    gamma_gens = {}
    for g in src.gens:
        x = src.gen_el(g.name)
        part0, partx, part1 = _split(cyl, u.apply(x))
        if not (part0 - w0.apply(x)).is_zero() or not (part1 - w1.apply(x)).is_zero():
            raise StructuralError(
                f"cylinder hom does not restrict to the given lifts at {g.name}")
        gamma_gens[g.name] = partx.scale(Q(-1))
    gamma = RingHomotopy(src, cyl.parent, w0, w1, gamma_gens)
    gamma.check()
    return gamma


def _split(cyl: CylinderAlgebra, el: El):
    parts = {0: {}, 1: {}, "x": {}}
    for (bd, (part, pbd, pl)), c in el.coords.items():
        parts[part][(pbd, pl)] = c
    p = cyl.parent
    return El(p, parts[0]), El(p, parts["x"]), El(p, parts[1])


# ---------------------------------------------------------------------------
# module resolutions


@dataclass
class ModuleResolution:
    target: DgModule
    module: FreeModule
    alpha: ModuleHom
    certified: tuple[int, int]
    # set when the comparison cone is acyclic throughout the window
    exhaustive: bool = False

    def verify(self) -> None:
        self.module.validate()
        if not self.alpha.is_chain():
            raise StructuralError("resolution comparison map is not a chain map")
        if not is_quasi_iso_module(self.alpha, self.certified):
            raise DepthError("module resolution not a quasi-isomorphism "
                             "on its certified range")


def is_quasi_iso_module(f: ModuleHom, degrees: tuple[int, int]) -> bool:
    return is_quasi_iso_chain(f.as_chain_map(), degrees)


def resolve_module(M: DgModule, depth: int, top: Optional[int] = None,
                   name: Optional[str] = None) -> ModuleResolution:
    """Semi-free resolution of a module by killing cone cohomology.

    Descends one degree per stage from the top of the module, adjoining
    for each cone class (n, p) a generator e with d(e) = -p and
    alpha(e) = n.
    """
    from .dgmod import ConeModule
    ring = M.ring
    if top is None:
        hs = [bd[0] for bd, d in M.cohomology().items() if d]
        top = max(hs) if hs else 0
    gens: list[MGen] = []
    gen_diffs: dict = {}
    gen_images: dict = {}
    count = [0]
    P = FreeModule(ring, [], name=name)
    alpha = ModuleHom(P, M, gen_images={})
    for k in range(top, top - depth, -1):
        # one weight at a time, so lower-weight generators absorb their
        # module multiples before higher weights are inspected
        for w in range(0, M.window.wmax + 1):
            cn = ConeModule(alpha)
            cx = cn.complex()
            bd = (k, w)
            blk = cx.cohomology(bd)
            if blk.dim == 0:
                continue
            new = []
            for rep in blk.reps:
                n_coords, p_coords = {}, {}
                basis = cn.basis(bd)
                for i, c in enumerate(rep):
                    if not c:
                        continue
                    part, lab = basis[i]
                    if part == "n":
                        n_coords[(bd, lab)] = c
                    else:
                        p_coords[((bd[0] + 1, bd[1]), lab)] = c
                count[0] += 1
                nm = f"g{count[0]}"
                new.append((MGen(nm, k, w), El(M, n_coords), El(P, p_coords)))
            gens = gens + [g for g, _, _ in new]
            P2 = FreeModule(ring, gens, name=name)
            for g, n_el, p_el in new:
                gen_diffs[g.name] = El(P2, {k2: -v2
                                            for k2, v2 in p_el.coords.items()})
                gen_images[g.name] = n_el
            for nm, de in gen_diffs.items():
                P2.set_gen_diff(nm, El(P2, dict(de.coords)))
            P = P2
            alpha = ModuleHom(P, M, gen_images=dict(gen_images))
    P.validate()
    # the staged construction guarantees an acyclic cone in degrees
    # >= top - depth + 1; extend the certificate downward while the
    # cone stays acyclic (e.g. when the resolution terminated early)
    lo_cert = top - depth + 2
    cn = ConeModule(alpha)
    cx = cn.complex()
    floor = max(M.window.dlo, P.window.dlo) + 1
    k = top - depth
    while k >= floor:
        if any(cx.cohomology((k, w)).dim
               for w in range(0, M.window.wmax + 1)):
            break
        lo_cert = k + 1
        k -= 1
    return ModuleResolution(target=M, module=P, alpha=alpha,
                            certified=(lo_cert, top), exhaustive=k < floor)


# ---------------------------------------------------------------------------
# lifting module maps through quasi-isomorphisms


def lift_through_qiso(f: ModuleHom, alpha: ModuleHom,
                      seed: Optional[int] = None
                      ) -> tuple[ModuleHom, ModuleHom]:
    """Lift f: S -> M through a quasi-isomorphism alpha: P -> M.

    S must be free.  Returns (g, sigma) with g: S -> P a chain map and
    sigma: S -> M a degree -1 map satisfying alpha g - f = d sigma + sigma d.
    Works whenever the cone of alpha is acyclic where needed; alpha need
    not be surjective.
    """
    S = f.source
    if not isinstance(S, FreeModule):
        raise PreconditionError("lifting needs a free source")
    if f.k:
        raise PreconditionError("lifting needs a degree-0 map")
    ws = f.wshift
    P, M = alpha.source, alpha.target
    rng = random.Random(seed) if seed is not None else None
    Pcx = P.complex()
    Mcx = M.complex()
    acm = alpha.as_chain_map()
    g_images: dict = {}
    s_images: dict = {}
    order = sorted(S.gens, key=lambda x: (-x.deg, x.wt, x.name))
    def apply_g(el):
        out = P.zero()
        for (bd, (gn, rbd, rl)), c in el.coords.items():
            r = S.ring.element(rbd, rl)
            out = out + P.act_el(r, g_images[gn]).scale(c)
        return out
    def apply_s(el):
        out = M.zero()
        for (bd, (gn, rbd, rl)), c in el.coords.items():
            r = S.ring.element(rbd, rl)
            sgn = koszul_sign(rbd[0], 1)
            out = out + M.act_el(r, s_images[gn]).scale(c * sgn)
        return out
    for gen in order:
        bd = (gen.deg, gen.wt + ws)
        hbd = (gen.deg - 1, gen.wt + ws)
        dx = S.gen_el(gen.name).d()
        rhs1 = apply_g(dx)                      # = d_P(g(x))
        rhs2 = f.apply(S.gen_el(gen.name)) + apply_s(dx)  # = alpha(g x) - d sigma(x)
        np_ = P.dim(bd)
        nq = M.dim(hbd)
        n1 = P.dim((bd[0] + 1, bd[1]))
        top = hstack(Pcx.d.block(bd), zeros(n1, nq))
        bot = hstack(acm.block(bd),
                     [[-x for x in row] for row in Mcx.d.block(hbd)])
        mat = vstack(top, bot)
        vec = _vec(P, rhs1, (bd[0] + 1, bd[1])) + _vec(M, rhs2, bd)
        sol = solve(mat, vec)
        if sol is None:
            raise DepthError(f"cannot lift generator {gen.name} through "
                             "the quasi-isomorphism (cone not acyclic there)")
        sol = sol + [Q(0)] * (np_ + nq - len(sol))
        if rng is not None:
            for kv in kernel_basis(mat, np_ + nq):
                c = Q(rng.randint(-1, 1))
                if c:
                    sol = [a + c * b for a, b in zip(sol, kv)]
        g_images[gen.name] = _el(P, bd, sol[:np_])
        s_images[gen.name] = _el(M, hbd, sol[np_:])
    g = ModuleHom(S, P, wshift=ws, gen_images=g_images)
    sigma = ModuleHom(S, M, k=-1, wshift=ws, gen_images=s_images)
    return g, sigma
