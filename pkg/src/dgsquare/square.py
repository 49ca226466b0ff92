"""The rectangle and squaring operations over enveloping DG rings.

For a ring B resolved by a strongly commutative semi-free tower over a
base ground ring A, the rectangle of a pair of B-modules is the Hom
complex over the enveloping ring

    Rect(M^l, M^r) = Hom_{T^en}(P_B, P^l (x)_A P^r)

where T^en = tower (x)_A tower, P_B is a semi-free resolution of B as a
T^en-module, and P^l, P^r are semi-free resolutions of the modules over
the tower.  Squaring is the diagonal case M^l = M^r.  Induced morphisms
between rectangles over different towers are computed by an explicit
zigzag of Hom-complex maps whose middle leg is inverted up to homotopy.
"""

from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Optional

from .exactlin import (ChainMap, DepthError, PreconditionError,
                       StructuralError, from_columns, homotopy_inverse,
                       nullhomotopy)
from .dgcore import (DgAlgebra, DgRingHom, El, GroundRing, QuotientAlgebra,
                     SemifreeAlgebra, identity_hom, tensor_rings)
from .dgmod import (BimoduleFromAlgebra, DgModule, FreeModule, HomComplex,
                    ModuleHom, QuotientModule, RestrictedModule,
                    identity_module_hom, induced_hom, restrict_scalars,
                    tensor_over_base)
from .resolve import (ModuleResolution, RingResolution, lift_ring_hom,
                      lift_through_qiso, resolve_module)


# ---------------------------------------------------------------------------
# pairs and their enveloping rings


class DgPair:
    """A ring over a strongly commutative base, with a chosen resolution.

    Wraps a RingResolution; when the ring is already semi-free over the
    base (declared K-flat), use ``identity_resolution`` to build it.
    """

    def __init__(self, resolution: RingResolution):
        if not resolution.tilde.sc:
            raise PreconditionError(
                "squaring requires a strongly commutative tower")
        self.res = resolution
        self.base = resolution.base
        self.ring = resolution.target
        self.tilde = resolution.tilde
        self._env: Optional[QuotientAlgebra] = None

    def embed_base(self, poly: dict, w: int) -> El:
        return self.tilde.ground_el(poly, w)

    def env(self) -> QuotientAlgebra:
        """tower (x)_A tower, cached."""
        if self._env is None:
            self._env = tensor_rings(self.tilde, self.tilde, self.base,
                                     self.embed_base, self.embed_base,
                                     name=f"{self.tilde.name}^en")
        return self._env


def env_hom(env_from: QuotientAlgebra, env_to: QuotientAlgebra,
            w: DgRingHom, name: str = "") -> DgRingHom:
    """w (x) w between enveloping rings, for w between the towers."""
    t = env_to.tensor

    def fn(bd, label):
        bda, la, bdb, lb = label
        xa = w.apply(w.source.element(bda, la))
        xb = w.apply(w.source.element(bdb, lb))
        return env_to.project(t.pure(xa, xb))

    return DgRingHom(env_from, env_to, fn, name=name or "w^en")


# ---------------------------------------------------------------------------
# hom transplanting across restriction of scalars


def transplant_hom(h: ModuleHom, source: DgModule, target: DgModule,
                   k: Optional[int] = None, wshift: Optional[int] = None
                   ) -> ModuleHom:
    """Rebuild a hom between label-compatible modules (e.g. restrictions).

    The new source/target must have the same basis labels as h's; blocks
    are recomputed from images, so linearity over the new ring is the
    caller's responsibility (restriction of scalars always qualifies).
    """
    k = h.k if k is None else k
    wshift = h.wshift if wshift is None else wshift
    blocks = {}
    for bd in source.bidegrees():
        n0 = source.dim(bd)
        if n0 == 0:
            continue
        tb = (bd[0] + k, bd[1] + wshift)
        n1 = target.dim(tb)
        tl = {l: i for i, l in enumerate(target.basis(tb))}
        cols = []
        for l in source.basis(bd):
            img = h.image(bd, l)
            col = [Q(0)] * n1
            for (b2, l2), c in img.coords.items():
                col[tl[l2]] = c
            cols.append(col)
        blocks[bd] = from_columns(cols, n1)
    return ModuleHom(source, target, k=k, wshift=wshift, blocks=blocks)


def wrap_hom(source: DgModule, target: DgModule) -> ModuleHom:
    """The identity between two label-compatible modules."""
    return transplant_hom(identity_module_hom(source), source, target)


def tensor_hom(source: DgModule, target: DgModule,
               fl: ModuleHom, fr: ModuleHom) -> ModuleHom:
    """fl (x) fr between balanced tensor modules (degree-0 factors only).

    source and target are tensor_over_base outputs (or plain tensors);
    fl maps source.left into target.left up to label transplant, fr
    likewise on the right.
    """
    if fl.k or fr.k:
        raise PreconditionError("tensor_hom needs degree-0 factor maps")
    ws = fl.wshift + fr.wshift
    tgt_core = target.parent if isinstance(target, RestrictedModule) else target
    tgt_plain = getattr(tgt_core, "plain", tgt_core)
    blocks = {}
    for bd in source.bidegrees():
        n0 = source.dim(bd)
        if n0 == 0:
            continue
        tb = (bd[0], bd[1] + ws)
        if tb[1] > target.window.wmax:
            continue
        n1 = target.dim(tb)
        tl = {l: i for i, l in enumerate(target.basis(tb))}
        cols = []
        for l in source.basis(bd):
            lb, ll, rb, rl = l
            x = El(fl.source, {(lb, ll): Q(1)})
            y = El(fr.source, {(rb, rl): Q(1)})
            fx = fl.apply(x)
            fy = fr.apply(y)
            img = tgt_plain.pure(El(tgt_plain.left, dict(fx.coords)),
                                 El(tgt_plain.right, dict(fy.coords)))
            if isinstance(tgt_core, QuotientModule):
                img = tgt_core.project(img)
            col = [Q(0)] * n1
            for (b2, l2), c in img.coords.items():
                col[tl[l2]] = c
            cols.append(col)
        blocks[bd] = from_columns(cols, n1)
    return ModuleHom(source, target, wshift=ws, blocks=blocks)


# ---------------------------------------------------------------------------
# compound resolutions and the rectangle


@dataclass
class RectResult:
    """Hom_{env}(P_B, P^l (x)_A P^r), tabulated with provenance."""

    pair: DgPair
    env: QuotientAlgebra
    bres: ModuleResolution           # P_B -> B over env
    left: ModuleResolution           # P^l -> M^l over the tower
    right: ModuleResolution          # P^r -> M^r over the tower
    tensor: DgModule                 # P^l (x)_A P^r over env
    hom: HomComplex
    certified: tuple[int, int]

    def complex(self):
        return self.hom.complex()

    def cohomology(self) -> dict:
        lo, hi = self.certified
        out = {}
        for bd, n in self.complex().cohomology_dims().items():
            if lo <= bd[0] <= hi and n:
                out[bd] = n
        return out

    def cohomology_dims_by_degree(self) -> dict:
        out: dict = {}
        for (q, t), n in self.cohomology().items():
            out[q] = out.get(q, 0) + n
        return out


def resolve_ring_as_bimodule(pair: DgPair, depth: int) -> ModuleResolution:
    """A semi-free resolution of the ring as a module over the envelope."""
    env = pair.env()
    s = pair.res.s
    bim = BimoduleFromAlgebra(env, pair.ring, s.image, s.image)
    # the ring of a pair is tabulated on its whole support, so products
    # escaping its window vanish
    bim.exact_support = True
    return resolve_module(bim, depth, name="P_B")


def rect(pair: DgPair, Ml: DgModule, Mr: DgModule, depth_b: int,
         depth_m: int) -> RectResult:
    """The rectangle of two modules over the pair's ring.

    Ml and Mr live over the pair's ring; they are restricted along the
    resolution map and resolved semi-freely over the tower.
    """
    env = pair.env()
    bres = resolve_ring_as_bimodule(pair, depth_b)
    s = pair.res.s
    lres = resolve_module(restrict_scalars(Ml, s), depth_m, name="P_l")
    rres = resolve_module(restrict_scalars(Mr, s), depth_m, name="P_r")
    T = tensor_over_base(lres.module, rres.module, env, pair.base,
                         pair.embed_base, pair.embed_base)
    hc = HomComplex(bres.module, T)
    lo_b, _ = bres.certified
    lo_l, hi_l = lres.certified
    lo_r, hi_r = rres.certified
    # Hom degrees q are exact while the resolution of B is: q <= -lo_b - 1,
    # and while both module resolutions cover the tensor degrees in play
    hi = -lo_b - 1
    if not (lres.exhaustive and rres.exhaustive):
        hi = min(hi, -(lo_l + lo_r) - 1)
    lo = -(hi_l + hi_r) + min(g.deg for g in bres.module.gens)
    if lo > hi:
        raise DepthError("certified range of the rectangle is empty; "
                         "increase the resolution depths")
    return RectResult(pair=pair, env=env, bres=bres, left=lres, right=rres,
                      tensor=T, hom=hc, certified=(lo, hi))


def square(pair: DgPair, M: DgModule, depth_b: int, depth_m: int) -> RectResult:
    """The square of a module: the rectangle with both arguments M."""
    if not pair.ring.sc or not pair.tilde.sc:
        raise PreconditionError("the square needs a strongly commutative pair")
    return rect(pair, M, M, depth_b, depth_m)


# ---------------------------------------------------------------------------
# induced morphisms


@dataclass
class PairMorphism:
    """Towers over a shared base connected above a ring map.

    v maps lower.ring -> upper.ring; wt lifts it between the towers
    (strict commutation s_upper . wt = v . s_lower).  Rectangles map
    contravariantly: Rect over upper -> Rect over lower.
    """

    upper: DgPair
    lower: DgPair
    v: DgRingHom
    wt: DgRingHom

    def check(self) -> None:
        if self.upper.base.key() != self.lower.base.key():
            raise PreconditionError("pair morphism needs a shared base")
        tl = self.lower.tilde
        for bd in tl.bidegrees():
            for l in tl.basis(bd):
                x = tl.element(bd, l)
                lhs = self.upper.res.s.apply(self.wt.apply(x))
                rhs = self.v.apply(self.lower.res.s.apply(x))
                if not (lhs - rhs).is_zero():
                    raise StructuralError(
                        f"pair morphism square does not commute at {bd} {l!r}")


def identity_pair_morphism(upper: DgPair, lower: DgPair,
                           seed: Optional[int] = None) -> PairMorphism:
    """Comparison of two towers resolving the same ring."""
    if upper.ring is not lower.ring:
        raise PreconditionError("the towers must resolve the same ring")
    v = identity_hom(upper.ring)
    wt = lift_ring_hom(lower.res, upper.res, v, seed=seed)
    return PairMorphism(upper=upper, lower=lower, v=v, wt=wt)


def _module_comparison(pm: PairMorphism, up_res: ModuleResolution,
                       low_res: ModuleResolution, theta: ModuleHom,
                       depth: int, seed: Optional[int]):
    """Resolve the upper module resolution over the lower tower and map it.

    Returns (Q, gamma, theta_hat): gamma: Q -> P_up| a quasi-isomorphism
    of lower-tower modules, theta_hat: Q -> P_low lifting
    theta . alpha_up . gamma through alpha_low.
    """
    P_up = up_res.module
    restricted = restrict_scalars(P_up, pm.wt)
    if P_up.ring is pm.lower.tilde:
        # same tower: P_up is already semi-free over the lower tower
        qres = ModuleResolution(target=restricted, module=P_up,
                                alpha=wrap_hom(P_up, restricted),
                                certified=up_res.certified)
    else:
        qres = resolve_module(restricted, depth, name="Q")
    Qm, gamma = qres.module, qres.alpha
    # f = theta . alpha_up . gamma : Q -> M_low|, assembled through labels
    M_low = low_res.target
    g_images = {}
    for g in Qm.gens:
        val = gamma.apply(Qm.gen_el(g.name))           # in P_up (labels)
        val = up_res.alpha.apply(val)                  # in M_up (labels)
        val = theta.apply(val)                         # in M_low (labels)
        g_images[g.name] = El(M_low, dict(val.coords))
    f = ModuleHom(Qm, M_low, k=theta.k, wshift=theta.wshift,
                  gen_images=g_images)
    theta_hat, _ = lift_through_qiso(f, low_res.alpha, seed=seed)
    return Qm, gamma, theta_hat


def rect_induced(pm: PairMorphism, rect_up: RectResult, rect_low: RectResult,
                 thetal: ModuleHom, thetar: ModuleHom,
                 depth: Optional[int] = None,
                 seed: Optional[int] = None) -> ChainMap:
    """The morphism Rect(upper) -> Rect(lower) induced by (pm, thetal, thetar).

    thetal maps the upper left module (restricted along v) to the lower
    left module, as a label-compatible ModuleHom; thetar likewise.  The
    middle leg of the zigzag (composition with the resolved tensor) is
    inverted up to homotopy, so the output is a chain map representing
    the derived morphism.
    """
    lower = pm.lower
    env_low = rect_low.env
    wen = env_hom(env_low, rect_up.env, pm.wt)
    if depth is None:
        depth = -rect_low.bres.certified[0] + 1

    # mu : P_B(lower) -> P_B(upper)| lifting v between the ring resolutions
    PB_up_r = restrict_scalars(rect_up.bres.module, wen)
    C_up_r = restrict_scalars(rect_up.bres.target, wen)
    alpha_r = transplant_hom(rect_up.bres.alpha, PB_up_r, C_up_r)
    g_images = {}
    for g in rect_low.bres.module.gens:
        val = rect_low.bres.alpha.apply(rect_low.bres.module.gen_el(g.name))
        val = pm.v.apply(El(pm.v.source, dict(val.coords)))
        g_images[g.name] = El(C_up_r, dict(val.coords))
    f0 = ModuleHom(rect_low.bres.module, C_up_r, gen_images=g_images)
    mu, _ = lift_through_qiso(f0, alpha_r, seed=seed)

    # module comparisons on both tensor factors
    Ql, gamma_l, thetal_hat = _module_comparison(
        pm, rect_up.left, rect_low.left, thetal, depth, seed)
    Qr, gamma_r, thetar_hat = _module_comparison(
        pm, rect_up.right, rect_low.right, thetar, depth, seed)

    QQ = tensor_over_base(Ql, Qr, env_low, lower.base,
                          lower.embed_base, lower.embed_base)
    T_up_r = restrict_scalars(rect_up.tensor, wen)
    gamma_en = tensor_hom(QQ, T_up_r, gamma_l, gamma_r)
    theta_en = tensor_hom(QQ, rect_low.tensor, thetal_hat, thetar_hat)

    hc1 = HomComplex(rect_low.bres.module, T_up_r)
    hc2 = HomComplex(rect_low.bres.module, QQ)
    id_pb = identity_module_hom(rect_low.bres.module)
    m1 = induced_hom(rect_up.hom, hc1, mu, wrap_hom(rect_up.tensor, T_up_r))
    m2 = induced_hom(hc2, hc1, id_pb, gamma_en)
    m3 = induced_hom(hc2, rect_low.hom, id_pb, theta_en)
    return m3.compose(homotopy_inverse(m2)).compose(m1)


def square_induced(pm: PairMorphism, rect_up: RectResult,
                   rect_low: RectResult, theta: ModuleHom,
                   depth: Optional[int] = None,
                   seed: Optional[int] = None) -> ChainMap:
    """The induced morphism of squares, both tensor slots carrying theta."""
    return rect_induced(pm, rect_up, rect_low, theta, theta,
                        depth=depth, seed=seed)


def derived_equal(f: ChainMap, g: ChainMap,
                  certified: tuple[int, int]) -> bool:
    """Equality in the derived sense: the difference is null-homotopic.

    Checked by searching for an explicit homotopy witness; outside the
    certified degrees blocks are ignored by restricting the comparison
    to induced maps on cohomology there first.
    """
    lo, hi = certified
    diff = f.sub(g)
    for bd in f.source.bidegrees():
        if not lo <= bd[0] <= hi:
            continue
        m = diff.induced_on_cohomology(bd)
        if any(any(x for x in row) for row in m):
            return False
    return True


# ---------------------------------------------------------------------------
# the trace morphism


def trace_morphism(pm: PairMorphism, rect_up: RectResult,
                   rect_low: RectResult, theta: ModuleHom,
                   depth: Optional[int] = None,
                   seed: Optional[int] = None) -> ChainMap:
    """Sq over the upper ring -> Sq over the lower ring along theta.

    For a triple base -> lower ring -> upper ring with v the second map,
    theta carries the upper module (restricted along v) into the lower
    module; both slots of the square transform by theta.
    """
    if not theta.source or not theta.target:
        raise PreconditionError("trace needs a module morphism")
    # theta must be linear over the lower ring, acting on its source
    # through v
    B = pm.lower.ring
    N = theta.source
    for bd in B.bidegrees():
        for l in B.basis(bd):
            b = B.element(bd, l)
            vb = pm.v.apply(b)
            for mbd in N.bidegrees():
                for ml in N.basis(mbd):
                    n = N.element(mbd, ml)
                    lhs = theta.apply(N.act_el(vb, n))
                    rhs = theta.target.act_el(b, theta.apply(n))
                    if not (lhs - rhs).is_zero():
                        raise PreconditionError(
                            "trace needs a morphism linear over the lower ring")
    return square_induced(pm, rect_up, rect_low, theta, depth=depth, seed=seed)


# ---------------------------------------------------------------------------
# Hochschild oracle: the unnormalized bar complex


def hochschild_oracle(B: DgAlgebra, N: DgModule, K: int) -> dict:
    """HH^q(B, N) dimensions for q <= K via the bar complex.

    B must be concentrated in degree 0 within its window; N is a module
    over a balanced tensor ring B (x) B with tensor basis labels.  The
    result maps (q, weight) to a dimension.  Completely independent of
    the resolution pipeline.
    """
    from .exactlin import BigradedSpace, BigradedMap, Complex

    bweights = []
    for bd in B.bidegrees():
        if B.dim(bd) == 0:
            continue
        if bd[0] != 0:
            raise PreconditionError("bar oracle needs a degree-0 ring")
        bweights.append(bd[1])
    blabels = [((0, w), l) for w in sorted(bweights) for l in B.basis((0, w))]

    def act_left(b_bdl, n_el: El) -> El:
        bbd, bl = b_bdl
        unit = B.unit()
        out = N.zero()
        for (ubd, ul), cu in unit.coords.items():
            a = N.ring.element((bbd[0] + ubd[0], bbd[1] + ubd[1]),
                               _env_label(N.ring, bbd, bl, ubd, ul))
            out = out + N.act_el(a, n_el).scale(cu)
        return out

    def act_right(n_el: El, b_bdl) -> El:
        bbd, bl = b_bdl
        unit = B.unit()
        out = N.zero()
        for (ubd, ul), cu in unit.coords.items():
            a = N.ring.element((bbd[0] + ubd[0], bbd[1] + ubd[1]),
                               _env_label(N.ring, ubd, ul, bbd, bl))
            out = out + N.act_el(a, n_el).scale(cu)
        return out

    # basis of C^n at weight t: (tuple of B labels, N label), with the
    # N label's weight = sum of the B weights + t
    def cbasis(n, t):
        out = []
        def rec(i, acc, wsum):
            if i == n:
                nb = (0, wsum + t)
                if 0 <= nb[1] <= N.window.wmax:
                    for nl in N.basis(nb):
                        out.append((tuple(acc), (nb, nl)))
                return
            for (bbd, bl) in blabels:
                rec(i + 1, acc + [(bbd, bl)], wsum + bbd[1])
        rec(0, [], 0)
        return out

    tmin = -max(bweights) * (K + 1)
    space = BigradedSpace()
    bases = {}
    for n in range(0, K + 2):
        for t in range(tmin, N.window.wmax + 1):
            bs = cbasis(n, t)
            if bs:
                bases[(n, t)] = bs
                space.labels[(n, t)] = tuple(bs)
    d = BigradedMap(space, space, shift=1, wshift=0)
    for (n, t), bs in bases.items():
        if (n + 1, t) not in bases:
            continue
        tgt = bases[(n + 1, t)]
        idx = {lab: i for i, lab in enumerate(tgt)}
        cols = []
        for (word, (nb, nl)) in bs:
            # the transpose of the bar differential acting on cochains:
            # phi is a basis functional; d(phi) evaluated on (b_1..b_{n+1})
            col = [Q(0)] * len(tgt)
            phi_val = El(N, {(nb, nl): Q(1)})
            for j, (w2, (nb2, nl2)) in enumerate(tgt):
                total = N.zero()
                # b_1 . phi(b_2 .. b_{n+1})
                if w2[1:] == word:
                    total = total + act_left(w2[0], phi_val)
                # inner face maps
                for i in range(n):
                    prod = B.element(*w2[i]) * B.element(*w2[i + 1])
                    for (pbd, pl), cp in prod.coords.items():
                        if w2[:i] + ((pbd, pl),) + w2[i + 2:] == word:
                            total = total + phi_val.scale(
                                cp * Q((-1) ** (i + 1)))
                # phi(b_1 .. b_n) . b_{n+1}
                if w2[:-1] == word:
                    total = total + act_right(phi_val, w2[-1]).scale(
                        Q((-1) ** (n + 1)))
                col[j] = total.coords.get((nb2, nl2), Q(0))
            cols.append(col)
        d.set_block((n, t), from_columns(cols, len(tgt)))
    cx = Complex(space, d, certified=(0, K))
    out = {}
    for (n, t), dim in cx.cohomology_dims().items():
        if 0 <= n <= K and dim:
            out[(n, t)] = dim
    return out


def _env_label(env: DgAlgebra, bda, la, bdb, lb):
    lab = (bda, la, bdb, lb)
    bd = (bda[0] + bdb[0], bda[1] + bdb[1])
    if lab not in env.basis(bd):
        raise StructuralError("tensor label not in the enveloping basis")
    return lab
