"""Tests for semi-free resolutions, lifting, and homotopies."""

from fractions import Fraction as Q

import pytest

from dgsquare.exactlin import (DepthError, PreconditionError, StructuralError)
from dgsquare.dgcore import (CylinderAlgebra, GroundRing, hom_from_images,
                             identity_hom, rational_ground)
from dgsquare.dgmod import AlgebraModule, FreeModule, MGen, ModuleHom
from dgsquare.resolve import (RingHomotopy, add_contractible_pair,
                              build_ring_homotopy, homotopy_cylinder_decode,
                              homotopy_cylinder_encode, identity_resolution,
                              is_surjective, koszul, lift_ring_hom,
                              lift_through_qiso, resolve_module, resolve_ring)

W = 6


@pytest.fixture(scope="module")
def dual_ground():
    return GroundRing(variables=[("x", 1)], relations=[{(2,): Q(1)}],
                      wmax=W, name="A")


@pytest.fixture(scope="module")
def rationals():
    return koszul(rational_ground(W), [], name="Q")


def embed_to_field(B):
    def emb(poly, w):
        return B.ground_el(poly, 0) if w == 0 else B.zero()
    return emb


@pytest.fixture(scope="module")
def field_res(dual_ground, rationals):
    """The residue field of the dual numbers, resolved to depth 5 and 6."""
    emb = embed_to_field(rationals)
    r5 = resolve_ring(dual_ground, rationals, emb, depth=5)
    r6 = resolve_ring(dual_ground, rationals, emb, depth=6)
    return r5, r6


class TestKoszul:

    def test_koszul_on_regular_element(self):
        ground = GroundRing(variables=[("x", 1)], relations=[], wmax=W,
                            name="Q[x]")
        K = koszul(ground, [({(1,): Q(1)}, 1)])
        K.validate()
        assert K.complex().cohomology_dims() == {(0, 0): 1}

    def test_koszul_on_zero_divisor_has_extra_cohomology(self):
        ground = GroundRing(variables=[("x", 1)], relations=[{(2,): Q(1)}],
                            wmax=W, name="A")
        K = koszul(ground, [({(1,): Q(1)}, 1)])
        K.validate()
        dims = K.complex().cohomology_dims()
        assert dims[(0, 0)] == 1
        # x annihilates x, so classes like x*e survive in degree -1
        assert any(bd[0] == -1 and n > 0 for bd, n in dims.items())


class TestRingResolution:

    def test_residue_field_tower_is_minimal(self, field_res):
        r5, _ = field_res
        assert [(g.name, g.deg, g.wt) for g in r5.tilde.gens] == \
            [("k1", -1, 1), ("k2", -2, 2)]
        d1 = r5.tilde.gen_el("k1").d()
        assert d1.coords == {((0, 1), ((1,), ())): Q(1)}
        d2 = r5.tilde.gen_el("k2").d()
        assert d2.coords == {((-1, 2), ((1,), (0,))): Q(1)}
        r5.verify()

    def test_residue_field_tower_cohomology(self, field_res):
        r5, _ = field_res
        dims = {bd: n for bd, n in r5.tilde.complex().cohomology_dims().items()
                if r5.certified[0] <= bd[0] <= r5.certified[1] and n}
        assert dims == {(0, 0): 1}
        assert is_surjective(r5.s, r5.certified)

    def test_dual_numbers_over_field_tower(self, rationals):
        base = rational_ground(W)
        dual = koszul(GroundRing(variables=[("x", 1)],
                                 relations=[{(2,): Q(1)}], wmax=W,
                                 name="eps"), [], name="B")
        res = resolve_ring(base, dual, None, depth=5)
        res.verify()
        assert [(g.name, g.deg, g.wt) for g in res.tilde.gens] == \
            [("t_x", 0, 1), ("k1", -1, 2)]
        dk = res.tilde.gen_el("k1").d()
        assert dk.coords == {((0, 2), ((), (0, 0))): Q(1)}

    def test_noncommutative_tower(self, dual_ground, rationals):
        res = resolve_ring(dual_ground, rationals, embed_to_field(rationals),
                           depth=5, flavor="nc")
        res.verify()
        assert res.tilde.flavor == "nc"
        assert [(g.deg, g.wt) for g in res.tilde.gens] == \
            [(-1, 1), (-2, 2), (-3, 2), (-4, 3), (-5, 3)]

    def test_identity_resolution(self, dual_ground, rationals, field_res):
        r5, _ = field_res
        ires = identity_resolution(r5.tilde, dual_ground, depth=5)
        ires.verify()
        assert ires.tilde is r5.tilde

    def test_contractible_pair_preserves_everything(self, field_res):
        r5, _ = field_res
        padded = add_contractible_pair(r5, -1, 2)
        padded.verify()
        names = [g.name for g in padded.tilde.gens]
        assert "padp0" in names and "padq0" in names
        dims = {bd: n for bd, n in padded.tilde.complex().cohomology_dims().items()
                if padded.certified[0] <= bd[0] <= padded.certified[1] and n}
        assert dims == {(0, 0): 1}


@pytest.fixture(scope="module")
def residue_module(dual_ground, rationals):
    Aalg = koszul(dual_ground, [], name="Aalg")
    v = hom_from_images(Aalg, rationals, {"x": rationals.zero()}, {},
                        check=True)
    return AlgebraModule(rationals, ring=Aalg, hom=v)


class TestModuleResolution:

    def test_periodic_resolution(self, residue_module):
        mres = resolve_module(residue_module, depth=5)
        mres.verify()
        assert [(g.name, g.deg, g.wt) for g in mres.module.gens] == \
            [(f"g{i + 1}", -i, i) for i in range(5)]
        # d(g_{i+1}) = -x g_i, the infinite periodic pattern
        for i in range(1, 5):
            de = mres.module.gen_el(f"g{i + 1}").d()
            assert de.coords == \
                {((-i + 1, i), (f"g{i}", (0, 1), ((1,), ()))): Q(-1)}
        im = mres.alpha.apply(mres.module.gen_el("g1"))
        assert not im.is_zero()

    def test_resolution_cohomology_matches_target(self, residue_module):
        mres = resolve_module(residue_module, depth=5)
        lo, hi = mres.certified
        want = {bd: n for bd, n in residue_module.cohomology().items()
                if lo <= bd[0] <= hi and n}
        got = {bd: n for bd, n in mres.module.cohomology().items()
              if lo <= bd[0] <= hi and n}
        assert got == want == {(0, 0): 1}


class TestRingLifts:

    def test_identity_lift_commutes_strictly(self, field_res, rationals):
        r5, r6 = field_res
        w = lift_ring_hom(r5, r6, identity_hom(rationals))
        for bd in r5.tilde.bidegrees():
            for l in r5.tilde.basis(bd):
                x = r5.tilde.element(bd, l)
                assert (r6.s.apply(w.apply(x)) - r5.s.apply(x)).is_zero()

    def test_seeded_lifts_differ_but_both_commute(self, field_res, rationals):
        r5, r6 = field_res
        padded = add_contractible_pair(r5, -1, 2)
        wa = lift_ring_hom(padded, r6, identity_hom(rationals), seed=1)
        wb = lift_ring_hom(padded, r6, identity_hom(rationals), seed=5)
        differ = [g.name for g in padded.tilde.gens
                  if not (wa.apply(padded.tilde.gen_el(g.name))
                          - wb.apply(padded.tilde.gen_el(g.name))).is_zero()]
        assert differ == ["padp0"]
        for w in (wa, wb):
            for bd in padded.tilde.bidegrees():
                for l in padded.tilde.basis(bd):
                    x = padded.tilde.element(bd, l)
                    assert (r6.s.apply(w.apply(x))
                            - padded.s.apply(x)).is_zero()


@pytest.fixture(scope="module")
def two_lifts(dual_ground, rationals, field_res):
    _, r6 = field_res
    nres = resolve_ring(dual_ground, rationals,
                        embed_to_field(rationals), depth=5, flavor="nc")
    padded = add_contractible_pair(nres, -1, 2)
    ua = lift_ring_hom(padded, r6, identity_hom(rationals), seed=1)
    ub = lift_ring_hom(padded, r6, identity_hom(rationals), seed=5)
    return padded, r6, ua, ub


class TestRingHomotopy:

    def test_build_and_check(self, two_lifts):
        padded, r6, ua, ub = two_lifts
        gamma = build_ring_homotopy(padded.tilde, r6, ua, ub)
        gamma.check()
        assert any(not v.is_zero() for v in gamma.gamma_gens.values())

    def test_commutative_source_rejected(self, field_res, rationals):
        r5, r6 = field_res
        w = lift_ring_hom(r5, r6, identity_hom(rationals))
        with pytest.raises(PreconditionError):
            build_ring_homotopy(r5.tilde, r6, w, w)

    def test_cylinder_roundtrip(self, two_lifts):
        padded, r6, ua, ub = two_lifts
        gamma = build_ring_homotopy(padded.tilde, r6, ua, ub)
        cyl = CylinderAlgebra(r6.tilde)
        u = homotopy_cylinder_encode(gamma, cyl)
        back = homotopy_cylinder_decode(u, cyl, ua, ub)
        for k, v in gamma.gamma_gens.items():
            assert (v - back.gamma_gens[k]).is_zero()

    def test_corrupted_homotopy_rejected(self, two_lifts):
        padded, r6, ua, ub = two_lifts
        gamma = build_ring_homotopy(padded.tilde, r6, ua, ub)
        bad = RingHomotopy(padded.tilde, r6.tilde, ua, ub,
                           dict(gamma.gamma_gens))
        for k, v in bad.gamma_gens.items():
            if not v.is_zero():
                bad.gamma_gens[k] = v.scale(Q(2))
                break
        cyl = CylinderAlgebra(r6.tilde)
        with pytest.raises(StructuralError):
            homotopy_cylinder_encode(bad, cyl)

    def test_decode_rejects_wrong_lifts(self, two_lifts):
        padded, r6, ua, ub = two_lifts
        gamma = build_ring_homotopy(padded.tilde, r6, ua, ub)
        cyl = CylinderAlgebra(r6.tilde)
        u = homotopy_cylinder_encode(gamma, cyl)
        with pytest.raises(StructuralError):
            homotopy_cylinder_decode(u, cyl, ub, ua)


@pytest.fixture(scope="module")
def module_lift_setup(residue_module):
    M = residue_module
    mres = resolve_module(M, depth=5)
    S = FreeModule(M.ring, [MGen("e", 0, 0)], name="S")
    f = ModuleHom(S, M, gen_images={"e": M.wrap(M.alg.unit())})
    assert f.is_chain()
    return S, f, mres


class TestModuleLift:

    def check_homotopy_identity(self, f, alpha, g, sigma):
        S = f.source
        for bd in S.bidegrees():
            for l in S.basis(bd):
                x = S.element(bd, l)
                lhs = alpha.apply(g.apply(x)) - f.apply(x)
                rhs = sigma.apply(x).d() + sigma.apply(x.d())
                assert (lhs - rhs).is_zero()

    def test_lift_is_chain_and_homotopy_corrects(self, module_lift_setup):
        S, f, mres = module_lift_setup
        g, sigma = lift_through_qiso(f, mres.alpha)
        assert g.is_chain()
        self.check_homotopy_identity(f, mres.alpha, g, sigma)
        im = g.apply(S.gen_el("e"))
        assert list(im.coords) == [((0, 0), ("g1", (0, 0), ((0,), ())))]

    def test_seeded_lift_still_valid(self, module_lift_setup):
        S, f, mres = module_lift_setup
        g, sigma = lift_through_qiso(f, mres.alpha, seed=3)
        assert g.is_chain()
        self.check_homotopy_identity(f, mres.alpha, g, sigma)
