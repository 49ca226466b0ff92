import random

import pytest

from dgsquare.dgcore import (
    CylinderAlgebra, DgRingHom, Gen, GroundRing, OppositeAlgebra,
    SemifreeAlgebra, Window, ad, center_basis, cylinder_eps, cylinder_eta,
    cylinder_of_hom, hom_from_images, identity_hom, normal_form, opposite,
    rational_ground, tensor_rings,
)
from dgsquare.exactlin import (
    NotAComplexError, PreconditionError, Q, StructuralError,
)


def dual_numbers(wmax=8):
    return GroundRing([("x", 1)], [{(2,): Q(1)}], wmax=wmax, name="Q[x]/(x2)")


def koszul_line(wmax=6):
    gr = GroundRing([("x", 1)], [], wmax=wmax)
    k = SemifreeAlgebra(gr, [Gen("e", -1, 1)], "sc", Window(-wmax - 1, 0, wmax))
    k.set_gen_diff("e", k.var_el("x"))
    return k


def tate_tower(wmax=8):
    gr = dual_numbers(wmax)
    t = SemifreeAlgebra(gr, [Gen("x1", -1, 1), Gen("y", -2, 2)], "sc",
                        Window(-wmax - 1, 0, wmax), name="Tate")
    t.set_gen_diff("x1", t.var_el("x"))
    t.set_gen_diff("y", t.var_el("x") * t.gen_el("x1"))
    return t


class TestGroundRing:
    def test_dual_numbers_bases(self):
        gr = dual_numbers()
        assert gr.basis(0) == ((0,),)
        assert gr.basis(1) == ((1,),)
        assert gr.basis(2) == ()  # x^2 = 0

    def test_polynomial_basis(self):
        gr = GroundRing([("x", 1), ("y", 2)], [], wmax=4)
        assert len(gr.basis(4)) == 3  # x^4, x^2 y, y^2

    def test_reduce(self):
        gr = dual_numbers()
        assert gr.reduce({(2,): Q(3)}, 2) == {}
        assert gr.mul((1,), (1,)) == {}

    def test_inhomogeneous_relation_rejected(self):
        with pytest.raises(PreconditionError):
            GroundRing([("x", 1)], [{(2,): Q(1), (1,): Q(1)}])


class TestSemifree:
    def test_normal_form_even_odd(self):
        # x odd (deg -1), y even (deg -2): y*x = +x*y
        gr = rational_ground(6)
        a = SemifreeAlgebra(gr, [Gen("x", -1, 1), Gen("y", -2, 2)], "sc",
                            Window(-8, 0, 6))
        yx = a.gen_el("y") * a.gen_el("x")
        xy = a.gen_el("x") * a.gen_el("y")
        assert (yx - xy).is_zero()

    def test_normal_form_two_odds_anticommute(self):
        gr = rational_ground(6)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("v", -1, 1)], "sc",
                            Window(-8, 0, 6))
        uv = a.gen_el("u") * a.gen_el("v")
        vu = a.gen_el("v") * a.gen_el("u")
        assert (uv + vu).is_zero()
        assert (a.gen_el("u") * a.gen_el("u")).is_zero()

    def test_nc_flavor_keeps_order(self):
        gr = rational_ground(6)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("v", -1, 1)], "nc",
                            Window(-8, 0, 6))
        uv = a.gen_el("u") * a.gen_el("v")
        vu = a.gen_el("v") * a.gen_el("u")
        assert not (uv - vu).is_zero()
        assert not (a.gen_el("u") * a.gen_el("u")).is_zero()

    def test_normal_form_helper(self):
        t = tate_tower()
        el = normal_form(t, ["y", "x1", "x"])
        el2 = normal_form(t, ["x", "x1", "y"])
        assert (el - el2).is_zero()

    def test_koszul_structure(self):
        k = koszul_line()
        k.validate()
        k.check_d2()
        k.check_leibniz()
        bds = [bd for bd in k.bidegrees() if bd[1] <= 3]
        k.check_associative(bds)
        k.check_sign_laws(bds)
        assert k.complex().cohomology_dims() == {(0, 0): 1}

    def test_tate_structure(self):
        t = tate_tower()
        t.validate()
        t.check_d2()
        assert t.complex().cohomology_dims() == {(0, 0): 1}

    def test_bad_diff_bidegree_rejected(self):
        gr = rational_ground(4)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("w", -2, 2)], "sc",
                            Window(-6, 0, 4))
        with pytest.raises(StructuralError):
            a.set_gen_diff("u", a.gen_el("w"))

    def test_non_square_zero_detected(self):
        gr = GroundRing([("x", 1)], [], wmax=4)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("v", -2, 2)], "sc",
                            Window(-6, 0, 4))
        a.set_gen_diff("u", a.var_el("x"))
        a.set_gen_diff("v", a.var_el("x") * a.gen_el("u"))
        # corrupt: d(v) = x*u has d(d(v)) = x*x != 0 in Q[x]
        with pytest.raises(NotAComplexError):
            a.validate()


class TestHoms:
    def test_augmentation_is_qiso(self):
        k = koszul_line()
        q = SemifreeAlgebra(rational_ground(6), [], "sc", Window(-1, 0, 6))
        aug = hom_from_images(k, q, {"x": q.zero()}, {"e": q.zero()}, name="aug")
        aug.check([bd for bd in k.bidegrees() if bd[1] <= 3])
        assert aug.is_quasi_iso((-4, 0))

    def test_missing_relation_image_rejected(self):
        t = tate_tower(wmax=4)
        gr = GroundRing([("x", 1)], [], wmax=4)  # no x^2 = 0 here
        free = SemifreeAlgebra(gr, [], "sc", Window(-5, 0, 4))
        with pytest.raises(StructuralError):
            hom_from_images(t, free, {"x": free.var_el("x")}, {
                "x1": free.zero(), "y": free.zero()})

    def test_d_incompatible_image_rejected(self):
        k = koszul_line(4)
        k2 = koszul_line(4)
        with pytest.raises(StructuralError):
            hom_from_images(k, k2, {"x": k2.var_el("x")}, {"e": k2.zero()})

    def test_identity_hom(self):
        t = tate_tower(4)
        ih = identity_hom(t)
        for bd in t.bidegrees():
            for l in t.basis(bd):
                assert ih.image(bd, l) == t.element(bd, l)


class TestOpposite:
    def test_opposite_of_sc_is_same(self):
        t = tate_tower(4)
        assert opposite(t) is t

    def test_opposite_sign(self):
        gr = rational_ground(4)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("v", -1, 1)], "nc",
                            Window(-4, 0, 4))
        op = OppositeAlgebra(a)
        u = op.element((-1, 1), a.gen_el("u").is_homogeneous() and
                       next(iter(a.gen_el("u").coords))[1])
        v = op.element((-1, 1), next(iter(a.gen_el("v").coords))[1])
        # u^op * v^op = (-1)^{1*1} (v u)^op
        prod = u * v
        vu = a.gen_el("v") * a.gen_el("u")
        assert prod.coords == vu.scale(Q(-1)).coords
        op.check_d2()
        op.check_associative([bd for bd in op.bidegrees() if bd[1] <= 3])


class TestTensorAndEnveloping:
    def test_enveloping_of_koszul(self):
        # K(Q[x]; x) ⊗_{Q[x]} K(Q[x]; x) is a Koszul ring on two
        # generators over Q[x]: dims 1,2,1 in degrees 0,-1,-2 per weight
        k = koszul_line(4)
        gr = k.ground
        env = tensor_rings(k, k, gr,
                           embed_left=lambda p, w: k.ground_el(p, w),
                           embed_right=lambda p, w: k.ground_el(p, w))
        assert env.dim((0, 1)) == 1
        assert env.dim((-1, 1)) == 2
        assert env.dim((-2, 2)) == 1
        env.check_d2([bd for bd in env.bidegrees() if bd[1] <= 3])
        env.check_associative([bd for bd in env.bidegrees() if bd[1] <= 2])
        got = env.complex().cohomology_dims()
        assert got == {(0, 0): 1, (-1, 1): 1}

    def test_trivial_base_tensor(self):
        k = koszul_line(3)
        base = rational_ground(3)
        t = tensor_rings(k, k, base, name="kxk")
        # no balancing: dims multiply, x⊗1 and 1⊗x stay distinct
        assert t.dim((0, 1)) == 2


class TestCylinder:
    def setup_method(self):
        self.k = koszul_line(4)
        self.cyl = CylinderAlgebra(self.k)
        self.small = [bd for bd in self.cyl.bidegrees() if bd[1] <= 2]

    def test_structure(self):
        self.cyl.check_d2(self.small)
        self.cyl.check_leibniz(self.small)
        self.cyl.check_associative(self.small)

    def test_xi_squares_to_zero(self):
        xi = self.cyl.inject("x", self.k.unit())
        assert (xi * xi).is_zero()
        assert xi.d().is_zero()

    def test_matrix_multiplication_rule(self):
        # [a0,0;0,a1]*[0,ξb;0,0] = [0, ξ(a0 b) (-1)^{|a0|}; 0,0]
        a0 = self.cyl.inject(0, self.k.var_el("x"))
        xib = self.cyl.inject("x", self.k.unit())
        assert (a0 * xib - self.cyl.inject("x", self.k.var_el("x"))).is_zero()

    def test_eps_eta(self):
        eps = cylinder_eps(self.cyl)
        eps.check(self.small)
        assert eps.is_quasi_iso((-3, 0))
        for which in (0, 1):
            eta = cylinder_eta(self.cyl, which)
            eta.check(self.small)
            assert eta.is_quasi_iso((-3, 0))
            comp = eta.compose(eps)
            for bd in self.small:
                for l in self.k.basis(bd):
                    assert comp.image(bd, l) == self.k.element(bd, l)

    def test_cyl_of_hom(self):
        q = SemifreeAlgebra(rational_ground(4), [], "sc", Window(-1, 0, 4))
        aug = hom_from_images(self.k, q, {"x": q.zero()}, {"e": q.zero()})
        cq = CylinderAlgebra(q)
        cu = cylinder_of_hom(aug, self.cyl, cq)
        cu.check(self.small)
        # commutes with eps
        eps_k = cylinder_eps(self.cyl)
        eps_q = cylinder_eps(cq)
        for bd in self.small:
            for l in self.k.basis(bd):
                lhs = cu.apply(eps_k.image(bd, l))
                rhs = eps_q.apply(aug.image(bd, l))
                assert (lhs - rhs).is_zero()


class TestCenter:
    def test_ground_is_central(self):
        t = tate_tower(4)
        x = t.var_el("x")
        for bd in t.bidegrees():
            if bd[1] + 1 > t.window.wmax:
                continue
            for l in t.basis(bd):
                assert ad(x, t.element(bd, l)).is_zero()

    def test_center_of_cylinder_degree_zero(self):
        q = SemifreeAlgebra(rational_ground(3), [], "sc", Window(-2, 0, 3))
        cyl = CylinderAlgebra(q)
        cb = center_basis(cyl, (0, 0))
        assert len(cb) == 1  # only the diagonal unit
        eps = cylinder_eps(cyl)
        diag = eps.apply(q.unit())
        assert (cb[0] - diag).is_zero() or (cb[0] + diag).is_zero()

    def test_noncentral_detected(self):
        gr = rational_ground(4)
        a = SemifreeAlgebra(gr, [Gen("u", -1, 1), Gen("v", -1, 1)], "nc",
                            Window(-4, 0, 4))
        assert center_basis(a, (-1, 1)) == []
