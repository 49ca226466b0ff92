import pytest

from dgsquare.dgcore import (
    CylinderAlgebra, Gen, GroundRing, SemifreeAlgebra, TensorAlgebra, Window,
    hom_from_images, rational_ground,
)
from dgsquare.dgmod import (
    AlgebraModule, BimoduleFromAlgebra, CylinderModule, FreeModule, HomComplex,
    MGen, ModuleHom, cone, cylinder_module, free_module, hom_complex,
    identity_module_hom, induced_hom, restrict_scalars, scale_morphism, shift,
    tensor_over_base, zero_module_hom,
)
from dgsquare.exactlin import (
    PreconditionError, Q, StructuralError, coboundary_witness, nullhomotopy,
)


def poly_line(wmax=4):
    gr = GroundRing([("x", 1)], [], wmax=wmax)
    return SemifreeAlgebra(gr, [], "sc", Window(-2, 0, wmax))


def koszul_module(A):
    """Two-term free module resolving Q over Q[x]."""
    K = FreeModule(A, [MGen("e0", 0, 0), MGen("e1", -1, 1)])
    K.set_gen_diff("e1", A.var_el("x") * K.gen_el("e0"))
    return K


def dual_numbers_ring(wmax=8):
    gr = GroundRing([("x", 1)], [{(2,): Q(1)}], wmax=wmax)
    return SemifreeAlgebra(gr, [], "sc", Window(-1, 0, wmax))


def periodic_resolution(env, a, b, depth):
    """Free resolution of the dual numbers over their enveloping ring:
    generators e_i at (-i, i) with d(e_i) = (a - (-1)^i b) e_{i-1}."""
    P = FreeModule(env, [MGen(f"e{i}", -i, i) for i in range(depth + 1)])
    for i in range(1, depth + 1):
        coeff = a - b.scale(Q(-1) if i % 2 else Q(1))
        P.set_gen_diff(f"e{i}", coeff * P.gen_el(f"e{i - 1}"))
    P.validate()
    return P


class TestFreeModule:
    def test_ring_as_module(self):
        A = poly_line()
        F = free_module(A, [(0, 0)])
        assert {bd: F.dim(bd) for bd in F.bidegrees()} == \
            {bd: A.dim(bd) for bd in A.bidegrees() if F.window.contains(bd)}

    def test_dims_add(self):
        A = poly_line()
        F = free_module(A, [(0, 0), (0, 0)])
        assert F.dim((0, 2)) == 2 * A.dim((0, 2))

    def test_koszul_module(self):
        A = poly_line()
        K = koszul_module(A)
        K.check_d2()
        K.check_leibniz()
        K.check_action()
        assert K.cohomology() == {(0, 0): 1}

    def test_bad_gen_diff_rejected(self):
        A = poly_line()
        K = FreeModule(A, [MGen("e0", 0, 0), MGen("e1", -1, 1)])
        with pytest.raises(StructuralError):
            K.set_gen_diff("e1", K.gen_el("e0"))  # wrong weight


class TestShift:
    def test_shift_zero_is_identity(self):
        A = poly_line()
        K = koszul_module(A)
        assert shift(K, 0) is K

    def test_shift_composes(self):
        A = poly_line()
        K = koszul_module(A)
        T2 = shift(shift(K, 1), 1)
        T = shift(K, 2)
        assert {bd: T2.dim(bd) for bd in T2.bidegrees()} == \
            {bd: T.dim(bd) for bd in T.bidegrees()}

    def test_differential_negates(self):
        A = poly_line()
        K = koszul_module(A)
        T = shift(K, 1)
        m = K.gen_el("e1")
        assert (T.shift_in(m).d() + T.shift_in(m.d())).is_zero()

    def test_action_sign(self):
        # for a of odd degree, a.t(m) = -t(a.m)
        gr = rational_ground(4)
        A = SemifreeAlgebra(gr, [Gen("u", -1, 1)], "sc", Window(-4, 0, 4))
        F = free_module(A, [(0, 0)])
        T = shift(F, 1)
        u = A.gen_el("u")
        m = F.element((0, 0), F.basis((0, 0))[0])
        assert (u * T.shift_in(m) + T.shift_in(u * m)).is_zero()
        T.check_d2()
        T.check_leibniz()


class TestCone:
    def test_cone_of_identity_acyclic(self):
        A = poly_line()
        K = koszul_module(A)
        C = cone(identity_module_hom(K))
        C.check_d2()
        assert all(d == 0 for d in C.cohomology().values())

    def test_cone_of_zero_block_diagonal(self):
        A = poly_line()
        K = koszul_module(A)
        F = free_module(A, [(0, 0)])
        C = cone(zero_module_hom(F, K))
        assert C.dim((0, 0)) == K.dim((0, 0)) + F.dim((1, 0))
        assert C.dim((-1, 0)) == K.dim((-1, 0)) + F.dim((0, 0))

    def test_cone_of_multiplication_by_x(self):
        A = poly_line()
        AM = AlgebraModule(A)
        F = FreeModule(A, [MGen("g", 0, 1)])
        phi = ModuleHom(F, AM, gen_images={"g": AM.wrap(A.var_el("x"))})
        assert phi.is_chain()
        C = cone(phi)
        C.check_d2()
        C.check_leibniz()
        assert C.cohomology() == {(0, 0): 1}

    def test_non_chain_rejected(self):
        A = poly_line()
        K = koszul_module(A)
        with pytest.raises(PreconditionError):
            cone(zero_module_hom(K, K, k=1))


class TestRestriction:
    def test_restrict_along_unit(self):
        A = poly_line()
        Qr = SemifreeAlgebra(rational_ground(4), [], "sc", Window(-1, 0, 4))
        u = hom_from_images(Qr, A, {}, {})
        R = restrict_scalars(AlgebraModule(A), u)
        R.check_d2()
        R.check_action()
        assert {bd: R.dim(bd) for bd in R.bidegrees()} == \
            {(0, w): 1 for w in range(5)}


class TestTensorOverBase:
    def test_unit_law(self):
        # A (x)_A M has the dims of M
        A = poly_line()
        AM = AlgebraModule(A)
        K = koszul_module(A)
        plain = TensorAlgebra(A, A)
        T = tensor_over_base(AM, K, plain, base=A.ground,
                             embed_left=lambda p, w: A.ground_el(p, w),
                             embed_right=lambda p, w: A.ground_el(p, w))
        for bd in K.bidegrees():
            if bd[1] <= 3 and bd[0] > K.window.dlo:
                assert T.dim(bd) == K.dim(bd)

    def test_scalars_tensor_koszul(self):
        # Q (x)_{Q[x]} K(Q[x];x): two terms, zero differential
        A = poly_line()
        gr = A.ground
        K = SemifreeAlgebra(gr, [Gen("e", -1, 1)], "sc", Window(-3, 0, 4))
        K.set_gen_diff("e", K.var_el("x"))
        Qr = SemifreeAlgebra(rational_ground(4), [], "sc", Window(-1, 0, 4))
        AtoK = hom_from_images(A, K, {"x": K.var_el("x")}, {})
        T = tensor_over_base(AlgebraModule(Qr),
                             restrict_scalars(AlgebraModule(K), AtoK),
                             TensorAlgebra(Qr, K), base=gr,
                             embed_left=lambda p, w: Qr.zero(),
                             embed_right=lambda p, w: K.ground_el(p, w))
        T.check_d2()
        assert {bd: T.dim(bd) for bd in T.bidegrees()} == \
            {(-1, 1): 1, (0, 0): 1}
        assert T.cohomology() == {(-1, 1): 1, (0, 0): 1}


class TestHomComplex:
    def test_hom_from_ring_is_target(self):
        A = poly_line()
        AM = AlgebraModule(A)
        F = free_module(A, [(0, 0)])
        H = hom_complex(F, AM)
        assert {bd: H.dim(bd) for bd in H.bidegrees()} == \
            {(0, w): 1 for w in range(5)}

    def test_hom_of_two_copies(self):
        Qr = SemifreeAlgebra(rational_ground(2), [], "sc", Window(-1, 0, 2))
        F = free_module(Qr, [(0, 0), (0, 0)])
        H = hom_complex(F, AlgebraModule(Qr))
        assert H.dim((0, 0)) == 2

    def test_end_of_koszul(self):
        A = poly_line()
        K = koszul_module(A)
        E = hom_complex(K, K)
        assert E.cohomology() == {(0, 0): 1, (1, -1): 1}

    def test_identity_roundtrip(self):
        A = poly_line()
        K = koszul_module(A)
        E = hom_complex(K, K)
        iel = E.from_module_hom(identity_module_hom(K))
        assert iel.d().is_zero()
        back = E.to_module_hom(iel, 0, 0)
        assert back.is_chain()
        for g in K.gens:
            assert (back.apply(K.gen_el(g.name)) - K.gen_el(g.name)).is_zero()

    def test_linearity_sign(self):
        # phi(a.m) = (-1)^{ik} a.phi(m) for odd a, odd-shift phi
        gr = rational_ground(4)
        A = SemifreeAlgebra(gr, [Gen("u", -1, 1)], "sc", Window(-4, 0, 4))
        F = FreeModule(A, [MGen("e", 0, 0), MGen("f", -1, 1)])
        phi = ModuleHom(F, F, k=-1, wshift=1, gen_images={
            "e": F.gen_el("f"), "f": F.zero()})
        u = A.gen_el("u")
        e = F.gen_el("e")
        lhs = phi.apply(u * e)
        rhs = (u * phi.apply(e)).scale(Q(-1))
        assert (lhs - rhs).is_zero()


class TestInducedHom:
    def test_identity_inputs(self):
        A = poly_line()
        K = koszul_module(A)
        E = hom_complex(K, K)
        f = induced_hom(E, E, identity_module_hom(K), identity_module_hom(K))
        f.check_chain()
        for bd in E.bidegrees():
            for l in E.basis(bd):
                el = E.element(bd, l)
                out = f.apply(el.to_dictvec())
                assert out == el.to_dictvec()

    def test_composition_law(self):
        A = poly_line()
        K = koszul_module(A)
        # L = free on one generator, zeta: L -> K sending e -> e0
        L = FreeModule(A, [MGen("e", 0, 0)])
        zeta = ModuleHom(L, K, gen_images={"e": K.gen_el("e0")})
        assert zeta.is_chain()
        # theta: K -> K multiplication by x (a weight-1 chain map)
        x = A.var_el("x")
        theta = ModuleHom(K, K, wshift=1, gen_images={
            "e0": x * K.gen_el("e0"), "e1": x * K.gen_el("e1")})
        assert theta.is_chain()
        E0 = hom_complex(K, K)
        EL = hom_complex(L, K)
        idK = identity_module_hom(K)
        f1 = induced_hom(E0, EL, zeta, idK)       # restrict along zeta
        f1.check_chain()
        f2 = induced_hom(EL, EL, identity_module_hom(L), theta)
        f2.check_chain()
        # Hom(zeta, theta) = Hom(id, theta) . Hom(zeta, id)
        comb = induced_hom(E0, EL, zeta, theta)
        comp = f2.compose(f1)
        for bd in E0.bidegrees():
            for l in E0.basis(bd):
                v = E0.element(bd, l).to_dictvec()
                assert comp.apply(v) == comb.apply(v)

    def test_homotopic_targets_give_coboundary(self):
        A = poly_line()
        K = koszul_module(A)
        E = hom_complex(K, K)
        # sigma of shift (-1, 1): e0 -> e1; theta' = id + d(sigma) is a
        # chain map homotopic to the identity
        sig = ModuleHom(K, K, k=-1, wshift=1, gen_images={
            "e0": K.gen_el("e1"), "e1": K.zero()})
        dsig = E.from_module_hom(sig).d()
        assert dsig.is_homogeneous() == (0, 1)
        # d(sigma) is multiplication by x: homotopic to the zero map
        x = A.var_el("x")
        theta = ModuleHom(K, K, wshift=1, gen_images={
            "e0": x * K.gen_el("e0"), "e1": x * K.gen_el("e1")})
        assert theta.is_chain()
        theta2 = E.to_module_hom(dsig, 0, 1)
        for g in K.gens:
            assert (theta.apply(K.gen_el(g.name))
                    - theta2.apply(K.gen_el(g.name))).is_zero()
        idK = identity_module_hom(K)
        f = induced_hom(E, E, idK, theta)
        f.check_chain()
        assert not f.is_zero()
        assert nullhomotopy(f) is not None
        # on the identity cocycle the image is an explicit coboundary
        iel = E.from_module_hom(idK)
        witness = coboundary_witness(E.complex(), f.apply(iel.to_dictvec()))
        assert witness is not None


class TestScaleMorphism:
    def test_scale_by_one_and_zero(self):
        A = poly_line()
        K = koszul_module(A)
        idK = identity_module_hom(K)
        s1 = scale_morphism(idK, A.unit())
        for bd in K.bidegrees():
            for l in K.basis(bd):
                assert (s1.image(bd, l) - K.element(bd, l)).is_zero()
        s0 = scale_morphism(idK, A.zero())
        assert all(s0.image(bd, l).is_zero()
                   for bd in K.bidegrees() for l in K.basis(bd))

    def test_non_cocycle_rejected(self):
        gr = GroundRing([("x", 1)], [], wmax=3)
        A = SemifreeAlgebra(gr, [Gen("e", -1, 1)], "sc", Window(-3, 0, 3))
        A.set_gen_diff("e", A.var_el("x"))
        AM = AlgebraModule(A)
        F = free_module(A, [(0, 0)])
        phi = ModuleHom(F, AM, gen_images={"e0": AM.wrap(A.unit())})
        # x = d(e) is a cocycle; fine.  An element of degree -1 is rejected
        with pytest.raises(PreconditionError):
            scale_morphism(phi, A.gen_el("e"))


class TestCylinderModule:
    def test_structure_and_cohomology(self):
        A = poly_line()
        AM = AlgebraModule(A)
        cyl = CylinderAlgebra(A)
        CM = cylinder_module(cyl, AM)
        CM.check_d2()
        small = [(r, b) for r in cyl.bidegrees() for b in CM.bidegrees()
                 if CM.window.contains((r[0] + b[0] + 1, r[1] + b[1]))
                 and r[1] + b[1] <= 3]
        CM.check_leibniz(small)
        assert CM.dim((0, 0)) == 2 and CM.dim((1, 0)) == 1
        assert CM.cohomology() == AM.cohomology()

    def test_eta_eps(self):
        A = poly_line()
        AM = AlgebraModule(A)
        CM = cylinder_module(CylinderAlgebra(A), AM)
        eps = CM.eps()
        for which in (0, 1):
            eta = CM.eta(which)
            comp = eta.compose(eps)
            for bd in AM.bidegrees():
                for l in AM.basis(bd):
                    assert (comp.image(bd, l) - AM.element(bd, l)).is_zero()


class TestHochschildOracle:
    def test_periodic_resolution_and_hochschild(self):
        B = dual_numbers_ring(wmax=8)
        env = TensorAlgebra(B, B)
        a = env.pure(B.var_el("x"), B.unit())
        b = env.pure(B.unit(), B.var_el("x"))
        P = periodic_resolution(env, a, b, depth=6)
        P.check_d2()
        # H(P) is the dual numbers themselves, inside the certified range
        coh = {bd: d for bd, d in P.cohomology().items() if bd[0] > -6}
        assert coh == {(0, 0): 1, (0, 1): 1}
        N = AlgebraModule(env)
        H = hom_complex(P, N)
        hh = {bd: d for bd, d in H.cohomology().items() if bd[0] < 6 and d}
        assert hh == {(0, 1): 1, (0, 2): 1}

    def test_bimodule_action(self):
        B = dual_numbers_ring(wmax=6)
        env = TensorAlgebra(B, B)
        M = BimoduleFromAlgebra(env, B,
                                left_hom=lambda bd, l: B.element(bd, l),
                                right_hom=lambda bd, l: B.element(bd, l))
        M.check_d2()
        M.check_action()
        a = env.pure(B.var_el("x"), B.unit())
        b = env.pure(B.unit(), B.var_el("x"))
        one = M.wrap(B.unit())
        assert ((a * one) - (b * one)).is_zero()  # both act as eps on 1
