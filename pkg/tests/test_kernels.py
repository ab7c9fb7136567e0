"""Half-space model problem: image kernels, Duhamel solution, profile integrals."""

import math

import numpy as np
import pytest

from torsionlab import kernels as kr
from torsionlab.algebra import (
    FLOAT,
    BiGradedElement,
    nilpotent_exp,
    normal_projection,
    tangential_projection,
    wedge,
)
from torsionlab.quadrature import QuadratureSpec, gauss_nodes, pairwise_sum
from torsionlab.tensors import CurvatureTensor, random_curvature

SPEC = QuadratureSpec()


def curv_n2(value=0.6):
    c = CurvatureTensor(2, mode=FLOAT, start=0)
    c.set_entry(0, 1, 0, 1, value)
    return c


@pytest.fixture(scope="module")
def curv3():
    rng = np.random.default_rng(17)
    return random_curvature(3, rng, mode=FLOAT, denominator=8, magnitude=4)


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

def test_dirichlet_vanishes_on_boundary():
    pp = kr.HalfSpacePoint(0.8, (0.1,))
    for t in (0.2, 1.0):
        for y in (-1.0, 0.5):
            assert kr.k_dirichlet(t, kr.HalfSpacePoint(0.0, (y,)), pp) == 0.0


def test_neumann_normal_derivative_vanishes():
    pp = kr.HalfSpacePoint(0.8, (0.1,))
    h = 1e-4
    for t in (0.3, 1.2):
        up = kr.k_neumann(t, kr.HalfSpacePoint(h, (0.2,)), pp)
        dn = kr.k_neumann(t, kr.HalfSpacePoint(0.0, (0.2,)), pp)
        # even image symmetry: one-sided slope is O(h)
        assert abs(up - dn) / h < 1e-2 * abs(dn)


def test_image_identity_sum_is_twice_free():
    p = kr.HalfSpacePoint(0.4, (0.3,))
    pp = kr.HalfSpacePoint(0.9, (-0.2,))
    for t in (0.1, 0.7):
        lhs = kr.k_dirichlet(t, p, pp) + kr.k_neumann(t, p, pp)
        assert lhs == pytest.approx(2.0 * kr.k_free(t, p, pp), rel=1e-15)


def test_neumann_conservation_quadrature():
    # ∫_{R^2_+} K_N(t, p, p') dp' = 1
    for t, x in ((0.3, 0.4), (1.0, 1.5)):
        p = kr.HalfSpacePoint(x, (0.1,))
        r = 6.0 * math.sqrt(4 * t) + x
        xs, xw = gauss_nodes(220, 0.0, r)
        ys, yw = gauss_nodes(220, 0.1 - r, 0.1 + r)
        gx = (np.exp(-((xs - x) ** 2) / (4 * t)) + np.exp(-((xs + x) ** 2) / (4 * t)))
        gy = np.exp(-((ys - 0.1) ** 2) / (4 * t))
        total = (gx @ xw) * (gy @ yw) / (4 * math.pi * t)
        assert abs(total - 1.0) < 1e-12


def test_positive_time_required():
    p = kr.HalfSpacePoint(0.4, (0.3,))
    with pytest.raises(kr.KernelError):
        kr.k_dirichlet(0.0, p, p)
    with pytest.raises(kr.KernelError):
        kr.k_neumann(-1.0, p, p)


def test_half_space_point_validation():
    with pytest.raises(kr.KernelError):
        kr.HalfSpacePoint(-0.1, (0.0,))


def test_kernel_positivity_grids():
    pp = kr.HalfSpacePoint(0.7, (0.0,))
    for t in (0.2, 0.9):
        for x in np.linspace(0.05, 2.0, 7):
            for y in np.linspace(-1.0, 1.0, 5):
                p = kr.HalfSpacePoint(float(x), (float(y),))
                assert kr.k_neumann(t, p, pp) > 0.0
                assert kr.k_dirichlet(t, p, pp) > 0.0


# ---------------------------------------------------------------------------
# parametrix and source
# ---------------------------------------------------------------------------

def test_k0_with_zero_curvature_reduces_to_blocks():
    curv = CurvatureTensor(2, mode=FLOAT, start=0)
    k0 = kr.assemble_k0(curv)
    t, p, pp = 0.6, kr.HalfSpacePoint(0.5, (0.2,)), kr.HalfSpacePoint(1.0, (-0.1,))
    val = k0.value(t, p, pp)
    # tangential block K_N, normal block K_D on the e^0 ê^0 component? with
    # R = 0 the projections of exp(0)=1 are 1 and 0: value is K_N alone
    assert val.scalar_part() == pytest.approx(kr.k_neumann(t, p, pp), rel=1e-14)
    assert len(val.terms) == 1


def test_k0_boundary_displays(curv3):
    for curv in (curv_n2(), curv3):
        k0 = kr.assemble_k0(curv)
        rest = (0.2,) * (curv.n - 2)
        pp = kr.HalfSpacePoint(0.9, (0.1,) + rest)
        bc1, bc2 = kr.boundary_residuals(k0, 0.7, (0.3,) + rest, pp)
        assert bc1 < 1e-12
        assert bc2 < 1e-9


def test_k0_defect_matches_source_kernel(curv3):
    # (∂_t + Δ + R) K0 = R_0 (K_N - K_D) exp(-tR), via finite differences
    for curv in (curv_n2(), curv3):
        k0 = kr.assemble_k0(curv)
        k1 = kr.source_kernel(curv)
        rest = (0.2,) * (curv.n - 2)
        pp = kr.HalfSpacePoint(0.9, (0.1,) + rest)
        for (t, x, y) in ((0.8, 0.5, 0.3), (1.2, 1.1, -0.4)):
            p = kr.HalfSpacePoint(x, (y,) + rest)
            res = kr.pde_residual(k0, t, p, pp, source=k1)
            assert res < 1e-7


def test_source_kernel_rejects_bad_weight():
    bad = CurvatureTensor(2, mode=FLOAT, start=1)
    with pytest.raises(kr.KernelError):
        kr.assemble_k0(bad)


# ---------------------------------------------------------------------------
# model solution
# ---------------------------------------------------------------------------

def test_model_solution_residuals(curv3):
    for curv in (curv_n2(), curv3):
        K = kr.model_solution(curv)
        rest = (0.2,) * (curv.n - 2)
        pp = kr.HalfSpacePoint(0.9, (0.1,) + rest)
        for (t, x, y) in ((0.6, 0.4, 0.2), (1.0, 1.2, -0.5)):
            p = kr.HalfSpacePoint(x, (y,) + rest)
            assert kr.pde_residual(K, t, p, pp) < 1e-6
        bc1, bc2 = kr.boundary_residuals(K, 0.8, (0.3,) + rest, pp)
        assert bc1 < 1e-9 and bc2 < 1e-9


def test_model_solution_initial_condition():
    K = kr.model_solution(curv_n2())
    res = kr.initial_condition_residual(K, kr.HalfSpacePoint(2.0, (0.3,)))
    assert res < 5e-4


def test_duhamel_terminates_structurally(curv3):
    # appending another source convolution contributes R_0 ∧ R_0 = 0 exactly
    for curv in (curv_n2(), curv3):
        R0 = curv.normal_weight().to_float()
        assert wedge(R0, R0).is_zero()
        k1 = kr.source_kernel(curv)
        for term1 in k1.terms:
            for b1 in term1.poly.values():
                for term2 in k1.terms:
                    for b2 in term2.poly.values():
                        assert wedge(b1, b2).is_zero()


# ---------------------------------------------------------------------------
# diagonal restriction
# ---------------------------------------------------------------------------

def test_diagonal_display_matches_direct(curv3):
    for curv in (curv_n2(), curv3):
        K = kr.model_solution(curv)
        zeros = (0.0,) * (curv.n - 1)
        for x in (0.2, 1.0):
            disp = kr.diagonal_restriction(K, x)
            direct = K.value(1.0, kr.HalfSpacePoint(x, zeros), kr.HalfSpacePoint(x, zeros))
            assert (disp - direct).max_abs_coefficient() < 1e-6


def test_diagonal_large_x_limit(curv3):
    K = kr.model_solution(curv3)
    n = curv3.n
    lead = (4 * math.pi) ** (-n / 2)
    expR = nilpotent_exp(curv3.curvature_weight().to_float().scale(-1.0))
    far = kr.diagonal_restriction(K, 9.0)
    assert (far - expR.scale(lead)).max_abs_coefficient() < 1e-12


def test_diagonal_zero_curvature_scalar_form():
    curv = CurvatureTensor(2, mode=FLOAT, start=0)
    K = kr.model_solution(curv)
    for x in (0.0, 0.7):
        val = kr.diagonal_restriction(K, x)
        lead = (4 * math.pi) ** (-1.0)
        # tangential block (1 + e^{-x^2}), no other components
        assert val.scalar_part() == pytest.approx(lead * (1 + math.exp(-x * x)), rel=1e-14)
        assert len(val.terms) == 1


def test_diagonal_negative_x_rejected(curv3):
    K = kr.model_solution(curv3)
    with pytest.raises(kr.KernelError):
        kr.diagonal_restriction(K, -0.5)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def test_convolve_with_zero_kernel():
    curv = CurvatureTensor(2, mode=FLOAT, start=0)   # zero curvature: K1 = 0
    k0 = kr.assemble_k0(curv)
    k1 = kr.source_kernel(curv)
    out = kr.convolve(k0, k1, 0.5, kr.HalfSpacePoint(0.4, (0.1,)),
                      kr.HalfSpacePoint(0.8, (0.2,)), SPEC)
    assert out.is_zero()


def test_convolve_semigroup_free_gaussian():
    G = kr.free_scalar_kernel(2)
    t = 0.8
    p, pp = kr.HalfSpacePoint(0.5, (0.2,)), kr.HalfSpacePoint(1.2, (-0.3,))
    out = kr.convolve(G, G, t, p, pp, SPEC, x_domain="line")
    assert out.scalar_part() == pytest.approx(t * kr.k_free(t, p, pp), abs=1e-12)


@pytest.mark.slow
def test_convolve_matches_brute_force_triple_quadrature():
    curv = curv_n2()
    k0 = kr.assemble_k0(curv)
    k1 = kr.source_kernel(curv)
    t = 0.7
    p, pp = kr.HalfSpacePoint(0.5, (0.2,)), kr.HalfSpacePoint(1.1, (-0.3,))
    reduced = kr.convolve(k0, k1, t, p, pp, SPEC)
    brute = kr.convolve(k0, k1, t, p, pp, SPEC, brute_force=True)
    assert (reduced - brute).max_abs_coefficient() < 10 * 1e-8


def test_convolve_rejects_nonseparable():
    K = kr.model_solution(curv_n2())
    k1 = kr.source_kernel(curv_n2())
    with pytest.raises(kr.KernelError):
        kr.convolve(K, k1, 0.5, kr.HalfSpacePoint(0.4, (0.1,)),
                    kr.HalfSpacePoint(0.8, (0.2,)), SPEC)


# ---------------------------------------------------------------------------
# profile integrals
# ---------------------------------------------------------------------------

def test_f_paths_agree():
    for x in (0.0, 0.5, 1.0, 2.0):
        reduced = kr.f_of_x(x, SPEC, method="reduced")
        direct = kr.f_of_x(x, SPEC, method="direct")
        assert abs(reduced - direct) < 1e-8


def test_f_nonpositive_and_decaying():
    values = [kr.f_of_x(x, SPEC) for x in (0.0, 0.3, 1.0, 3.0, 8.0)]
    assert all(v <= 0 for v in values)
    assert abs(values[-1]) < 1e-10
    assert abs(values[0] + math.pi ** 1.5 / 2) < 1e-12   # closed form at x = 0


def test_f_rejects_negative_argument():
    with pytest.raises(kr.KernelError):
        kr.f_of_x(-1.0)


def test_diagonal_profile_properties():
    assert kr.diagonal_correction_profile(0.0) == pytest.approx(0.0, abs=1e-13)
    vals = [float(kr.diagonal_correction_profile(x)) for x in (0.2, 0.8, 2.0, 8.0)]
    assert all(v <= 0 for v in vals)
    assert abs(vals[-1]) < 1e-12


def test_correction_profile_broadcasts():
    xs = np.array([0.1, 0.5, 1.0])
    out = kr.correction_profile(1.0, xs, xs)
    singles = [kr.correction_profile(1.0, float(x), float(x)) for x in xs]
    assert np.allclose(out, singles, rtol=0, atol=0)


def test_constant_c_two_methods_positive_stable():
    base = kr.constant_c(SPEC)
    assert base.value > 0
    assert base.method_agreement < 1e-8
    halved = kr.constant_c(SPEC.halved())
    assert abs(halved.value - base.value) < 1e-8


def test_constant_c_matches_high_precision_oracle():
    # independent high-precision evaluation of -∫ x f(x) dx with mpmath,
    # using only the displayed integrand (no erfc reduction)
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30

    def f_mp(x):
        def inner(s, xp):
            g = mp.e ** (-(x - xp) ** 2 / (4 * s)) + mp.e ** (-(x + xp) ** 2 / (4 * s))
            return g * 2 * mp.e ** (-(x + xp) ** 2 / (4 * (1 - s)))

        return -mp.quad(lambda s: mp.quad(lambda xp: inner(s, xp), [0, x, x + 40]),
                        [0, mp.mpf(1) / 2, 1])

    oracle = -mp.quad(lambda x: x * f_mp(x), [0, 1, 8])
    ours = kr.constant_c(SPEC)
    assert abs(ours.value - float(oracle)) < 1e-8
