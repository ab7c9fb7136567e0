"""The acceptance suite: one callable per criterion, with a shared runner.

Each criterion returns a CriterionResult carrying the measured figure, the
pinned tolerance, and the verdict; the CLI prints one line per criterion
and pytest asserts each verdict.  Tolerances are fixed here, not tuned at
call sites.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import algebra, geometry, kernels, rtorsion, spectral, tensors
from .quadrature import QuadratureSpec


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"[{verdict}] criterion {self.number:2d} {self.name}: "
                f"measured {self.measured:.3e} vs tolerance {self.tolerance:.1e} "
                f"({self.seconds:.1f}s){'  ' + self.detail if self.detail else ''}")


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


# -- 1: Clifford supertrace --------------------------------------------------

def criterion_supertrace() -> CriterionResult:
    def run():
        worst = Fraction(0)
        for n in range(1, 7):
            word = algebra.CliffordElement.identity(n)
            for i in range(1, n + 1):
                word = algebra.clifford_product(word, algebra.CliffordElement.generator(n, i))
                word = algebra.clifford_product(
                    word, algebra.CliffordElement.generator(n, i, hatted=True))
            dev = algebra.supertrace(word) - Fraction((-2) ** n)
            worst = max(worst, abs(dev))
            # every proper canonical word vanishes
            for plain in algebra.form_basis(n):
                for hatted in algebra.form_basis(n):
                    if len(plain) == n and len(hatted) == n:
                        continue
                    st = algebra.supertrace(algebra.CliffordElement.word(n, plain, hatted))
                    worst = max(worst, abs(st))
        # matrix oracle cross-check at n = 3
        for plain in algebra.form_basis(3):
            for hatted in algebra.form_basis(3):
                w = algebra.CliffordElement.word(3, plain, hatted)
                worst = max(worst, abs(algebra.supertrace(w) - algebra.matrix_supertrace(w)))
        return float(worst)

    measured, secs = _timed(run)
    return CriterionResult(1, "clifford supertrace (-2)^n, sub-words vanish",
                           measured, 0.0, measured == 0.0, "exact rational", secs)


# -- 2: commutator lemma -----------------------------------------------------

def criterion_commutators(seed: int = 2024) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        plan = [(2, 80), (3, 70), (4, 50)]
        worst = Fraction(0)
        for n, count in plan:
            basis = [algebra.BiGradedElement.monomial(n, p, h, 1, start=0)
                     for p in algebra.form_basis(n, 0)
                     for h in algebra.form_basis(n, 0)]
            for _ in range(count):
                curv = tensors.random_curvature(n, rng)
                R = curv.curvature_weight()
                R0 = curv.normal_weight()
                if not algebra.wedge(R0, R0).is_zero():
                    return math.inf
                for v in basis:
                    lhs = (algebra.wedge(R, algebra.tangential_projection(v))
                           - algebra.tangential_projection(algebra.wedge(R, v)))
                    diff = lhs - algebra.wedge(R0, v)
                    if not diff.is_zero():
                        return math.inf
                    mirror = (algebra.wedge(R, algebra.normal_projection(v))
                              - algebra.normal_projection(algebra.wedge(R, v)))
                    if not (mirror + algebra.wedge(R0, v)).is_zero():
                        return math.inf
        return float(worst)

    measured, secs = _timed(run)
    return CriterionResult(2, "commutator lemma and nilpotent normal weight (200 tensors)",
                           measured, 0.0, measured == 0.0, "exact rational", secs)


# -- 3: model solution residuals ----------------------------------------------

def criterion_model_solution(seed: int = 2024) -> CriterionResult:
    tol = 1e-6

    def run():
        rng = np.random.default_rng(seed + 3)
        worst = 0.0
        for n in (2, 3):
            curv = tensors.random_curvature(n, rng, mode=algebra.FLOAT,
                                            denominator=8, magnitude=4)
            K = kernels.model_solution(curv)
            xs = np.linspace(0.25, 1.45, 5)
            y1s = np.linspace(-0.8, 0.8, 5)
            ts = (0.5, 1.0, 1.6)
            rest = (0.2,) * (n - 2)
            pp = kernels.HalfSpacePoint(0.9, (0.1,) + rest)
            for t in ts:
                for x in xs:
                    for y1 in y1s:
                        p = kernels.HalfSpacePoint(float(x), (float(y1),) + rest)
                        worst = max(worst, kernels.pde_residual(K, t, p, pp))
                for y1 in y1s:
                    bc1, bc2 = kernels.boundary_residuals(
                        K, t, (float(y1),) + rest, pp)
                    worst = max(worst, bc1, bc2)
        return worst

    measured, secs = _timed(run)
    return CriterionResult(3, "model solution: PDE + boundary residuals (n=2,3)",
                           measured, tol, measured < tol, "", secs)


# -- 4: diagonal display -------------------------------------------------------

def criterion_diagonal(seed: int = 2024) -> CriterionResult:
    tol = 1e-6

    def run():
        rng = np.random.default_rng(seed + 4)
        worst = 0.0
        for n in (2, 3):
            curv = tensors.random_curvature(n, rng, mode=algebra.FLOAT,
                                            denominator=8, magnitude=4)
            K = kernels.model_solution(curv)
            for x in (0.2, 1.0):
                disp = kernels.diagonal_restriction(K, x)
                p = kernels.HalfSpacePoint(x, (0.0,) * (n - 1))
                direct = K.value(1.0, p, p)
                worst = max(worst, (disp - direct).max_abs_coefficient())
        return worst

    measured, secs = _timed(run)
    return CriterionResult(4, "three-term diagonal display vs direct evaluation",
                           measured, tol, measured < tol, "t=1, x in {0.2, 1.0}", secs)


# -- 5: the universal constant --------------------------------------------------

def criterion_constant(spec: QuadratureSpec | None = None) -> CriterionResult:
    tol = 1e-8
    spec = spec or QuadratureSpec()

    def run():
        base = kernels.constant_c(spec)
        halved = kernels.constant_c(spec.halved())
        drift = abs(base.value - halved.value)
        return max(base.method_agreement, drift), base

    (measured, base), secs = _timed(run)
    return CriterionResult(5, "constant c: raw vs profile methods + tolerance halving",
                           measured, tol, measured < tol,
                           f"value {base.value!r} ± {base.error_estimate:.1e}", secs)


# -- 6: interval torsion ---------------------------------------------------------

def criterion_interval() -> CriterionResult:
    tol_zeta = 1e-7
    tol_anom = 1e-8

    def run():
        worst_zeta = 0.0
        anomalies = []
        for bc in ("absolute", "relative"):
            for L in (0.25, 0.5, 1.0, 2.0, 4.0):
                sp = spectral.interval_spectrum(L, bc)
                ln_t = spectral.zeta_torsion(sp, method="closed")
                worst_zeta = max(worst_zeta, abs(ln_t + math.log(2 * L)))
                anomalies.append(spectral.interval_anomaly(L, bc).anomaly)
        spread = max(anomalies) - min(anomalies)
        return worst_zeta, spread

    (wz, spread), secs = _timed(run)
    passed = wz < tol_zeta and spread < tol_anom
    return CriterionResult(6, "interval: zeta'(0) = -ln(2L); anomaly L-independent",
                           max(wz, spread), max(tol_zeta, tol_anom), passed,
                           f"zeta dev {wz:.1e}, anomaly spread {spread:.1e}", secs)


# -- 7: parity vanishing -----------------------------------------------------------

def criterion_parity(seed: int = 2024) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed + 7)
        worst = 0.0
        draws = [(2, 25), (3, 25), (4, 25), (5, 25)]
        for n, count in draws:
            for _ in range(count):
                curv = tensors.random_curvature(n, rng, mode=algebra.FLOAT)
                h = tensors.random_second_fundamental(n, rng, mode=algebra.FLOAT)
                if n % 2:   # odd ambient dimension: transgression density vanishes
                    worst = max(worst, abs(geometry.transgression_density(curv, h)))
                else:       # even: phi density vanishes
                    worst = max(worst, abs(geometry.phi_density(curv, h)))
        return worst

    measured, secs = _timed(run)
    return CriterionResult(7, "parity vanishing of the two boundary densities",
                           measured, 0.0, measured == 0.0,
                           "pointwise, 100 seeded draws", secs)


# -- 8: Stokes check ---------------------------------------------------------------

def criterion_stokes() -> CriterionResult:
    tol = 1e-6

    def run():
        gaps = []
        for kind, kw in (("flat_disc", {}), ("curved_cap", {"alpha0": 0.9})):
            geo = geometry.make_geometry(kind, **kw)
            gaps.append(geometry.stokes_gap(geo)["gap"])
        return max(gaps)

    measured, secs = _timed(run)
    return CriterionResult(8, "transgression Stokes identity (flat disc, curved cap)",
                           measured, tol, measured < tol, "", secs)


# -- 9: product-metric prediction ----------------------------------------------------

def criterion_product_prediction() -> CriterionResult:
    def run():
        geo = geometry.make_geometry("product_collar", radius=1.0, depth=0.5)
        collar = geometry.collar_restrict(geo.patch, 0.3)
        worst = 0.0
        for rank, chi in ((1, 0), (2, 2), (3, -2)):
            pred = geometry.predict_anomaly(collar, rank, chi, constant_c_value=1.0)
            if pred.term_transgression != 0.0 or pred.term_phi != 0.0:
                return math.inf
            worst = max(worst, abs(pred.total - rank * chi * math.log(2.0)))
        return worst

    measured, secs = _timed(run)
    return CriterionResult(9, "product collar: geometric terms identically zero",
                           measured, 0.0, measured == 0.0, "prediction = chi rank ln2", secs)


# -- 10: combinatorial invariance -----------------------------------------------------

def criterion_rtorsion(seed: int = 2024) -> CriterionResult:
    tol = 1e-12

    def run():
        worst = 0.0
        for build in (lambda: rtorsion.interval_complex(1.7, bc="absolute", segments=1),
                      lambda: rtorsion.interval_complex(0.6, bc="relative", segments=2),
                      lambda: rtorsion.circle_complex(2.3, segments=3)):
            cx = build()
            base = rtorsion.r_torsion(cx).ln_tau
            fine = rtorsion.r_torsion(rtorsion.subdivide(cx)).ln_tau
            finer = rtorsion.r_torsion(rtorsion.subdivide(rtorsion.subdivide(cx))).ln_tau
            worst = max(worst, abs(base - fine), abs(base - finer))
        # exact covariance on random rational basis changes
        rng = np.random.default_rng(seed + 10)
        cx = rtorsion.BasedChainComplex(
            [2, 1], {0: [[Fraction(-1), Fraction(1)]]},
            {0: [[Fraction(1), Fraction(1)]]})
        tv = rtorsion.r_torsion(cx)
        for _ in range(25):
            num = int(rng.integers(1, 12)) * (1 if rng.integers(2) else -1)
            den = int(rng.integers(1, 12))
            a = Fraction(num, den)
            tv2 = rtorsion.r_torsion(rtorsion.replace_cohomology_basis(cx, 0, [[a]]))
            if tv2.tau_abs_exact != tv.tau_abs_exact * abs(a):
                return math.inf
        return worst

    measured, secs = _timed(run)
    return CriterionResult(10, "R-torsion: subdivision invariance + exact covariance",
                           measured, tol, measured < tol, "", secs)


ALL_CRITERIA = [
    criterion_supertrace,
    criterion_commutators,
    criterion_model_solution,
    criterion_diagonal,
    criterion_constant,
    criterion_interval,
    criterion_parity,
    criterion_stokes,
    criterion_product_prediction,
    criterion_rtorsion,
]


def run_acceptance(seed: int = 2024, *, echo=print) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        kwargs = {}
        import inspect

        if "seed" in inspect.signature(fn).parameters:
            kwargs["seed"] = seed
        res = fn(**kwargs)
        results.append(res)
        if echo:
            echo(res.line())
    return results
