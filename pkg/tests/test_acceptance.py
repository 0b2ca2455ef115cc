"""End-to-end acceptance checks at stated tolerances.

Each test covers one headline guarantee of the package and finishes by
printing a single summary line (visible under ``pytest -s``); the pytest
verdict for the test is the pass/fail line for that guarantee.
"""

import math
import time

import numpy as np
import pytest
from pytest import approx

from heatlab.htransform import (TransformPair, build_two_end_weight,
                                verify_kernel_identity)
from heatlab.isoperimetry import (asymptotic_profile, functional_integrals,
                                  functional_lower_bound, monotone_envelope,
                                  profile_halfline)
from heatlab.model import (NONPARABOLIC, PARABOLIC, AffineWeight,
                           WeightedModel, classify_parabolicity, log_volume)
from heatlab.monotone import (CONSTANT, NONINCREASING, ZERO, MonotoneTab,
                              generalized_inverse)
from heatlab.profiles import (EuclideanProfile, ExpAlphaProfile,
                              FullLineProfile, HyperbolicProfile,
                              PowerProfile, two_end_profile)
from heatlab.solver import DIRICHLET, NEUMANN, GridSpec, kernel_diag
from heatlab.spectral import (FaberKrahnFunction, fk_connected_sum,
                              gamma_inverse, heat_upper_bound, hypothesis_fk,
                              lambda1_dirichlet, lambda1_rayleigh_upper,
                              two_end_pipeline)


def two_end_pair(alpha, r_max=400.0):
    base = WeightedModel(two_end_profile(alpha, 2))
    return build_two_end_weight(base, r_max=r_max)


def step_tab(breaks, vals):
    return MonotoneTab(np.asarray(breaks, float), np.asarray(vals, float),
                       direction=NONINCREASING, interpolation=CONSTANT,
                       extrapolation=ZERO)


def random_step_tab(rng, P=None):
    m = int(rng.integers(2, 10))
    if P is None:
        breaks = np.concatenate(([0.0],
                                 np.cumsum(rng.uniform(0.05, 3.0, m))))
    else:
        breaks = np.concatenate(([0.0], np.sort(rng.uniform(0.0, P, m - 1)),
                                 [P]))
    vals = np.concatenate((np.sort(rng.uniform(0.0, 5.0, m))[::-1], [0.0]))
    vals[:-1] += 1e-3
    return step_tab(breaks, vals)


def _report(label, detail):
    print(f"PASS  {label}: {detail}")


class TestTransformOracle:
    def test_kernel_identity_at_scale(self):
        # q(r, r') must equal h(r)h(r')q~(r, r') for the Dirichlet problem;
        # checked on a 4097-node fine grid with second-order refinement
        t0 = time.perf_counter()
        flat = FullLineProfile(PowerProfile(0.0, 2), PowerProfile(0.0, 2),
                               1.0)
        weight = AffineWeight(1.0, 1.0)
        flat_pair = TransformPair(base=WeightedModel(flat),
                                  transformed=WeightedModel(flat, weight),
                                  weight=weight)
        cases = (("flat h=1+r", flat_pair, [2.0, 5.0]),
                 ("two-end alpha=1/2", two_end_pair(0.5), [1.5, 4.0]))
        worst, orders = 0.0, []
        for _, pair, srcs in cases:
            rep = verify_kernel_identity(pair, r_max=24.0,
                                         times=[0.5, 1.0, 5.0],
                                         source_radii=srcs, nodes=2049,
                                         dt=0.02)
            assert rep.nodes_fine == 4097
            assert rep.max_error_fine <= 1e-2
            assert 1.7 <= rep.order <= 2.3
            worst = max(worst, rep.max_error_fine)
            orders.append(rep.order)
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        _report("h-transform kernel identity",
                f"max rel error {worst:.2e}, orders "
                f"{', '.join(f'{o:.2f}' for o in orders)}, {elapsed:.1f}s")


class TestGaussianBenchmark:
    def test_flat_line_kernel_and_composition(self):
        t0 = time.perf_counter()
        model = WeightedModel(FullLineProfile(PowerProfile(0.0, 2),
                                              PowerProfile(0.0, 2), 1.0))
        spec = GridSpec(-20.0, 20.0, 4096, 0.005)
        r = spec.node_positions()
        src = int(np.argmin(np.abs(r)))
        kern = kernel_diag(model, spec, DIRICHLET, [1.0], [src],
                           keep_fields=True)
        exact = np.exp(-((r - r[src]) ** 2) / 4.0) / math.sqrt(4.0 * math.pi)
        gauss_err = float(np.max(np.abs(kern.fields[0][:, 0] - exact))
                          / exact.max())
        assert gauss_err <= 0.01

        # p_{2t}(x, x) must equal the self-composition of p_t
        half = WeightedModel(PowerProfile(0.0, 2))
        spec2 = GridSpec(0.0, 20.0, 1025, 0.005)
        kern2 = kernel_diag(half, spec2, NEUMANN, [0.5, 1.0], [120],
                            keep_fields=True)
        row = kern2.fields[0][:, 0]
        composed = float(np.sum(row * row * kern2.cell_volumes))
        ck_err = abs(composed - kern2.diag[1, 0]) / kern2.diag[1, 0]
        assert ck_err <= 0.01
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0
        _report("Gaussian benchmark",
                f"sup-norm error {gauss_err:.2%}, composition error "
                f"{ck_err:.2%}, {elapsed:.1f}s")


class TestGeneralizedInverse:
    def test_integral_identity_and_double_inversion(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(100):
            tab = random_step_tab(rng)
            pair = generalized_inverse(tab)
            ref = tab.integral()
            worst = max(worst, abs(pair.phi_star.integral() - ref) / ref)
            back = generalized_inverse(pair.phi_star).phi_star
            np.testing.assert_array_equal(back.breakpoints, tab.breakpoints)
            np.testing.assert_array_equal(back.values, tab.values)
        assert worst <= 1e-10
        _report("generalized-inverse identity",
                f"worst integral mismatch {worst:.2e} on 100 step functions, "
                "double inversion bit-exact")


class TestFunctionalLemma:
    def test_bound_below_brute_force_pairs(self):
        # min(h0(v)/6, f(v/P)P/8) must stay below int f(phi) + int g(phi*)
        # for every admissible pair with common integral v
        t0 = time.perf_counter()
        rng = np.random.default_rng(1)
        checked, margin = 0, np.inf
        for _ in range(10):
            a, b = rng.uniform(0.0, 1.2), rng.uniform(0.1, 1.0)
            P = float(rng.uniform(2.0, 10.0))
            f = lambda x, a=a: x ** a
            g = lambda y, b=b, P=P: min(y, P - y) ** b if 0.0 < y < P else 0.0
            v = float(rng.uniform(0.3, 2.0) * P)
            bound = functional_lower_bound(f, g, P, v, validate=False)
            for _ in range(200):
                tab = random_step_tab(rng, P=P)
                tab = step_tab(tab.breakpoints,
                               tab.values * (v / tab.integral()))
                pair = generalized_inverse(tab)
                assert pair.common_integral == approx(v, rel=1e-12)
                fi, gi = functional_integrals(pair, f, g)
                assert fi + gi >= bound * (1.0 - 1e-12)
                margin = min(margin, (fi + gi) / bound)
                checked += 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        _report("functional lower bound",
                f"{checked} admissible pairs, zero violations, tightest "
                f"ratio {margin:.3f}, {elapsed:.1f}s")


class TestIsoperimetricAsymptotics:
    def test_transformed_profile_tracks_closed_form(self):
        # J(v) = c v/(log v)^((1-alpha)/alpha) carries a free scale c; fix
        # it once at the top of the window, then the numeric profile and
        # the closed form must agree within 10x across six decades
        t0 = time.perf_counter()
        v = np.geomspace(1e2, 1e8, 40)
        spans = []
        for alpha, r_max in ((1.0 / 3.0, 1400.0), (0.5, 400.0),
                             (1.0, 400.0)):
            pair = two_end_pair(alpha, r_max=r_max)
            j = profile_halfline(pair.transformed, r_start=2.0, v_max=3e8)
            if not j.j_over_v_nonincreasing:
                j = monotone_envelope(j)
            shape = asymptotic_profile(alpha, 2)
            c_cal = float(j.value(v[-1]) / shape.value(v[-1]))
            ratio = j.value(v) / (c_cal * shape.value(v))
            assert np.all(ratio >= 0.1) and np.all(ratio <= 10.0)
            spans.append(float(ratio.max() / ratio.min()))
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        _report("isoperimetric asymptotics",
                "ratio spread per alpha "
                f"{', '.join(f'{s:.2f}' for s in spans)} (allowed 100), "
                f"{elapsed:.1f}s")


class TestGammaInversion:
    def test_closed_form_and_small_time_branch(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(2, 7))
            t = float(10.0 ** rng.uniform(-3, 3))
            lam = lambda v, n=n: np.asarray(v, dtype=float) ** (-2.0 / n)
            fk = FaberKrahnFunction(Lambda=lam, nonincreasing=True,
                                    integrable_at_zero=True)
            expect = (2.0 * t / n) ** (n / 2.0)
            worst = max(worst, abs(gamma_inverse(fk, t) - expect) / expect)
        assert worst <= 1e-6

        # glued Faber-Krahn function: the small-volume power branch must
        # give the t^(-n/2) short-time decay of the upper bound
        n = 2
        euclid = FaberKrahnFunction(
            Lambda=lambda v: np.asarray(v, dtype=float) ** (-2.0 / n),
            nonincreasing=True, integrable_at_zero=True)
        glued = fk_connected_sum([hypothesis_fk(0.5, n, 1.0), euclid],
                                 c=1.0, Q=2.0)
        t = np.geomspace(1e-6, 1e-4, 12)
        up = np.log([heat_upper_bound(glued, x) for x in t])
        slope = float(np.polyfit(np.log(t), up, 1)[0])
        assert slope == approx(-n / 2.0, rel=0.05)
        _report("gamma inversion",
                f"closed-form error {worst:.2e} on 50 draws, small-time "
                f"slope {slope:.4f} vs {-n / 2.0}")


class TestSharpExponent:
    def test_decay_exponent_and_ordering_three_alphas(self):
        t0 = time.perf_counter()
        lines = []
        for alpha in (1.0 / 3.0, 0.5, 1.0):
            theo = alpha / (2.0 - alpha)
            report = two_end_pipeline(alpha)
            assert np.all(report.lower <= report.numeric)
            assert np.all(report.numeric <= report.upper)
            fit_num = report.fitted_exponent
            fit_up = report.details["fitted_exponent_upper"]
            assert fit_num == approx(theo, rel=0.15)
            assert fit_up == approx(theo, rel=0.15)
            lines.append(f"alpha={alpha:.3f} numeric {fit_num:.4f} upper "
                         f"{fit_up:.4f} target {theo:.4f}")
        elapsed = time.perf_counter() - t0
        assert elapsed < 600.0
        _report("sharp decay exponent",
                "; ".join(lines) + f"; {elapsed:.0f}s")


class TestEigenvalueOrdering:
    def test_flat_interval_closed_forms(self):
        for R in (1.0, 3.0, 7.0):
            flat = WeightedModel(PowerProfile(0.0, 2))
            dd = lambda1_dirichlet(flat, R, left_bc=DIRICHLET)
            nd = lambda1_dirichlet(flat, R, left_bc=NEUMANN)
            assert dd == approx(math.pi ** 2 / R ** 2, rel=1e-3)
            assert nd == approx((math.pi / (2.0 * R)) ** 2, rel=1e-3)
        _report("flat interval eigenvalues",
                "pi^2/R^2 and (pi/2R)^2 matched to 0.1%")

    def test_rayleigh_upper_and_faber_krahn_floor(self):
        pair = two_end_pair(0.5)
        cases = (
            (WeightedModel(PowerProfile(0.0, 2)), np.linspace(0.5, 25, 20)),
            (WeightedModel(EuclideanProfile(3)), np.linspace(0.5, 25, 20)),
            (WeightedModel(HyperbolicProfile(3)), np.linspace(0.5, 12, 20)),
            (pair.transformed, np.geomspace(2.0, 64.0, 20)),
        )
        ray_min, fk_min = np.inf, np.inf
        for model, radii in cases:
            j = profile_halfline(model, r_start=0.0, v_max=1e11)
            if not j.j_over_v_nonincreasing:
                j = monotone_envelope(j)
            for R in radii:
                lam = lambda1_dirichlet(model, float(R))
                ray = lambda1_rayleigh_upper(model, float(R))
                v = float(np.exp(log_volume(model, float(R), lo=0.0)))
                floor = 0.25 * (j.value(v) / v) ** 2
                assert lam <= ray
                assert lam >= floor
                ray_min = min(ray_min, ray / lam)
                fk_min = min(fk_min, lam / floor)
        _report("eigenvalue ordering",
                f"80 radii over 4 models; min upper/lambda1 {ray_min:.2f}, "
                f"min lambda1/floor {fk_min:.2f}")


class TestParabolicity:
    def test_classification_by_area_growth(self):
        for alpha in (0.1, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0):
            model = WeightedModel(ExpAlphaProfile(alpha=alpha, n=2,
                                                  cap_radius=0.5))
            assert classify_parabolicity(model) == PARABOLIC
        assert classify_parabolicity(
            WeightedModel(PowerProfile(0.0, 2))) == PARABOLIC
        for profile in (EuclideanProfile(3), HyperbolicProfile(2),
                        PowerProfile(2.0, 2)):
            assert classify_parabolicity(WeightedModel(profile)) \
                == NONPARABOLIC
        _report("parabolicity classification",
                "thin ends parabolic for six alphas, growing areas "
                "nonparabolic, flat half-line parabolic")
