import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import ALL_KERNELS, KERNELS, kernel_id
from dislog.distribution import (
    DiscreteLS,
    Theta,
    a_theta,
    a_theta_inverse,
    modes_of_pmf,
    reconstruct_from_hazard,
)
from dislog.errors import DomainError, MomentDivergenceError
from dislog.kernels import KernelSpec, standard_cdf

# Z_g and pmf(0..5) at lam=2, phi=1.5, by 20-digit mpmath quadrature of the
# kernel definitions (independent of the closed forms used by the package).
MPMATH_PMF = {
    ("normal", ()): (2.5066282746310005, 0.28571310247915719, 0.21428689752084281, 0.12970074780320797, 0.084586149717634836, 0.058527731692226049, 0.042329428046220368),
    ("student-t", (4,)): (2.6666666666666667, 0.30083340146970981, 0.19916659853029019, 0.12139231588046433, 0.077774282649825859, 0.052853550313466963, 0.037769741402061433),
    ("power-exponential", (-0.5,)): (2.1558005495409279, 0.24013005431582332, 0.25986994568417668, 0.15338332297546505, 0.10648662270871162, 0.076753679538756265, 0.054782052529203738),
    ("power-exponential", (0.5,)): (3.0913455368849867, 0.33399595717966856, 0.16600404282033144, 0.10202335871484739, 0.063980684105484046, 0.04429743248144157, 0.032759467761757754),
    ("contaminated-normal", (0.5, 0.5)): (5.013256549262001, 0.31511093338049581, 0.18488906661950419, 0.11112264257808348, 0.073766424041420701, 0.052320475529854792, 0.038888628788181354),
    ("extended-bs", (0.5,)): (0.62665706865775013, 0.008502261817706796, 0.4914977381822932, 0.41126182961552044, 0.080235908566772766, 0.0079826425953634191, 0.00049795398938961084),
    ("extended-bs-t", (0.5, 4)): (0.66666666666666667, 0.037722567450794594, 0.46227743254920541, 0.37561400787321201, 0.086663424675993397, 0.022467646664847942, 0.0077609964448394887),
}

THETAS = [Theta(2, 1), Theta(2, 4), Theta(5, 8)]


def law(kernel, lam=2.0, phi=1.0):
    return DiscreteLS(kernel, Theta(lam, phi))


NORMAL = law(KernelSpec("normal"))

LIGHT_KERNELS = [k for k in ALL_KERNELS if k.family.value not in ("student-t", "extended-bs-t")]


def brute_moment(d, r):
    """``sum x**r p(x)`` up to the first ``N`` with ``N**r R(N) < 1e-14``."""
    n = 64
    while n**r * d.rf(n) >= 1e-14:
        n *= 2
    total = 0.0
    for start in range(0, n + 1, 10**6):
        x = np.arange(start, min(start + 10**6, n + 1), dtype=float)
        total += float(np.sum(x**r * d.pmf(x)))
    return total


class TestTheta:
    @pytest.mark.parametrize("lam, phi", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.inf, 1), (1, math.nan)])
    def test_invalid(self, lam, phi):
        with pytest.raises(DomainError):
            Theta(lam, phi)


class TestATheta:
    def test_at_median(self):
        assert a_theta(Theta(2, 1), 2.0) == 0.0

    def test_scaled(self):
        assert a_theta(Theta(2, 4), 2 * math.e**2) == pytest.approx(1.0, rel=1e-15)

    def test_round_trip(self, rng):
        theta = Theta(3.7, 2.2)
        y = rng.lognormal(1.0, 2.0, size=100)
        np.testing.assert_allclose(a_theta_inverse(theta, a_theta(theta, y)), y, rtol=1e-12)

    def test_increasing(self):
        y = np.linspace(0.1, 50, 200)
        assert np.all(np.diff(a_theta(Theta(2, 1.5), y)) > 0)

    def test_zero_is_minus_infinity(self):
        assert a_theta(Theta(2, 1), 0.0) == -np.inf

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            a_theta(Theta(2, 1), -1.0)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_continuous_median_is_lambda(self, kernel):
        theta = Theta(3.3, 2.0)
        assert standard_cdf(kernel, a_theta(theta, theta.lam)) == 0.5


class TestContinuousPdf:
    def test_lognormal(self):
        d = law(KernelSpec("normal"), 1.0, 1.0)
        y = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(d.continuous_pdf(y), stats.lognorm.pdf(y, s=1.0), rtol=1e-10)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_at_median(self, kernel):
        d = law(kernel, 2.5, 1.7)
        from dislog.kernels import kernel_g, partition_constant

        expected = kernel_g(kernel, 0.0) / (partition_constant(kernel) * math.sqrt(1.7) * 2.5)
        assert d.continuous_pdf(2.5) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_integrates_to_one(self, kernel):
        d = law(kernel, 2.0, 1.0)
        # substitute y = exp(t) so the heavy tails are integrable numerically
        total, _ = integrate.quad(
            lambda t: d.continuous_pdf(math.exp(t)) * math.exp(t), -300, 300,
            points=[-20, -5, 0, 5, 20], limit=500,
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            NORMAL.continuous_pdf(0.0)


class TestPmf:
    def test_pmf_zero_normal(self):
        expected = stats.norm.cdf(-math.log(2))
        assert NORMAL.pmf(0) == pytest.approx(expected, abs=1e-15)
        assert NORMAL.pmf(0) == pytest.approx(0.24411, abs=1e-5)

    @pytest.mark.parametrize("key", sorted(MPMATH_PMF), ids=str)
    def test_against_mpmath(self, key):
        z, *pm = MPMATH_PMF[key]
        kernel = KernelSpec(*key)
        from dislog.kernels import partition_constant

        assert partition_constant(kernel) == pytest.approx(z, rel=1e-13)
        np.testing.assert_allclose(law(kernel, 2.0, 1.5).pmf(np.arange(6)), pm, rtol=1e-11)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_partial_sum_is_cdf(self, kernel):
        d = law(kernel, 2.0, 1.5)
        for n in (0, 3, 20):
            total = float(np.sum(d.pmf(np.arange(n + 1))))
            assert total == pytest.approx(float(standard_cdf(kernel, a_theta(d.theta, n + 1))), abs=1e-14)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_telescoping(self, kernel):
        d = law(kernel, 3.0, 2.0)
        x = np.arange(1, 51)
        np.testing.assert_allclose(d.cdf(x) - d.cdf(x - 1), d.pmf(x), rtol=0, atol=1e-12)

    def test_pmf_zero_is_lowest_cell(self):
        assert NORMAL.pmf(0) == NORMAL.cdf(0)

    @pytest.mark.parametrize("x", [-1, 1.5, math.nan])
    def test_invalid_support(self, x):
        with pytest.raises(DomainError):
            NORMAL.pmf(x)

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
    @pytest.mark.parametrize("theta", THETAS, ids=lambda t: f"lam{t.lam:g}-phi{t.phi:g}")
    @pytest.mark.parametrize("n", [10, 100, 1000])
    def test_normalization_identity(self, kernel, theta, n):
        d = DiscreteLS(kernel, theta)
        assert abs(1 - np.sum(d.pmf(np.arange(n + 1))) - d.rf(n)) <= 1e-12

    def test_far_tail_stays_positive(self):
        # the unit interval is tiny on the log scale; the difference of CDFs
        # would cancel to zero
        d = law(KernelSpec("student-t", 1), 2.0, 8.0)
        x = np.array([10**6, 10**9, 10**12])
        p = d.pmf(x)
        assert np.all(p > 0)
        # compare with the continuous density at the cell midpoint
        np.testing.assert_allclose(p, d.continuous_pdf(x + 0.5), rtol=1e-6)


class TestCdfRfHazard:
    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_cdf_plus_rf(self, kernel):
        d = law(kernel, 2.0, 1.0)
        x = np.arange(0, 60)
        assert np.all(d.cdf(x) + d.rf(x) == pytest.approx(1.0, abs=1e-15))
        assert np.all(np.diff(d.cdf(x)) >= 0)

    def test_non_integer_argument_floors(self):
        assert NORMAL.cdf(2.7) == NORMAL.cdf(2)
        assert NORMAL.rf(2.7) == NORMAL.rf(2)

    def test_rf_zero(self):
        assert NORMAL.rf(0) == pytest.approx(1 - NORMAL.pmf(0), abs=1e-15)

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_hazard_definition(self, kernel):
        d = law(kernel, 2.0, 1.0)
        x = np.arange(0, 40)
        h = d.hazard(x)
        assert np.all((h >= 0) & (h <= 1))
        den = d.pmf(x) + d.rf(x)
        live = den > 0
        np.testing.assert_allclose(h[live], d.pmf(x[live]) / den[live], rtol=1e-12)
        assert np.all(h[~live] == 1.0)

    def test_hazard_where_survival_underflows(self):
        d = law(KernelSpec("normal"), 1.0, 0.01)
        assert d.rf(50) == 0.0
        assert d.hazard(50) == 1.0

    def test_survival_at_least(self):
        x = np.arange(0, 20)
        np.testing.assert_allclose(NORMAL.survival_at_least(x), NORMAL.pmf(x) + NORMAL.rf(x), rtol=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            NORMAL.cdf(-1)
        with pytest.raises(DomainError):
            NORMAL.hazard(0.5)


class TestHazardReconstruction:
    def test_empty_product(self):
        h = [0.3]
        assert reconstruct_from_hazard(h, 0, literal=True) == pytest.approx((0.3 / 0.7, 1.0))
        assert reconstruct_from_hazard(h, 0) == pytest.approx((0.3, 0.7))

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
    @pytest.mark.parametrize("theta", THETAS, ids=lambda t: f"lam{t.lam:g}-phi{t.phi:g}")
    def test_round_trip(self, kernel, theta):
        d = DiscreteLS(kernel, theta)
        h = d.hazard(np.arange(51))
        for x in range(51):
            p, r = reconstruct_from_hazard(h, x)
            assert abs(p - d.pmf(x)) <= 1e-10
            assert abs(r - d.rf(x)) <= 1e-10

    def test_literal_product_is_one_index_short(self):
        h = NORMAL.hazard(np.arange(31))
        for x in range(1, 31):
            p, s = reconstruct_from_hazard(h, x, literal=True)
            assert s == pytest.approx(float(NORMAL.rf(x - 1)), abs=1e-12)
            assert p == pytest.approx(float(NORMAL.pmf(x) * NORMAL.rf(x - 1) / NORMAL.rf(x)), rel=1e-9)

    def test_constant_hazard_is_geometric(self):
        c = 0.2
        h = np.full(30, c)
        for x in range(30):
            p, r = reconstruct_from_hazard(h, x)
            survive = math.prod([1 - c] * x)
            assert p == pytest.approx(c * survive, rel=1e-14)
            assert p == pytest.approx(stats.geom.pmf(x + 1, c), rel=1e-12)
            assert r == pytest.approx((1 - c) ** (x + 1), rel=1e-12)

    def test_unit_hazard_literal_form(self):
        with pytest.raises(ZeroDivisionError):
            reconstruct_from_hazard([0.5, 1.0], 1, literal=True)

    def test_unit_hazard_absorbs(self):
        assert reconstruct_from_hazard([1.0, 0.5], 1) == (0.0, 0.0)
        with pytest.raises(ZeroDivisionError):
            reconstruct_from_hazard([1.0, 0.5], 1, literal=True)

    def test_hazard_out_of_range(self):
        with pytest.raises(DomainError):
            reconstruct_from_hazard([1.2, 0.5], 1)
        with pytest.raises(DomainError):
            reconstruct_from_hazard([0.5], 1)


class TestMoments:
    def test_concentrating_law(self):
        d = law(KernelSpec("normal"), 2.0, 1e-4)
        assert 1.0 <= d.mean() <= 2.0

    def test_mean_brute_force(self):
        x = np.arange(10**6 + 1)
        brute = float(np.sum(x * NORMAL.pmf(x)))
        assert NORMAL.mean() == pytest.approx(brute, rel=1e-8)

    @pytest.mark.parametrize("kernel", LIGHT_KERNELS, ids=kernel_id)
    @pytest.mark.parametrize("r", [1, 2])
    def test_series_vs_brute_force(self, kernel, r):
        # a near-Laplace log tail needs a small phi for the brute force to be feasible
        phi = 0.02 if kernel == KernelSpec("power-exponential", 0.9) else 0.25
        d = law(kernel, 2.0, phi)
        assert d.moment(r) == pytest.approx(brute_moment(d, r), rel=1e-8)

    def test_variance_forms_agree(self):
        var = NORMAL.var()
        assert var == pytest.approx(NORMAL.moment(2) - NORMAL.moment(1) ** 2, rel=1e-8)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_triple_sum_agrees(self, r):
        d = law(KernelSpec("power-exponential", -0.5), 3.0, 0.8)
        assert d.moment_triple_sum(r) == pytest.approx(d.moment(r), rel=1e-12)

    def test_heavy_tail_diverges(self):
        with pytest.raises(MomentDivergenceError):
            law(KernelSpec("student-t", 1), 2.0, 1.0).mean()

    def test_order_must_be_positive(self):
        with pytest.raises(DomainError):
            NORMAL.moment(0)


class TestQuantile:
    def test_integer_median(self):
        assert NORMAL.quantile(0.5) == 1

    def test_non_integer_median(self):
        assert law(KernelSpec("normal"), 2.5, 1.0).quantile(0.5) == 2

    def test_sandwich(self, rng):
        for _ in range(100):
            kernel = KERNELS[rng.integers(len(KERNELS))]
            d = law(kernel, rng.uniform(0.5, 20), rng.uniform(0.05, 8))
            p = rng.uniform(0.01, 0.99)
            q = int(d.quantile(p))
            below = float(d.cdf(q - 1)) if q >= 1 else 0.0
            assert below <= p + 1e-9
            assert float(d.cdf(q)) >= p - 1e-9

    def test_domain(self):
        with pytest.raises(DomainError):
            NORMAL.quantile(1.0)


class TestQuantileMeasures:
    def test_closed_form_dispersion(self):
        qm = NORMAL.quantile_measures()
        assert qm.closed_form["dispersion"] == pytest.approx(4 * math.sinh(0.6744897501960817), rel=1e-12)
        assert qm.closed_form["dispersion"] == pytest.approx(2.90723, abs=1e-4)

    def test_relative_dispersion_bounds(self, rng):
        for _ in range(50):
            kernel = KERNELS[rng.integers(len(KERNELS))]
            d = law(kernel, rng.uniform(3, 50), rng.uniform(0.1, 2))
            qm = d.quantile_measures()
            assert 0 < qm.relative_dispersion < 1
            assert qm.dispersion > 0
            assert qm.kurtosis >= 0

    def test_skewness_vanishes_when_quantiles_coincide(self):
        d = law(KernelSpec("normal"), 10.5, 1e-4)
        qm = d.quantile_measures(p=0.45)
        assert qm.quantiles[0.45] == qm.quantiles[0.5] == qm.quantiles[0.55]
        assert qm.skewness == 0.0

    def test_closed_form_skewness_reported_as_note(self):
        qm = law(KernelSpec("normal"), 4.0, 1.0).quantile_measures()
        assert qm.closed_form["skewness"] == 4.0
        assert any("skewness" in note for note in qm.notes)

    def test_domain(self):
        with pytest.raises(DomainError):
            NORMAL.quantile_measures(p=0.5)


class TestModes:
    def test_normal_unimodal(self):
        assert NORMAL.modes() == [1]

    @pytest.mark.parametrize("kernel", [k for k in KERNELS if k.family.value != "student-t"], ids=kernel_id)
    def test_single_mode_matches_argmax(self, kernel):
        d = law(kernel, 6.0, 0.3)
        modes = d.modes()
        assert modes == [int(np.argmax(d.pmf(np.arange(200))))]

    def test_two_component_construction(self):
        a = law(KernelSpec("normal"), 5.0, 0.005).pmf(np.arange(60))
        b = law(KernelSpec("normal"), 40.0, 0.005).pmf(np.arange(60))
        mix = 0.5 * a + 0.5 * b
        brute = [x for x in range(1, 59) if mix[x] > mix[x - 1] and mix[x] > mix[x + 1]]
        assert modes_of_pmf(mix) == brute
        assert len(brute) == 2

    def test_tie(self):
        assert modes_of_pmf([0.1, 0.3, 0.3, 0.2, 0.1]) == [1, 2]

    def test_plateau_not_modal(self):
        assert modes_of_pmf([0.1, 0.2, 0.2, 0.3, 0.1]) == [3]

    def test_heavy_tail_needs_explicit_cap(self):
        with pytest.raises(DomainError, match="search_cap"):
            law(KernelSpec("student-t", 4), 6.0, 0.3).modes()

    def test_cap_too_small(self):
        with pytest.raises(DomainError):
            NORMAL.modes(search_cap=3)


class TestSample:
    def test_ecdf_close_to_cdf(self):
        draws = NORMAL.sample(100_000, seed=1)
        x = np.arange(draws.max() + 1)
        ecdf = np.searchsorted(np.sort(draws), x, side="right") / draws.size
        assert np.max(np.abs(ecdf - NORMAL.cdf(x))) < 0.01

    def test_reproducible(self):
        np.testing.assert_array_equal(NORMAL.sample(500, seed=42), NORMAL.sample(500, seed=42))
        assert not np.array_equal(NORMAL.sample(500, seed=42), NORMAL.sample(500, seed=43))

    @pytest.mark.parametrize("kernel", KERNELS, ids=kernel_id)
    def test_nonnegative_integers(self, kernel):
        draws = law(kernel, 2.0, 8.0).sample(2000, seed=3)
        assert draws.dtype == np.int64
        assert np.all(draws >= 0)

    def test_accepts_generator(self):
        g1, g2 = np.random.default_rng(5), np.random.default_rng(5)
        np.testing.assert_array_equal(NORMAL.sample(10, g1), NORMAL.sample(10, g2))


def test_pmf_table_columns():
    table = NORMAL.pmf_table(0)
    assert list(table) == ["x", "pmf", "cdf", "rf", "hazard"]
    assert table["pmf"][0] + table["rf"][0] == pytest.approx(1.0, abs=1e-15)
