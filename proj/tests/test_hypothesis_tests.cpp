#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "moran_lab/hypothesis_tests.hpp"
#include "moran_lab/power.hpp"

using namespace moran;
using Catch::Approx;

namespace {

double eval(const Test& t, std::vector<double> x) { return t(x); }

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
std::vector<double> random_orthogonal(std::size_t d, RandomStream& rng) {
    std::vector<double> q(d * d);
    for (auto& v : q) v = rng.standard_normal();
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (std::size_t r = 0; r < d; ++r) dot += q[r * d + c] * q[r * d + p];
            for (std::size_t r = 0; r < d; ++r) q[r * d + c] -= dot * q[r * d + p];
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < d; ++r) norm += q[r * d + c] * q[r * d + c];
        for (std::size_t r = 0; r < d; ++r) q[r * d + c] /= std::sqrt(norm);
    }
    return q;
}

} // namespace

TEST_CASE("moran_1d rejection region", "[tests]") {
    const auto t = moran_1d(0.0, 0.05, LocationFamily1D::normal());
    CHECK(*t.threshold("b1") == Approx(1.6448536).margin(1e-7));
    CHECK(*t.threshold("b2") == Approx(-1.6448536).margin(1e-7));
    CHECK(eval(t, {1.0, 2.0}) == 1.0);
    CHECK(eval(t, {1.0, 0.0}) == 0.0);
    CHECK(eval(t, {-1.0, -2.0}) == 1.0);
    CHECK(eval(t, {-1.0, 2.0}) == 0.0);
    CHECK(eval(t, {0.0, 5.0}) == 0.0);
    CHECK(eval(t, {0.0, -5.0}) == 0.0);
    CHECK_THROWS_AS(eval(t, {1.0}), InputError);
    CHECK_THROWS_AS(moran_1d(0.0, 1.5, LocationFamily1D::normal()), DomainError);
}

TEST_CASE("region tests are open: boundary points accept", "[tests]") {
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::cauchy(), LocationFamily1D::laplace()}) {
        const auto t = moran_1d(0.4, 0.05, f);
        const double a = 0.4, b1 = *t.threshold("b1"), b2 = *t.threshold("b2");
        for (double s : {-3.0, -0.1, 0.2, 7.0}) {
            CHECK(eval(t, {a, s}) == 0.0);
            CHECK(eval(t, {a + std::abs(s), b1}) == 0.0);
            CHECK(eval(t, {a - std::abs(s), b2}) == 0.0);
        }
    }
    const auto c = chi_square_d(0.05, 1, 1);
    const double q = *c.threshold("q");
    double edge = std::sqrt(q);
    while (edge * edge > q) edge = std::nextafter(edge, 0.0);
    CHECK(eval(c, {edge}) == 0.0);
    CHECK(eval(c, {std::sqrt(q) * (1 + 1e-12)}) == 1.0);
}

TEST_CASE("split size is exactly alpha", "[tests]") {
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::laplace(), LocationFamily1D::cauchy(),
                          LocationFamily1D::logistic(), LocationFamily1D::student_t(4.0)}) {
        for (double a : {-2.0, 0.0, 0.7}) {
            for (double alpha : {0.01, 0.05, 0.2}) {
                const PairModel m{f, f};
                const auto p = split_params(a, alpha, f);
                CHECK(std::abs(power_moran_1d_closed(p, m, 0.0).value - alpha) < 1e-10);
                CHECK(std::abs(f.cdf(p.b1) - (1 - alpha)) < 1e-10);
                CHECK(std::abs(f.cdf(p.b2) - alpha) < 1e-10);
                CHECK(p.b2 < p.b1);
            }
        }
    }
}

TEST_CASE("phi_plus moves the split point", "[tests]") {
    const auto f = LocationFamily1D::normal();
    const auto base = moran_1d(0.3, 0.05, f);
    const auto same = phi_plus(0.3, 0.05, f);
    RandomStream rng(3);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> x{2 * rng.standard_normal(), 2 * rng.standard_normal()};
        REQUIRE(base(x) == same(x));
    }
    const auto far = phi_plus(-1e6, 0.05, f);
    CHECK(eval(far, {-5.0, 2.0}) == 1.0);
    CHECK(eval(far, {-5.0, -3.0}) == 0.0);
}

TEST_CASE("two-sided Z test", "[tests]") {
    const auto z = z_two_sided(0.05, 2);
    CHECK(*z.threshold("z") == Approx(1.959964).margin(1e-6));
    CHECK(eval(z, {2.0, 2.0}) == 1.0);
    CHECK(eval(z, {0.0, 0.0}) == 0.0);
    CHECK(eval(z, {-2.0, -2.0}) == 1.0);
    CHECK(z.gaussian_only());

    const auto model = DataModel::pair(LocationFamily1D::normal(), LocationFamily1D::normal());
    const auto size = power_mc(z, model, 0.0, 1'000'000, 11);
    CHECK(std::abs(size.value - 0.05) <= 3 * size.std_error);

    const auto laplace = DataModel::pair(LocationFamily1D::laplace(), LocationFamily1D::laplace());
    CHECK_THROWS_AS(power_mc(z, laplace, 0.0, 1000, 1), ConfigError);
}

TEST_CASE("Moran d-dimensional Gaussian test", "[tests]") {
    const auto t = moran_gaussian_d(0.05, 1, 2, 4);
    CHECK(*t.threshold("D") == Approx(1.6448536).margin(1e-7));
    CHECK(*moran_gaussian_d(0.05, 1, 3, 2).threshold("D") == Approx(1.6448536 / std::sqrt(2.0)).margin(1e-7));

    const auto t3 = moran_gaussian_d(0.05, 1, 2, 3);
    CHECK(eval(t3, {1, 0, 0, 2, 0, 0}) == 1.0);
    CHECK(eval(t3, {1, 0, 0, 0, 1, 0}) == 0.0);
    CHECK(eval(t3, {0, 0, 0, 9, 9, 9}) == 0.0);  // xbar1 = 0
    CHECK(*split_statistic(std::vector<double>{1, 0, 0, 2, 0, 0}, 1, 2, 3) == 2.0);
    CHECK_THROWS_AS(eval(t3, {1, 0, 0, 2, 0}), InputError);
    CHECK_THROWS_AS(moran_gaussian_d(0.05, 2, 2, 3), DomainError);

    const auto model = DataModel::gaussian(5, 2);
    const auto size = power_mc(moran_gaussian_d(0.05, 1, 2, 5), model, Shift::zero(5), 1'000'000, 21);
    CHECK(std::abs(size.value - 0.05) <= 3 * size.std_error);
}

TEST_CASE("Moran d-dim test is rotation invariant", "[tests][property]") {
    RandomStream rng(77);
    for (std::size_t d : {2u, 3u, 6u, 10u}) {
        const std::size_t n = 3;
        const auto t = moran_gaussian_d(0.05, 1, n, d);
        for (int trial = 0; trial < 200; ++trial) {
            const auto q = random_orthogonal(d, rng);
            std::vector<double> x(n * d), qx(n * d);
            for (auto& v : x) v = 1.5 * rng.standard_normal() + 0.5;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t r = 0; r < d; ++r) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < d; ++c) s += q[r * d + c] * x[i * d + c];
                    qx[i * d + r] = s;
                }
            const double stat = *split_statistic(x, 1, n, d);
            if (std::abs(stat - *t.threshold("D")) < 1e-9) continue;
            REQUIRE(t(x) == t(qx));
        }
    }
}

TEST_CASE("chi-square test", "[tests]") {
    const auto t = chi_square_d(0.05, 2, 10);
    CHECK(*t.threshold("q") == Approx(18.3070).margin(1e-4));
    boost::math::chi_squared_distribution<> chi10(10.0);
    CHECK(std::abs(*t.threshold("q") - boost::math::quantile(chi10, 0.95)) < 1e-9);
    CHECK(eval(t, std::vector<double>(20, 0.0)) == 0.0);
    CHECK(std::abs(chi_square_quantile(0.5, 1.0) - boost::math::quantile(boost::math::chi_squared_distribution<>(1.0), 0.5)) < 1e-10);

    const auto model = DataModel::gaussian(10, 2);
    const auto size = power_mc(t, model, Shift::zero(10), 1'000'000, 31);
    CHECK(std::abs(size.value - 0.05) <= 3 * size.std_error);
}

TEST_CASE("blended test formula", "[tests]") {
    const auto f = LocationFamily1D::normal();
    const auto base = moran_1d(0.0, 0.05, f);
    const auto np_star = z_one_sided(0.05, 2, +1);

    // Between the radii only the floor remains.
    const auto b = blended(base, np_star, 1.0, 1000.0);
    CHECK(eval(b, {3.0, 3.0}) == Approx(1e-3));
    // Clamp engages.
    const auto clamp = blended(base, np_star, 5.0, 1.0);
    CHECK(eval(clamp, {1.5, 1.5}) == 1.0);
    CHECK_THROWS_AS(blended(base, np_star, 0.0, 1.0), DomainError);

    // Pointwise limit as zeta, eta grow.
    for (std::vector<double> x : {std::vector<double>{2.0, 1.0}, {-1.0, 0.5}, {0.1, 3.0}}) {
        double prev_err = 1.0;
        for (double r : {1e1, 1e3, 1e5, 1e7}) {
            const double err = std::abs(eval(blended(base, np_star, r, 2 * r), x) - np_star(x));
            CHECK(err <= prev_err);
            prev_err = err;
        }
        CHECK(prev_err < 1e-6);
    }

    RandomStream rng(8);
    for (int i = 0; i < 5000; ++i) {
        const double zeta = std::exp(3 * rng.standard_normal());
        const double eta = std::exp(3 * rng.standard_normal());
        const auto t = blended(base, np_star, zeta, eta);
        std::vector<double> x{4 * rng.standard_normal(), 4 * rng.standard_normal()};
        const double v = t(x);
        REQUIRE(v <= 1.0);
        REQUIRE(v >= std::min(1.0, 1.0 / eta));
    }
}

TEST_CASE("convexity counterexample", "[tests]") {
    const double big_d = 1.6448536269514722;
    auto c = convexity_counterexample(big_d, 1.2, 2);
    CHECK(c.endpoint_statistics[0] == Approx(1.3957).margin(1e-4));
    CHECK(c.endpoint_statistics[1] == Approx(1.3957).margin(1e-4));
    CHECK(c.midpoint_statistic == Approx(1.9738).margin(1e-4));
    CHECK(c.endpoint_statistics[0] < big_d);
    CHECK(c.midpoint_statistic > big_d);

    const auto near = convexity_counterexample(big_d, 1.0 + 1e-9, 3);
    CHECK(near.midpoint_statistic > big_d);
    CHECK(near.midpoint_statistic - big_d < 1e-8);

    RandomStream rng(4);
    CHECK(perturbation_sweep(c, 1e-3, 10'000, rng) > 0.0);
    CHECK_THROWS_AS(convexity_counterexample(big_d, 1.5, 2), DomainError);
    CHECK_THROWS_AS(convexity_counterexample(big_d, 1.2, 1), DomainError);
}
