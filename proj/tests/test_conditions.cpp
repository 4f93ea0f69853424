#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "moran_lab/conditions.hpp"

using namespace moran;
using Catch::Approx;

TEST_CASE("gaussian tail ratio", "[conditions]") {
    const auto n = LocationFamily1D::normal();
    const auto up = tail_ratio_diagnostic(n, 1.0, TailDirection::plus_infinity, probe_ladder(TailDirection::plus_infinity));
    REQUIRE(up.probes.front().x == 16.0);
    CHECK(up.probes.front().log_ratio == Approx(15.5).epsilon(1e-12));
    CHECK(up.classification == LimitClass::diverges);
    CHECK(up.slope_estimate == Approx(1.0).epsilon(0.05));

    const auto down = tail_ratio_diagnostic(n, 1.0, TailDirection::minus_infinity, probe_ladder(TailDirection::minus_infinity));
    CHECK(down.classification == LimitClass::finite_limit);
    CHECK(down.limit_value == 0.0);

    const auto t2 = tail_ratio_diagnostic(n, 2.0, TailDirection::plus_infinity, probe_ladder(TailDirection::plus_infinity));
    CHECK(t2.slope_estimate == Approx(2.0).epsilon(0.05));
}

TEST_CASE("heavy and exponential tails have finite limits", "[conditions]") {
    const auto plus = probe_ladder(TailDirection::plus_infinity);
    const auto lap = tail_ratio_diagnostic(LocationFamily1D::laplace(), 1.0, TailDirection::plus_infinity, plus);
    CHECK(lap.classification == LimitClass::finite_limit);
    CHECK(lap.limit_value == Approx(std::exp(1.0)).epsilon(1e-9));

    const auto cau = tail_ratio_diagnostic(LocationFamily1D::cauchy(), 1.0, TailDirection::plus_infinity, plus);
    CHECK(cau.classification == LimitClass::finite_limit);
    CHECK(cau.limit_value == Approx(1.0).margin(0.01));

    const auto lg = tail_ratio_diagnostic(LocationFamily1D::logistic(), 1.0, TailDirection::plus_infinity, plus);
    CHECK(lg.classification == LimitClass::finite_limit);
    CHECK(lg.limit_value == Approx(std::exp(1.0)).epsilon(1e-6));

    const auto st = tail_ratio_diagnostic(LocationFamily1D::student_t(3), 1.0, TailDirection::plus_infinity, plus);
    CHECK(st.classification == LimitClass::finite_limit);
    CHECK(st.limit_value == Approx(1.0).margin(0.01));
}

TEST_CASE("verdicts per family", "[conditions]") {
    const auto n = LocationFamily1D::normal();
    CHECK(check_tail_condition(n, n).verdict == ConditionVerdict::evidence_satisfied);
    for (const auto& f : {LocationFamily1D::laplace(), LocationFamily1D::cauchy(), LocationFamily1D::logistic(),
                          LocationFamily1D::student_t(3)}) {
        INFO(f.name());
        CHECK(check_tail_condition(f, f).verdict == ConditionVerdict::violated);
    }
    const auto rep = check_tail_condition(n, n);
    CHECK(rep.densities_positive_bounded);
    CHECK(rep.sub_reports.size() == 2 * default_theta_probes().size());
    CHECK_THROWS_AS(check_tail_condition(n, n, {1.0, 2.0}), DomainError);
}

TEST_CASE("even densities mirror across directions", "[conditions][property]") {
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::laplace(), LocationFamily1D::cauchy(),
                          LocationFamily1D::logistic(), LocationFamily1D::student_t(5)}) {
        for (double theta : {0.5, 1.0, 2.0}) {
            const auto a = tail_ratio_diagnostic(f, theta, TailDirection::plus_infinity,
                                                 probe_ladder(TailDirection::plus_infinity));
            const auto b = tail_ratio_diagnostic(f, -theta, TailDirection::minus_infinity,
                                                 probe_ladder(TailDirection::minus_infinity));
            REQUIRE(a.probes.size() == b.probes.size());
            for (std::size_t i = 0; i < a.probes.size(); ++i) {
                CHECK(a.probes[i].log_ratio == Approx(b.probes[i].log_ratio).epsilon(1e-12).margin(1e-12));
            }
            CHECK(a.classification == b.classification);
        }
    }
}

TEST_CASE("extending the ladder keeps the classification", "[conditions][property]") {
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::laplace(), LocationFamily1D::cauchy()}) {
        const auto shortl = tail_ratio_diagnostic(f, 1.0, TailDirection::plus_infinity,
                                                  probe_ladder(TailDirection::plus_infinity, 4, 10));
        const auto longl = tail_ratio_diagnostic(f, 1.0, TailDirection::plus_infinity,
                                                 probe_ladder(TailDirection::plus_infinity, 4, 14));
        CHECK(shortl.classification == longl.classification);
    }
}

TEST_CASE("diagnostic input checks", "[conditions]") {
    const auto n = LocationFamily1D::normal();
    const auto plus = probe_ladder(TailDirection::plus_infinity);
    CHECK_THROWS_AS(tail_ratio_diagnostic(n, 0.0, TailDirection::plus_infinity, plus), DomainError);
    CHECK_THROWS_AS(tail_ratio_diagnostic(n, 1.0, TailDirection::minus_infinity, plus), DomainError);
    CHECK_THROWS_AS(tail_ratio_diagnostic(n, 1.0, TailDirection::plus_infinity, {16.0, 32.0}), DomainError);
    CHECK_THROWS_AS(tail_ratio_diagnostic(n, 1.0, TailDirection::plus_infinity, {32.0, 16.0, 64.0}), DomainError);
}

TEST_CASE("claims from condition reports", "[conditions]") {
    const auto n = LocationFamily1D::normal();
    const auto good = condition_to_claim(check_tail_condition(n, n));
    CHECK(good.moran_inadmissible);
    CHECK(good.statement.find("inadmissible") != std::string::npos);
    const auto l = LocationFamily1D::laplace();
    const auto bad = condition_to_claim(check_tail_condition(l, l));
    CHECK_FALSE(bad.moran_inadmissible);
    CHECK(bad.statement.find("no conclusion") != std::string::npos);
}
