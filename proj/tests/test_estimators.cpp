#include "doctest.h"
#include "ergoflow/estimators.hpp"

#include <cmath>

using namespace ergoflow;

namespace {

DiffusionModel validated(const std::string& kind, std::map<std::string, double> params) {
    ModelSpec s;
    s.kind = kind;
    s.params = std::move(params);
    auto model = make_model(s);
    validate_recurrence(model);
    return model;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

TEST_CASE("ks_distance on constructed samples") {
    auto uniform = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    CHECK(ks_distance({0.5}, uniform) == doctest::Approx(0.5));
    // exact quantiles (i-0.5)/n give 0.5/n
    const std::size_t n = 40;
    std::vector<double> q;
    for (std::size_t i = 1; i <= n; ++i) q.push_back((static_cast<double>(i) - 0.5) / n);
    CHECK(ks_distance(q, uniform) == doctest::Approx(0.5 / n));
    // rank statistic: increasing transform of samples and argument cancels
    std::vector<double> tq;
    for (double x : q) tq.push_back(std::exp(x));
    auto tuniform = [&](double y) { return uniform(std::log(y)); };
    CHECK(ks_distance(tq, tuniform) == doctest::Approx(0.5 / n));
    CHECK_THROWS_AS(ks_distance({}, uniform), estimator_error);
}

TEST_CASE("two-sample ks_distance basics") {
    std::vector<double> a{0.1, 0.2, 0.3, 0.4};
    CHECK(ks_distance_two_sample(a, a) == doctest::Approx(0.0));
    CHECK(ks_distance_two_sample({0.0, 1.0}, {10.0, 11.0}) == doctest::Approx(1.0));
    CHECK(ks_critical_1pct(5000) == doctest::Approx(0.023024).epsilon(1e-3));
}

TEST_CASE("Birkhoff gamma estimate matches quadrature") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto r = gamma_birkhoff(ou, 42, 1000.0, 10.0, 1e-3);
    CHECK(r.value == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.std_error > 0.0);
    CHECK(std::fabs(r.value - 1.0) < 3.0 * r.std_error);

    auto th = validated("tanh_drift", {{"kappa", 1.0}});
    auto r2 = gamma_birkhoff(th, 42, 2000.0, 15.0, 1e-3);
    CHECK(r2.value == doctest::Approx(2.0 / 3.0).epsilon(0.05));
}

TEST_CASE("Birkhoff estimates are seed-deterministic") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto r1 = gamma_birkhoff(ou, 7, 50.0, 5.0, 1e-3);
    auto r2 = gamma_birkhoff(ou, 7, 50.0, 5.0, 1e-3);
    CHECK(r1.value == r2.value);
    CHECK(r1.std_error == r2.std_error);
}

TEST_CASE("two-point rate: zero-noise OU pair decays at exactly -beta") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    ZeroSeq zero(1e-3);
    auto r = two_point_rate_on(ou, table, zero, -1.0, 1.0, 10.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(0.02));
    CHECK(r.diagnostics.at("r_squared") > 0.999);
}

TEST_CASE("two-point rate on noisy OU paths") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    auto r = two_point_rate(ou, table, 2024, -1.0, 1.0, 20.0, 1e-3);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(0.10)); // single path: 10%
    CHECK(r.n > 9000);
}

TEST_CASE("two-point rate survives gap underflow via log-Jacobian continuation") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    auto r = two_point_rate(ou, table, 9, -0.5, 0.5, 40.0, 1e-3);
    REQUIRE(r.diagnostics.count("log_jac_continuation_from") == 1);
    CHECK(r.diagnostics.at("log_jac_continuation_from") < 40.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("exit probabilities match the invariant CDF") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    const double thr = table.escape_threshold();
    auto r0 = exit_probability(ou, 0.0, 2000, 40.0, thr, 1e-3);
    CHECK(std::fabs(r0.value - 0.5) < 3.0 * r0.std_error + 1e-12);
    auto rp = exit_probability(ou, 0.5, 2000, 40.0, thr, 1e-3);
    const double target = std_normal_cdf(0.5 / std::sqrt(0.5)); // 0.7602
    CHECK(std::fabs(rp.value - target) < 3.0 * rp.std_error);
    // +-x0 symmetry: estimates sum to 1 within joint error (different seeds)
    auto rm = exit_probability(ou, -0.5, 2000, 40.0, thr, 1e-3, 5001);
    const double joint = std::sqrt(rp.std_error * rp.std_error + rm.std_error * rm.std_error);
    CHECK(std::fabs(rp.value + rm.value - 1.0) < 3.0 * joint);
    CHECK(rp.diagnostics.at("undecided_fraction") <= 0.05);
}

TEST_CASE("occupation measure matches the quadrature invariant law") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    auto r = occupation_vs_invariant(ou, table, 3, 2000.0, 80, 10.0, 1.0, 1e-3);
    CHECK(r.value < 0.03);
    CHECK(r.n > 1500);
}

TEST_CASE("double-well occupation histogram peaks near the density modes") {
    auto dw = validated("double_well", {{"a", 1.0}, {"b", 1.0}});
    auto table = MeasureTable::build(dw);
    auto r = occupation_vs_invariant(dw, table, 5, 5000.0, 100, 10.0, 0.6, 1e-3);
    // invariant density exp(x^2 - x^4/2) peaks at +-1
    CHECK(std::fabs(std::fabs(r.diagnostics.at("peak_location")) - 1.0) < 0.08);
}
