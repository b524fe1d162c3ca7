#include "doctest.h"
#include "ergoflow/measures.hpp"

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

double normal_cdf(double x, double var) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * var)); }

} // namespace

TEST_CASE("OU table: Lambda, invariant density, scale") {
    auto model = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(model);
    CHECK(table.lambda() == doctest::Approx(1.7724538509055160).epsilon(1e-9));
    CHECK(table.pi_pdf_at(0.0) == doctest::Approx(0.5641895835477563).epsilon(1e-9));
    // s(1) = sqrt(pi) * int_0^1 exp(y^2) dy
    CHECK(table.scale_at(1.0) == doctest::Approx(2.5924827195668604).epsilon(1e-6));
    CHECK(table.scale_at(0.0) == 0.0);
    CHECK(table.pi_cdf_at(0.0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("pi_cdf bounds and monotonicity; scale strictly increasing") {
    for (auto model : {validated("ou", {{"beta", 1.0}}), validated("tanh_drift", {{"kappa", 1.0}}),
                       validated("double_well", {{"a", 1.0}, {"b", 1.0}})}) {
        auto table = MeasureTable::build(model, 40.0, 4096);
        const auto& cdf = table.pi_cdf();
        const auto& s = table.scale();
        CHECK(cdf.front() < 1e-10);
        CHECK(cdf.back() > 1.0 - 1e-10);
        for (std::size_t i = 1; i < cdf.size(); ++i) {
            CHECK(cdf[i] >= cdf[i - 1]);
            if (std::isfinite(s[i]) && std::isfinite(s[i - 1])) CHECK(s[i] > s[i - 1]);
        }
        // duality: total sharp scale mass = total speed mass = 2
        CHECK(table.total_sharp_scale_mass() == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(table.total_speed_mass() == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("OU quadrature Pi matches Normal(0, 1/(2 beta)) to 1e-8 sup-norm") {
    auto model = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(model);
    double sup = 0.0;
    const auto& grid = table.grid();
    const auto& cdf = table.pi_cdf();
    for (std::size_t i = 0; i < grid.size(); ++i)
        sup = std::max(sup, std::fabs(cdf[i] - normal_cdf(grid[i], 0.5)));
    CHECK(sup < 1e-8);
}

TEST_CASE("pi_cdf finite differences match psi^-2 in the bulk") {
    auto model = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(model);
    const auto& grid = table.grid();
    const auto& cdf = table.pi_cdf();
    const auto& tail = table.pi_tail();
    const auto& lp2 = table.log_psi2();
    double h = grid[1] - grid[0];
    auto fd4 = [&](const std::vector<double>& v, std::size_t i) {
        return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
    };
    for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
        if (std::fabs(grid[i]) > 5.0) continue;
        // 4th-order central difference; differentiate whichever of the CDF
        // or the upper tail is well conditioned at this point
        double d = cdf[i] <= 0.5 ? fd4(cdf, i) : -fd4(tail, i);
        double pdf = std::exp(-lp2[i]);
        CHECK(std::fabs(d - pdf) / pdf <= 1e-6);
    }
}

TEST_CASE("gamma quadrature: OU beta, tanh 2/3, two routes agree") {
    auto ou1 = validated("ou", {{"beta", 1.0}});
    auto t1 = MeasureTable::build(ou1);
    auto g1 = gamma_quadrature(t1);
    CHECK(g1.finite);
    CHECK(g1.value == doctest::Approx(1.0).epsilon(1e-8));

    auto ou25 = validated("ou", {{"beta", 2.5}});
    auto t25 = MeasureTable::build(ou25);
    CHECK(gamma_quadrature(t25).value == doctest::Approx(2.5).epsilon(1e-8));

    auto th = validated("tanh_drift", {{"kappa", 1.0}});
    auto tt = MeasureTable::build(th);
    CHECK(gamma_quadrature(tt).value == doctest::Approx(2.0 / 3.0).epsilon(1e-8));

    auto dw = validated("double_well", {{"a", 1.0}, {"b", 1.0}});
    auto td = MeasureTable::build(dw);
    CHECK(gamma_quadrature(td).value == doctest::Approx(1.6803949087227099).epsilon(1e-8));

    for (const MeasureTable* t : {&t1, &t25, &tt, &td}) {
        double rel = std::fabs(t->gamma().value - t->gamma_alt()) / t->gamma().value;
        CHECK(rel <= 1e-6);
    }
}

TEST_CASE("boundary classification: OU sharp scale converges, non-entrance holds") {
    auto model = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(model);
    auto rep = boundary_classification(table);
    // s_sharp(W) - s_sharp(W/2) = 2 (Pi(40) - Pi(20)) < 1e-10
    CHECK(rep.plus.sharp_scale_tail < 1e-10);
    CHECK(rep.minus.sharp_scale_tail < 1e-10);
    CHECK(rep.plus.non_entrance);
    CHECK(rep.minus.non_entrance);
    // double integral at W=10 already exceeds 1e4 and grows
    CHECK(rep.plus.log_double_integral[0] > std::log(1e4));
    CHECK(rep.plus.log_double_integral[2] > rep.plus.log_double_integral[1]);
    // symmetric model: the two sides agree
    for (int k = 0; k < 3; ++k)
        CHECK(rep.plus.log_double_integral[k] ==
              doctest::Approx(rep.minus.log_double_integral[k]).epsilon(1e-9));
}

TEST_CASE("spectral gap bound: equality for OU, strict for tanh") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto tou = MeasureTable::build(ou);
    auto gou = spectral_gap_bound(tou);
    CHECK(gou.bound_asserted);
    CHECK(std::fabs(gou.trial_mean) <= 1e-8);
    CHECK(std::fabs(gou.trial_variance - 1.0) <= 1e-8);
    CHECK(gou.rayleigh_of_F == doctest::Approx(gou.gamma).epsilon(1e-6));
    CHECK(gou.rayleigh_of_F <= gou.gamma + 1e-6);

    auto th = validated("tanh_drift", {{"kappa", 1.0}});
    auto tth = MeasureTable::build(th);
    auto gth = spectral_gap_bound(tth);
    CHECK(gth.bound_asserted);
    CHECK(gth.rayleigh_of_F == doctest::Approx(0.6079271018540266).epsilon(1e-7));
    CHECK(gth.rayleigh_of_F < gth.gamma); // strictly below 2/3

    auto dw = validated("double_well", {{"a", 1.0}, {"b", 1.0}});
    auto tdw = MeasureTable::build(dw);
    auto gdw = spectral_gap_bound(tdw);
    CHECK(gdw.bound_asserted);
    CHECK(gdw.rayleigh_of_F <= gdw.gamma + 1e-6);
}

TEST_CASE("rayleigh quotient on OU trial functions") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    auto fx = CoefficientFunction::from_expression("x", {});
    CHECK(rayleigh_quotient(table, fx) == doctest::Approx(1.0).epsilon(1e-7));
    auto fx3 = CoefficientFunction::from_expression("x^3", {});
    CHECK(rayleigh_quotient(table, fx3) == doctest::Approx(1.8).epsilon(1e-6));
    CHECK(rayleigh_quotient(table, fx3) >= 1.0);
    // tail step: huge quotient, never below the gap
    auto step = CoefficientFunction::from_expression("tanh(20*(x-3))", {});
    CHECK(rayleigh_quotient(table, step) > 10.0);
    // constant trial function rejected
    auto c = CoefficientFunction::from_expression("3", {});
    CHECK_THROWS_AS(rayleigh_quotient(table, c), measures_error);
}

TEST_CASE("escape threshold and quantiles") {
    auto ou = validated("ou", {{"beta", 1.0}});
    auto table = MeasureTable::build(ou);
    double thr = table.escape_threshold();
    CHECK(thr > 7.0);
    CHECK(thr < 8.0);
    CHECK(table.pi_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    // Phi^{-1}(0.8) * sqrt(0.5)
    CHECK(table.pi_quantile(0.8) == doctest::Approx(0.59511608145).epsilon(1e-4));
}

TEST_CASE("build precondition failures") {
    ModelSpec s;
    s.kind = "ou";
    s.params = {{"beta", 1.0}};
    auto unvalidated = make_model(s);
    CHECK_THROWS_AS(MeasureTable::build(unvalidated), model_error);
    auto model = validated("ou", {{"beta", 1.0}});
    CHECK_THROWS_AS(MeasureTable::build(model, 40.0, 512), measures_error);
}
