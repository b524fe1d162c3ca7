#include "doctest.h"
#include "ergoflow/coeffs.hpp"

#include <cmath>

using namespace ergoflow;

namespace {

ModelSpec catalog(const std::string& kind, std::map<std::string, double> params) {
    ModelSpec s;
    s.kind = kind;
    s.params = std::move(params);
    return s;
}

ModelSpec expr_spec(const std::string& sigma, const std::string& m,
                    std::map<std::string, double> params = {}) {
    ModelSpec s;
    s.sigma_expr = sigma;
    s.m_expr = m;
    s.params = std::move(params);
    return s;
}

} // namespace

TEST_CASE("catalog ou") {
    auto model = make_model(catalog("ou", {{"beta", 1.0}, {"sigma0", 1.0}}));
    CHECK(model.m(2.0) == -2.0);
    CHECK(model.sigma(2.0) == 1.0);
    CHECK(model.q(0.7) == model.m(0.7)); // sigma' = 0
}

TEST_CASE("catalog tanh_drift") {
    auto model = make_model(catalog("tanh_drift", {{"kappa", 1.0}}));
    CHECK(model.m(0.0) == 0.0);
    CHECK(model.dm(0.0) == -1.0);
}

TEST_CASE("catalog errors") {
    CHECK_THROWS_AS(make_model(catalog("pearson", {})), model_error);
    CHECK_THROWS_AS(make_model(catalog("ou", {})), model_error); // beta missing
}

TEST_CASE("sigma positivity probe on expressions") {
    CHECK_THROWS_WITH_AS(make_model(expr_spec("0.4+0.5*sin(x)", "-x")),
                         doctest::Contains("sigma not positive"), model_error);
    CHECK_NOTHROW(make_model(expr_spec("1+0.5*sin(x)", "-x")));
}

TEST_CASE("analytic derivatives match finite differences") {
    std::vector<DiffusionModel> models;
    models.push_back(make_model(catalog("ou", {{"beta", 1.3}})));
    models.push_back(make_model(catalog("tanh_drift", {{"kappa", 0.8}})));
    models.push_back(make_model(catalog("double_well", {{"a", 1.0}, {"b", 1.0}})));
    for (const auto& model : models) {
        for (int i = 0; i < 100; ++i) {
            double x = -5.0 + 10.0 * i / 99.0;
            for (const CoefficientFunction* c : {&model.sigma_fn(), &model.m_fn()}) {
                for (int order : {1, 2}) {
                    double analytic = c->deriv(x, order);
                    // finite differences, forced by a derivative-free clone
                    double h = std::pow(std::numeric_limits<double>::epsilon(),
                                        order == 1 ? 1.0 / 3.0 : 0.25) *
                               std::max(1.0, std::fabs(x));
                    double fd = order == 1 ? ((*c)(x + h) - (*c)(x - h)) / (2.0 * h)
                                           : ((*c)(x + h) - 2.0 * (*c)(x) + (*c)(x - h)) /
                                                 (h * h);
                    // relative where the derivative is of the coefficient's
                    // own magnitude, absolute floor where it is near zero
                    // (FD roundoff ~ sqrt(eps) dominates there)
                    double scale =
                        std::max({std::fabs(analytic), std::fabs(fd), std::fabs((*c)(x)), 1.0});
                    CHECK(std::fabs(analytic - fd) <= 1e-6 * scale);
                }
            }
        }
    }
}

TEST_CASE("modified drift identity q = m + sigma sigma'/2") {
    auto model = make_model(expr_spec("1+0.5*sin(x)", "-2*x"));
    for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
        double expect = model.m(x) + 0.5 * model.sigma(x) * model.dsigma(x);
        CHECK(model.q(x) == doctest::Approx(expect).epsilon(1e-12));
    }
    // constant sigma: q == m exactly
    auto ou = make_model(catalog("ou", {{"beta", 2.0}}));
    for (double x : {-4.0, 0.3, 7.0}) CHECK(ou.q(x) == ou.m(x));
}

TEST_CASE("validate_recurrence: OU is positive recurrent with Lambda = sqrt(pi/beta)") {
    auto model = make_model(catalog("ou", {{"beta", 1.0}}));
    auto rep = validate_recurrence(model);
    CHECK(rep.status == RecurrenceStatus::positive_recurrent);
    CHECK(rep.lambda == doctest::Approx(1.7724538509055160).epsilon(1e-5));
    CHECK(model.is_positive_recurrent());
    CHECK_NOTHROW(model.require_positive_recurrent());
}

TEST_CASE("validate_recurrence: Brownian motion rejected, Lambda diverges") {
    auto model = make_model(expr_spec("1", "0"));
    auto rep = validate_recurrence(model);
    CHECK(rep.status == RecurrenceStatus::rejected);
    CHECK(rep.reason.find("Lambda diverges") != std::string::npos);
    CHECK_THROWS_AS(model.require_positive_recurrent(), model_error);
}

TEST_CASE("validate_recurrence: repelling drift rejected as transient") {
    auto model = make_model(expr_spec("1", "x", {}));
    auto rep = validate_recurrence(model);
    CHECK(rep.status == RecurrenceStatus::rejected);
    CHECK(rep.reason.find("transient") != std::string::npos);
}

TEST_CASE("validate_recurrence: all catalog defaults pass") {
    for (auto spec : {catalog("ou", {{"beta", 1.0}}), catalog("tanh_drift", {{"kappa", 1.0}}),
                      catalog("double_well", {{"a", 1.0}, {"b", 1.0}})}) {
        auto model = make_model(spec);
        CHECK(validate_recurrence(model).status == RecurrenceStatus::positive_recurrent);
    }
}
