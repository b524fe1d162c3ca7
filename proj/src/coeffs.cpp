#include "ergoflow/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ergoflow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double fd_step(double x, double exponent) {
    return std::pow(kEps, exponent) * std::max(1.0, std::fabs(x));
}

// --- catalog coefficient kernels -------------------------------------------

struct CatalogCtx {
    double p0 = 0.0, p1 = 0.0;
};

double k_const(double, const void* c) { return static_cast<const CatalogCtx*>(c)->p0; }
double k_zero(double, const void*) { return 0.0; }

// ou: m = -beta x
double ou_m(double x, const void* c) { return -static_cast<const CatalogCtx*>(c)->p0 * x; }
double ou_dm(double, const void* c) { return -static_cast<const CatalogCtx*>(c)->p0; }

// tanh_drift: m = -kappa tanh(x)
double th_m(double x, const void* c) {
    return -static_cast<const CatalogCtx*>(c)->p0 * std::tanh(x);
}
double th_dm(double x, const void* c) {
    double t = std::tanh(x);
    return -static_cast<const CatalogCtx*>(c)->p0 * (1.0 - t * t);
}
double th_d2m(double x, const void* c) {
    double t = std::tanh(x);
    return static_cast<const CatalogCtx*>(c)->p0 * 2.0 * t * (1.0 - t * t);
}

// double_well: m = a x - b x^3
double dw_m(double x, const void* c) {
    auto* k = static_cast<const CatalogCtx*>(c);
    return k->p0 * x - k->p1 * x * x * x;
}
double dw_dm(double x, const void* c) {
    auto* k = static_cast<const CatalogCtx*>(c);
    return k->p0 - 3.0 * k->p1 * x * x;
}
double dw_d2m(double x, const void* c) {
    return -6.0 * static_cast<const CatalogCtx*>(c)->p1 * x;
}

struct ExprCtx {
    ExprCtx(Expression e, std::map<std::string, double> p)
        : expr(std::move(e)), params(std::move(p)) {}
    Expression expr;
    std::map<std::string, double> params;
};

double expr_eval(double x, const void* c) {
    auto* e = static_cast<const ExprCtx*>(c);
    return e->expr.eval(x, e->params);
}

double get_param(const std::map<std::string, double>& p, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
    auto it = p.find(key);
    if (it != p.end()) return it->second;
    if (fallback) return *fallback;
    throw model_error("missing parameter '" + key + "'");
}

CoefficientFunction catalog_coeff(CoefficientFunction::RawFn f, CoefficientFunction::RawFn d1,
                                  CoefficientFunction::RawFn d2, double p0, double p1,
                                  std::string label) {
    auto ctx = std::make_shared<CatalogCtx>();
    ctx->p0 = p0;
    ctx->p1 = p1;
    return CoefficientFunction::analytic(f, d1, d2, std::move(ctx), std::move(label));
}

void probe_sigma_positive(const CoefficientFunction& sigma, double window) {
    const int n = 1601;
    for (int i = 0; i < n; ++i) {
        double x = -window + 2.0 * window * i / (n - 1);
        double v = sigma(x);
        if (!(v > 0.0) || !std::isfinite(v)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "sigma not positive at x=%.6g (value %.6g)", x, v);
            throw model_error(buf);
        }
    }
}

} // namespace

CoefficientFunction CoefficientFunction::analytic(RawFn f, RawFn d1, RawFn d2,
                                                  std::shared_ptr<const void> ctx,
                                                  std::string label) {
    CoefficientFunction c;
    c.f_ = f;
    c.d1_ = d1;
    c.d2_ = d2;
    c.ctx_ = ctx.get();
    c.owned_ctx_ = std::move(ctx);
    c.label_ = std::move(label);
    return c;
}

CoefficientFunction CoefficientFunction::from_expression(const std::string& src,
                                                         std::map<std::string, double> params) {
    auto ctx = std::make_shared<ExprCtx>(Expression::parse(src), std::move(params));
    // evaluate once so unbound parameters surface at construction
    ctx->expr.eval(0.0, ctx->params);
    CoefficientFunction c;
    c.f_ = expr_eval;
    c.ctx_ = ctx.get();
    c.owned_ctx_ = ctx;
    c.label_ = src;
    return c;
}

double CoefficientFunction::deriv(double x, int order) const {
    if (order == 0) return f_(x, ctx_);
    if (order == 1 && d1_) return d1_(x, ctx_);
    if (order == 2 && d2_) return d2_(x, ctx_);
    switch (order) {
    case 1: {
        double h = fd_step(x, 1.0 / 3.0);
        return (f_(x + h, ctx_) - f_(x - h, ctx_)) / (2.0 * h);
    }
    case 2: {
        double h = fd_step(x, 1.0 / 4.0);
        return (f_(x + h, ctx_) - 2.0 * f_(x, ctx_) + f_(x - h, ctx_)) / (h * h);
    }
    case 3: {
        double h = fd_step(x, 1.0 / 6.0);
        return (f_(x + 2 * h, ctx_) - 2.0 * f_(x + h, ctx_) + 2.0 * f_(x - h, ctx_) -
                f_(x - 2 * h, ctx_)) /
               (2.0 * h * h * h);
    }
    default:
        throw model_error("derivative order not supported");
    }
}

DiffusionModel::DiffusionModel(CoefficientFunction sigma, CoefficientFunction m,
                               std::string name, std::map<std::string, double> params)
    : sigma_(std::move(sigma)), m_(std::move(m)), name_(std::move(name)),
      params_(std::move(params)) {}

void DiffusionModel::require_positive_recurrent() const {
    if (!is_positive_recurrent())
        throw model_error("model '" + name_ + "' is not validated positive recurrent" +
                          (recurrence_.reason.empty() ? "" : " (" + recurrence_.reason + ")"));
}

DiffusionModel make_model(const ModelSpec& spec, double probe_window) {
    if (!spec.kind.empty()) {
        double sigma0 = get_param(spec.params, "sigma0", 1.0);
        if (!(sigma0 > 0.0)) throw model_error("sigma not positive: sigma0 <= 0");
        auto sigma = catalog_coeff(k_const, k_zero, k_zero, sigma0, 0.0, "sigma0");
        if (spec.kind == "ou") {
            double beta = get_param(spec.params, "beta");
            if (!(beta > 0.0)) throw model_error("ou requires beta > 0");
            auto m = catalog_coeff(ou_m, ou_dm, k_zero, beta, 0.0, "-beta*x");
            return DiffusionModel(std::move(sigma), std::move(m), "ou", spec.params);
        }
        if (spec.kind == "tanh_drift") {
            double kappa = get_param(spec.params, "kappa");
            if (!(kappa > 0.0)) throw model_error("tanh_drift requires kappa > 0");
            auto m = catalog_coeff(th_m, th_dm, th_d2m, kappa, 0.0, "-kappa*tanh(x)");
            return DiffusionModel(std::move(sigma), std::move(m), "tanh_drift", spec.params);
        }
        if (spec.kind == "double_well") {
            double a = get_param(spec.params, "a");
            double b = get_param(spec.params, "b");
            if (!(a > 0.0) || !(b > 0.0)) throw model_error("double_well requires a, b > 0");
            auto m = catalog_coeff(dw_m, dw_dm, dw_d2m, a, b, "a*x-b*x^3");
            return DiffusionModel(std::move(sigma), std::move(m), "double_well", spec.params);
        }
        throw model_error("unknown catalog id '" + spec.kind + "'");
    }
    if (spec.sigma_expr.empty() || spec.m_expr.empty())
        throw model_error("model spec needs either a catalog kind or sigma/m expressions");
    auto sigma = CoefficientFunction::from_expression(spec.sigma_expr, spec.params);
    auto m = CoefficientFunction::from_expression(spec.m_expr, spec.params);
    probe_sigma_positive(sigma, probe_window);
    return DiffusionModel(std::move(sigma), std::move(m), "expression", spec.params);
}

namespace {

// Cumulative state while marching one side of the recurrence integrals.
struct SideScan {
    double log_scale_total = -std::numeric_limits<double>::infinity(); // Eq 2.1 side
    double log_scale_shell_outer = -std::numeric_limits<double>::infinity();
    double log_scale_shell_inner = -std::numeric_limits<double>::infinity();
    double lambda_total = 0.0;
    double lambda_shell_outer = 0.0;
};

double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// Marches from 0 to sgn*window accumulating both recurrence integrals for
// one side. Integrals are kept in the log domain where they can overflow.
SideScan scan_side(const DiffusionModel& model, double window, int sgn, int n_intervals) {
    SideScan out;
    double h = window / n_intervals;
    double inner = 0.0; // int_0^x 2m/sigma^2
    auto g2 = [&](double x) {
        double s = model.sigma(x);
        return 2.0 * model.m(x) / (s * s);
    };
    for (int i = 0; i < n_intervals; ++i) {
        double x0 = sgn * i * h;
        double x1 = sgn * (i + 1) * h;
        double xm = 0.5 * (x0 + x1);
        double inner0 = inner;
        inner += sgn * h / 6.0 * (g2(x0) + 4.0 * g2(xm) + g2(x1));
        double inner1 = inner;
        double innerm = 0.5 * (inner0 + inner1); // adequate for trend detection

        bool outer_half = (i >= n_intervals / 2);
        bool outer_quarter_band = (i >= n_intervals / 4 && i < n_intervals / 2);

        // Lambda integrand (1/sigma) exp(+inner): decays for recurrent models
        double l0 = std::exp(inner0) / model.sigma(x0);
        double lm = std::exp(innerm) / model.sigma(xm);
        double l1 = std::exp(inner1) / model.sigma(x1);
        double lam_piece = h / 6.0 * (l0 + 4.0 * lm + l1);
        if (std::isfinite(lam_piece)) {
            out.lambda_total += lam_piece;
            if (outer_half) out.lambda_shell_outer += lam_piece;
        } else {
            out.lambda_total = std::numeric_limits<double>::infinity();
        }

        // Scale integrand (1/sigma) exp(-inner): grows for recurrent models,
        // accumulate in log domain.
        double ls0 = -inner0 - std::log(model.sigma(x0));
        double lsm = -innerm - std::log(model.sigma(xm));
        double ls1 = -inner1 - std::log(model.sigma(x1));
        double mx = std::max({ls0, lsm, ls1});
        double log_piece = std::log(h / 6.0) + mx +
                           std::log(std::exp(ls0 - mx) + 4.0 * std::exp(lsm - mx) +
                                    std::exp(ls1 - mx));
        out.log_scale_total = log_add(out.log_scale_total, log_piece);
        if (outer_half)
            out.log_scale_shell_outer = log_add(out.log_scale_shell_outer, log_piece);
        else if (outer_quarter_band)
            out.log_scale_shell_inner = log_add(out.log_scale_shell_inner, log_piece);
    }
    return out;
}

IntegralTrend classify_scale(const SideScan& s, double cutoff) {
    if (s.log_scale_total >= std::log(cutoff) &&
        s.log_scale_shell_outer >= s.log_scale_shell_inner)
        return IntegralTrend::diverged;
    if (s.log_scale_shell_outer - s.log_scale_total <= std::log(1e-9))
        return IntegralTrend::converged;
    return IntegralTrend::inconclusive;
}

} // namespace

RecurrenceReport validate_recurrence(DiffusionModel& model, double window,
                                     double divergence_cutoff) {
    RecurrenceReport rep;
    rep.window = window;
    const int n = 8192;
    SideScan plus = scan_side(model, window, +1, n);
    SideScan minus = scan_side(model, window, -1, n);

    rep.scale_plus = classify_scale(plus, divergence_cutoff);
    rep.scale_minus = classify_scale(minus, divergence_cutoff);

    double lambda = plus.lambda_total + minus.lambda_total;
    double lambda_shell = plus.lambda_shell_outer + minus.lambda_shell_outer;
    if (!std::isfinite(lambda) || lambda >= divergence_cutoff)
        rep.lambda_trend = IntegralTrend::diverged;
    else if (lambda_shell <= 1e-9 * lambda)
        rep.lambda_trend = IntegralTrend::converged;
    else
        rep.lambda_trend = IntegralTrend::inconclusive;

    char buf[128];
    if (rep.scale_plus == IntegralTrend::converged ||
        rep.scale_minus == IntegralTrend::converged) {
        rep.status = RecurrenceStatus::rejected;
        rep.reason = "one-sided scale integrals converge (transient)";
    } else if (rep.lambda_trend != IntegralTrend::converged) {
        rep.status = RecurrenceStatus::rejected;
        std::snprintf(buf, sizeof buf, "Lambda diverges (not converged at window W=%g)",
                      window);
        rep.reason = buf;
    } else if (rep.scale_plus == IntegralTrend::diverged &&
               rep.scale_minus == IntegralTrend::diverged) {
        rep.status = RecurrenceStatus::positive_recurrent;
        rep.lambda = lambda;
    } else {
        rep.status = RecurrenceStatus::rejected;
        std::snprintf(buf, sizeof buf, "inconclusive at window W=%g", window);
        rep.reason = buf;
    }
    model.set_recurrence_report(rep);
    return rep;
}

} // namespace ergoflow
