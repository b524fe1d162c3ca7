#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergoflow/expr.hpp"

namespace ergoflow {

struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scalar coefficient of an SDE (sigma or m). Catalog entries carry
/// analytic derivatives; expression-backed entries fall back to central
/// finite differences.
class CoefficientFunction {
  public:
    using RawFn = double (*)(double, const void*);

    static CoefficientFunction analytic(RawFn f, RawFn d1, RawFn d2,
                                        std::shared_ptr<const void> ctx, std::string label);
    static CoefficientFunction from_expression(const std::string& src,
                                               std::map<std::string, double> params);

    double operator()(double x) const { return f_(x, ctx_); }

    /// order 1..3; analytic for order<=2 on catalog entries, finite
    /// differences otherwise.
    double deriv(double x, int order = 1) const;

    bool has_analytic_derivatives() const { return d1_ != nullptr; }
    const std::string& label() const { return label_; }

  private:
    CoefficientFunction() = default;
    RawFn f_ = nullptr;
    RawFn d1_ = nullptr;
    RawFn d2_ = nullptr;
    const void* ctx_ = nullptr;
    std::shared_ptr<const void> owned_ctx_; // keeps expression context alive
    std::string label_;
};

enum class RecurrenceStatus { unchecked, positive_recurrent, rejected };

/// Convergence verdict for a truncated improper integral.
enum class IntegralTrend { converged, diverged, inconclusive };

struct RecurrenceReport {
    RecurrenceStatus status = RecurrenceStatus::unchecked;
    std::string reason;
    double lambda = std::numeric_limits<double>::quiet_NaN(); // when finite
    IntegralTrend scale_minus = IntegralTrend::inconclusive;  // scale integral, left side
    IntegralTrend scale_plus = IntegralTrend::inconclusive;   // scale integral, right side
    IntegralTrend lambda_trend = IntegralTrend::inconclusive;
    double window = 0.0;
};

/// One-dimensional diffusion dX = sigma(X) o db + m(X) dt. Immutable
/// after construction; safe for concurrent read-only use.
class DiffusionModel {
  public:
    DiffusionModel(CoefficientFunction sigma, CoefficientFunction m, std::string name,
                   std::map<std::string, double> params);

    double sigma(double x) const { return sigma_(x); }
    double m(double x) const { return m_(x); }
    double dsigma(double x) const { return sigma_.deriv(x, 1); }
    double dm(double x) const { return m_.deriv(x, 1); }

    /// Modified drift q = m + sigma*sigma'/2 (Stratonovich-to-Ito).
    double q(double x) const { return m_(x) + 0.5 * sigma_(x) * sigma_.deriv(x, 1); }

    const CoefficientFunction& sigma_fn() const { return sigma_; }
    const CoefficientFunction& m_fn() const { return m_; }

    const std::string& name() const { return name_; }
    const std::map<std::string, double>& params() const { return params_; }

    RecurrenceStatus recurrence_status() const { return recurrence_.status; }
    const RecurrenceReport& recurrence_report() const { return recurrence_; }
    bool is_positive_recurrent() const {
        return recurrence_.status == RecurrenceStatus::positive_recurrent;
    }
    void require_positive_recurrent() const;

    void set_recurrence_report(RecurrenceReport r) { recurrence_ = std::move(r); }

  private:
    CoefficientFunction sigma_;
    CoefficientFunction m_;
    std::string name_;
    std::map<std::string, double> params_;
    RecurrenceReport recurrence_;
};

/// Model description as it appears in CLI configs: either a catalog
/// entry ("ou", "tanh_drift", "double_well") with parameters, or a pair
/// of expression strings for sigma and m.
struct ModelSpec {
    std::string kind; // empty for expression models
    std::map<std::string, double> params;
    std::string sigma_expr;
    std::string m_expr;
};

/// Builds a model from a spec; probes sigma for positivity on
/// [-probe_window, probe_window].
DiffusionModel make_model(const ModelSpec& spec, double probe_window = 40.0);

/// Numeric check of the positive-recurrence conditions on [-window, window].
/// Declares an integral divergent when its truncated value exceeds
/// divergence_cutoff with a non-decreasing trend, convergent when the outer
/// half of the window adds a negligible relative amount.
RecurrenceReport validate_recurrence(DiffusionModel& model, double window = 40.0,
                                     double divergence_cutoff = 1e8);

} // namespace ergoflow
