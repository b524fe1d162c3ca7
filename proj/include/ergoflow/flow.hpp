#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ergoflow/coeffs.hpp"
#include "ergoflow/noise.hpp"

namespace ergoflow {

struct flow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MemberStatus { alive, escaped_plus, escaped_minus };

struct EnsembleMember {
    double x = 0.0;
    MemberStatus status = MemberStatus::alive;
    double escape_time = std::numeric_limits<double>::quiet_NaN();
    /// Flow-derivative exponent: -2 int (m/sigma) db - 2 int (m^2/sigma^2) dtau,
    /// kept in the log domain (reaches -gamma*t at long horizons).
    double log_jac = 0.0;
};

struct StepOptions {
    double drift_sign = +1.0; // +1 forward flow, -1 sharp flow
    double escape_threshold = std::numeric_limits<double>::infinity();
    bool accumulate_log_jacobian = false;
};

/// Positions of many initial conditions advanced under one shared noise
/// sequence. The integrator is the Stratonovich-consistent Milstein scheme:
/// Ito drift q = sign*m + sigma*sigma'/2, correction sigma*sigma'(db^2-dt)/2.
class Ensemble {
  public:
    Ensemble(const DiffusionModel& model, std::vector<double> x0);

    /// Advances all alive members n_steps, consuming noise.at(k) for
    /// k = steps_taken .. steps_taken+n_steps-1 (one draw shared by all
    /// members per step). Throws flow_error on numeric overflow.
    void advance(const IncrementSeq& noise, std::uint64_t n_steps, const StepOptions& opt);

    const std::vector<EnsembleMember>& members() const { return members_; }
    std::vector<double> positions() const;
    std::uint64_t steps_taken() const { return steps_; }
    double time(double dt) const { return static_cast<double>(steps_) * dt; }

    /// Order swaps between alive members, counted at every step. Nonzero
    /// counts indicate dt above the scheme's monotonicity threshold.
    std::uint64_t monotonicity_violations() const { return mono_violations_; }

    const DiffusionModel& model() const { return *model_; }

  private:
    const DiffusionModel* model_;
    std::vector<EnsembleMember> members_;
    std::uint64_t steps_ = 0;
    std::uint64_t mono_violations_ = 0;
};

void step_forward(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps);
void step_sharp(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps,
                double escape_threshold);
/// Forward stepping with log-Jacobian accumulation switched on.
void accumulate_log_jacobian(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps);

struct DomainEndpoints {
    double left = 0.0;  // L_t
    double right = 0.0; // R_t
    bool explosion_minus = false; // false: bracket edge returned, no explosion seen
    bool explosion_plus = false;
};

/// Endpoints of D_t = (L_t, R_t) by bisection on the sharp flow's escape
/// behavior under the fixed path. Escape is permanent (non-entrance), so
/// "escaped to +inf by t" is monotone in the start point.
DomainEndpoints domain_endpoints(const DiffusionModel& model, const NoisePath& path, double t,
                                 double bracket_lo, double bracket_hi, double tol,
                                 double escape_threshold);

/// Terminal status of a single sharp trajectory from x0 after t time units.
MemberStatus sharp_escape_sign(const DiffusionModel& model, const NoisePath& path, double x0,
                               double t, double escape_threshold);

} // namespace ergoflow
