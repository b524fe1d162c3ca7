#pragma once

#include <cstdint>
#include <vector>

#include "ergoflow/coeffs.hpp"
#include "ergoflow/flow.hpp"
#include "ergoflow/noise.hpp"

namespace ergoflow {

struct pullback_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// X_down_T(x0) for each probe: forward integration driven by the reversed
/// noise b_down(t) = b(T-t) - b(T). The t0 overload reverses the window
/// [t0, t0+T] of the shifted path theta_{t0} b.
std::vector<double> pullback_map(const DiffusionModel& model, const NoisePath& path, double T,
                                 const std::vector<double>& x0s);
std::vector<double> pullback_map_at(const DiffusionModel& model, const NoisePath& path,
                                    double t0, double T, const std::vector<double>& x0s);

/// Doubling horizon schedule {1, 2, 4, ...} up to T_max = max(10, 20/gamma).
std::vector<double> default_t_schedule(double gamma);

struct XinfResult {
    double value = 0.0;
    bool converged = false;
    double T_used = 0.0;
    double spread = 0.0; // max-min over probes at the final horizon
    double drift = 0.0;  // |mean difference| between the last two horizons
    std::vector<double> horizons;
    std::vector<double> horizon_means;
};

/// Pullback sampling of the stagnation point on one fixed path: runs
/// pullback_map over the schedule, declares convergence when the probe
/// spread and the successive-horizon drift both fall below tol. Never
/// throws on non-convergence — inspect `converged`.
XinfResult sample_xinf(const DiffusionModel& model, const NoisePath& path,
                       const std::vector<double>& x0s, const std::vector<double>& t_schedule,
                       double tol);
/// Same on the shifted path theta_{t0} b.
XinfResult sample_xinf_at(const DiffusionModel& model, const NoisePath& path, double t0,
                          const std::vector<double>& x0s,
                          const std::vector<double>& t_schedule, double tol);

/// Bisection on the escape sign of the sharp flow under the fixed noise.
/// Bracket edges must escape with opposite signs by `horizon`; interior
/// points that stay undecided are integrated up to 8x horizon before the
/// run is abandoned with an error.
double stagnation_bisect(const DiffusionModel& model, const NoisePath& path, double horizon,
                         double bracket_lo, double bracket_hi, double tol,
                         double escape_threshold);

struct InvariantPointCheck {
    double lhs = 0.0; // X_sharp_t(xinf(b))
    double rhs = 0.0; // xinf(theta_t b)
    double residual = 0.0;
    XinfResult base;
    XinfResult shifted;
};

/// Residual of the invariant-point identity X_sharp_t(xinf(b)) = xinf(theta_t b)
/// computed on one path with both sides sharing the same noise.
InvariantPointCheck invariant_point_check(const DiffusionModel& model, const NoisePath& path,
                                          double t_shift, const std::vector<double>& x0s,
                                          const std::vector<double>& t_schedule, double tol,
                                          double escape_threshold);

/// Pullback process z_T: forward integration from time -T (value x0) to 0
/// on the two-sided path. Identical bits to X_down_T on the rotated path.
double pullback_process(const DiffusionModel& model, const NoisePath& path, double T, double x0);

struct SpdeResidual {
    std::vector<double> t;   // recorded times (every step)
    std::vector<double> rms; // RMS over x_grid of the discrete residual
};

/// Discrete residual of the SPDE satisfied by u(t,x) = f(X_down_t(x)):
/// u - f(x) + sigma(x) * sum_j u_x(t_j, x) db_j - int G u ds, with central
/// x-differences (dx = 1e-3 max(1,|x|)), left-point db sums, and composite
/// Simpson in s. G u = q u_x + sigma^2/2 u_xx applied in x.
///
/// `forward` supplies the forward increments db_0, db_1, ... of the driving
/// path (ForwardSeq for a real path, ZeroSeq for the ODE limit).
SpdeResidual spde_residual(const DiffusionModel& model, const IncrementSeq& forward,
                           const CoefficientFunction& f, const std::vector<double>& x_grid,
                           double T);
SpdeResidual spde_residual(const DiffusionModel& model, const NoisePath& path,
                           const CoefficientFunction& f, const std::vector<double>& x_grid,
                           double T);

} // namespace ergoflow
