#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ergoflow/flow.hpp"
#include "ergoflow/measures.hpp"

namespace ergoflow {

struct estimator_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimateReport {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
    std::string method;
    std::map<std::string, double> diagnostics;
};

/// Birkhoff time-average of 2 m^2/sigma^2 along one forward trajectory;
/// std_error by batch means over 20 batches of the post-burn-in window.
EstimateReport gamma_birkhoff(const DiffusionModel& model, std::uint64_t seed, double T,
                              double burn_in, double dt, double x0 = 0.0);

/// Shared-noise two-point focusing rate: records ln(s(X_t(b)) - s(X_t(a)))
/// every step and fits the slope by least squares over [T/2, T]. When the
/// scale gap shrinks below the relative precision floor the recording
/// switches to the one-point log-Jacobian continuation (the flow-derivative
/// accumulator drives the same exponential). Expected slope is -gamma.
EstimateReport two_point_rate(const DiffusionModel& model, const MeasureTable& table,
                              std::uint64_t seed, double a, double b, double T, double dt);
EstimateReport two_point_rate_on(const DiffusionModel& model, const MeasureTable& table,
                                 const IncrementSeq& noise, double a, double b, double T);

/// The raw per-step series ln(s(X_t(b)) - s(X_t(a))) at t_k = k dt that
/// two_point_rate fits; if the log-Jacobian continuation kicks in,
/// *continuation_from receives the switch time (NaN otherwise).
std::vector<double> focusing_series(const DiffusionModel& model, const MeasureTable& table,
                                    const IncrementSeq& noise, double a, double b, double T,
                                    double* continuation_from = nullptr);

/// Monte Carlo fraction of sharp trajectories from x0 escaping to +infinity
/// by `horizon`, with binomial std_error; paths use seeds seed_base + i.
/// Throws when more than 5% of paths remain undecided at the horizon.
EstimateReport exit_probability(const DiffusionModel& model, double x0, std::uint64_t n_paths,
                                double horizon, double escape_threshold, double dt,
                                std::uint64_t seed_base = 1);

/// KS distance between the thinned occupation sample of one forward
/// trajectory (after burn-in) and the quadrature invariant CDF. Diagnostics
/// carry the histogram peak location over n_bins bins.
EstimateReport occupation_vs_invariant(const DiffusionModel& model, const MeasureTable& table,
                                       std::uint64_t seed, double T, std::size_t n_bins,
                                       double burn_in, double thin_stride, double dt);

/// One-sample Kolmogorov-Smirnov statistic (both one-sided deviations).
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic 1% critical values, c(0.01) = 1.628.
double ks_critical_1pct(std::size_t n);
double ks_two_sample_critical_1pct(std::size_t n, std::size_t m);

} // namespace ergoflow
