#include "ergoflow/oracle.hpp"

#include <cmath>

namespace ergoflow {

double ou_exact_flow(const OuParams& p, const NoisePath& path, double x0, double T) {
    const double dt = path.dt();
    const std::int64_t n = to_grid(T, dt);
    // sum smallest-first: e^{beta(t_i - T)} is smallest at i = 0
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double ti = static_cast<double>(i) * dt;
        acc += std::exp(p.beta * (ti - T)) * path.increment(Side::positive, i);
    }
    return x0 * std::exp(-p.beta * T) + p.sigma0 * acc;
}

OuXinf ou_exact_xinf(const OuParams& p, const NoisePath& path, double T_max) {
    const double dt = path.dt();
    const std::int64_t n = to_grid(T_max, dt);
    // sum tail-first so the tiny terms are not absorbed by the head
    double acc = 0.0;
    for (std::int64_t i = n; i-- > 0;) {
        double ti = static_cast<double>(i) * dt;
        acc += std::exp(-p.beta * ti) * path.increment(Side::positive, i);
    }
    OuXinf out;
    out.value = -p.sigma0 * acc;
    // discarded tail is Normal with variance sigma0^2 e^{-2 beta T_max}/(2 beta)
    out.truncation_bound =
        3.0 * p.sigma0 * std::exp(-p.beta * T_max) / std::sqrt(2.0 * p.beta);
    return out;
}

double ou_stationary_sharp(const OuParams& p, const NoisePath& path, double t, double T_max) {
    const double dt = path.dt();
    const std::int64_t i0 = to_grid(t, dt);
    const std::int64_t n = to_grid(T_max, dt);
    double acc = 0.0;
    for (std::int64_t i = n; i-- > i0;) {
        double ti = static_cast<double>(i) * dt;
        acc += std::exp(-p.beta * ti) * path.increment(Side::positive, i);
    }
    return -p.sigma0 * std::exp(p.beta * t) * acc;
}

} // namespace ergoflow
