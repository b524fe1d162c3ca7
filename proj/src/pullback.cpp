#include "ergoflow/pullback.hpp"

#include <algorithm>
#include <cmath>

namespace ergoflow {

std::vector<double> pullback_map_at(const DiffusionModel& model, const NoisePath& path,
                                    double t0, double T, const std::vector<double>& x0s) {
    ReversedWindowSeq noise(path, t0, T);
    Ensemble e(model, x0s);
    step_forward(e, noise, noise.steps());
    return e.positions();
}

std::vector<double> pullback_map(const DiffusionModel& model, const NoisePath& path, double T,
                                 const std::vector<double>& x0s) {
    return pullback_map_at(model, path, 0.0, T, x0s);
}

std::vector<double> default_t_schedule(double gamma) {
    double t_max = std::max(10.0, 20.0 / gamma);
    std::vector<double> out;
    for (double t = 1.0;; t *= 2.0) {
        out.push_back(t);
        if (t >= t_max) break;
    }
    return out;
}

XinfResult sample_xinf_at(const DiffusionModel& model, const NoisePath& path, double t0,
                          const std::vector<double>& x0s,
                          const std::vector<double>& t_schedule, double tol) {
    if (x0s.size() < 3) throw pullback_error("sample_xinf needs at least 3 probe starts");
    if (t_schedule.empty()) throw pullback_error("empty horizon schedule");
    XinfResult out;
    bool have_prev = false;
    double prev_mean = 0.0;
    for (double T : t_schedule) {
        auto values = pullback_map_at(model, path, t0, T, x0s);
        double lo = *std::min_element(values.begin(), values.end());
        double hi = *std::max_element(values.begin(), values.end());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        out.horizons.push_back(T);
        out.horizon_means.push_back(mean);
        out.T_used = T;
        out.spread = hi - lo;
        out.drift = have_prev ? std::fabs(mean - prev_mean)
                              : std::numeric_limits<double>::infinity();
        out.value = mean;
        if (out.spread < tol && out.drift < tol) {
            out.converged = true;
            break;
        }
        prev_mean = mean;
        have_prev = true;
    }
    return out;
}

XinfResult sample_xinf(const DiffusionModel& model, const NoisePath& path,
                       const std::vector<double>& x0s, const std::vector<double>& t_schedule,
                       double tol) {
    return sample_xinf_at(model, path, 0.0, x0s, t_schedule, tol);
}

namespace {

// Sharp trajectory classification with horizon extension: undecided points
// near the stagnation point get up to 8x the base horizon to pick a side.
MemberStatus classify_escape(const DiffusionModel& model, const NoisePath& path, double x0,
                             double horizon, double escape_threshold, double max_factor) {
    Ensemble e(model, {x0});
    ForwardSeq noise(path);
    const std::uint64_t chunk = 1000;
    const auto cap = static_cast<std::uint64_t>(
        static_cast<double>(to_grid(horizon, path.dt())) * max_factor);
    while (e.steps_taken() < cap && e.members()[0].status == MemberStatus::alive)
        step_sharp(e, noise, std::min(chunk, cap - e.steps_taken()), escape_threshold);
    return e.members()[0].status;
}

} // namespace

double stagnation_bisect(const DiffusionModel& model, const NoisePath& path, double horizon,
                         double bracket_lo, double bracket_hi, double tol,
                         double escape_threshold) {
    if (!(bracket_lo < bracket_hi)) throw pullback_error("empty bisection bracket");
    MemberStatus lo = sharp_escape_sign(model, path, bracket_lo, horizon, escape_threshold);
    MemberStatus hi = sharp_escape_sign(model, path, bracket_hi, horizon, escape_threshold);
    if (lo == MemberStatus::alive || hi == MemberStatus::alive)
        throw pullback_error("bracket edge did not escape by the horizon");
    if (lo == hi) throw pullback_error("same-sign escape at bracket edges");
    if (lo == MemberStatus::escaped_plus)
        throw pullback_error("escape signs inverted: flow cannot be monotone here");
    double a = bracket_lo, b = bracket_hi;
    while (b - a > tol) {
        double mid = 0.5 * (a + b);
        MemberStatus s = classify_escape(model, path, mid, horizon, escape_threshold, 8.0);
        if (s == MemberStatus::alive)
            throw pullback_error("bisection midpoint undecided within 8x horizon");
        (s == MemberStatus::escaped_plus ? b : a) = mid;
    }
    return 0.5 * (a + b);
}

InvariantPointCheck invariant_point_check(const DiffusionModel& model, const NoisePath& path,
                                          double t_shift, const std::vector<double>& x0s,
                                          const std::vector<double>& t_schedule, double tol,
                                          double escape_threshold) {
    InvariantPointCheck out;
    out.base = sample_xinf(model, path, x0s, t_schedule, tol);
    if (!out.base.converged) throw pullback_error("xinf(b) did not converge");
    Ensemble e(model, {out.base.value});
    ForwardSeq noise(path);
    step_sharp(e, noise, static_cast<std::uint64_t>(to_grid(t_shift, path.dt())),
               escape_threshold);
    out.lhs = e.members()[0].x;
    out.shifted = sample_xinf_at(model, path, t_shift, x0s, t_schedule, tol);
    if (!out.shifted.converged) throw pullback_error("xinf(theta_t b) did not converge");
    out.rhs = out.shifted.value;
    out.residual = std::fabs(out.lhs - out.rhs);
    return out;
}

double pullback_process(const DiffusionModel& model, const NoisePath& path, double T,
                        double x0) {
    ShiftedSeq noise(path, -T);
    Ensemble e(model, {x0});
    step_forward(e, noise, static_cast<std::uint64_t>(to_grid(T, path.dt())));
    return e.members()[0].x;
}

namespace {

// Reversal of the first n elements of a forward increment sequence: the
// driving noise of X_down over the window [0, n*dt].
class ReversedOf final : public IncrementSeq {
  public:
    ReversedOf(const IncrementSeq& base, std::uint64_t n) : base_(&base), n_(n) {}
    double at(std::uint64_t i) const override { return -base_->at(n_ - 1 - i); }
    double dt() const override { return base_->dt(); }

  private:
    const IncrementSeq* base_;
    std::uint64_t n_;
};

// u(t_k, x0 + offset) = f(X_down_{t_k}) for all grid times; each horizon is
// its own reversed-noise integration (the reversal window depends on t).
struct PullbackSurface {
    std::vector<double> minus, center, plus; // indexed by time step
};

PullbackSurface tabulate_surface(const DiffusionModel& model, const IncrementSeq& forward,
                                 const CoefficientFunction& f, double x, double dx,
                                 std::uint64_t n_steps) {
    PullbackSurface s;
    s.minus.resize(n_steps + 1);
    s.center.resize(n_steps + 1);
    s.plus.resize(n_steps + 1);
    s.minus[0] = f(x - dx);
    s.center[0] = f(x);
    s.plus[0] = f(x + dx);
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
        ReversedOf noise(forward, k);
        Ensemble e(model, {x - dx, x, x + dx});
        step_forward(e, noise, k);
        auto pos = e.positions();
        s.minus[k] = f(pos[0]);
        s.center[k] = f(pos[1]);
        s.plus[k] = f(pos[2]);
    }
    return s;
}

std::vector<double> residual_for_point(const DiffusionModel& model, const IncrementSeq& forward,
                                       const CoefficientFunction& f, double x, double dx,
                                       std::uint64_t n) {
    auto s = tabulate_surface(model, forward, f, x, dx, n);
    const double dt = forward.dt();
    const double sig = model.sigma(x);
    const double q = model.q(x);
    std::vector<double> ux(n + 1), g(n + 1);
    for (std::uint64_t k = 0; k <= n; ++k) {
        ux[k] = (s.plus[k] - s.minus[k]) / (2.0 * dx);
        double uxx = (s.plus[k] - 2.0 * s.center[k] + s.minus[k]) / (dx * dx);
        g[k] = q * ux[k] + 0.5 * sig * sig * uxx;
    }
    // left-point stochastic sums and composite-Simpson ds prefix
    std::vector<double> res(n + 1, 0.0);
    double stoch = 0.0;
    std::vector<double> simpson(n + 1, 0.0);
    for (std::uint64_t k = 2; k <= n; k += 2)
        simpson[k] = simpson[k - 2] + dt / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k]);
    for (std::uint64_t k = 1; k <= n; k += 2)
        simpson[k] = simpson[k - 1] + 0.5 * dt * (g[k - 1] + g[k]);
    for (std::uint64_t k = 1; k <= n; ++k) {
        stoch += ux[k - 1] * forward.at(k - 1);
        res[k] = s.center[k] - s.center[0] + sig * stoch - simpson[k];
    }
    return res;
}

} // namespace

SpdeResidual spde_residual(const DiffusionModel& model, const IncrementSeq& forward,
                           const CoefficientFunction& f, const std::vector<double>& x_grid,
                           double T) {
    if (x_grid.empty()) throw pullback_error("spde_residual: empty x grid");
    const double dt = forward.dt();
    const auto n = static_cast<std::uint64_t>(to_grid(T, dt));
    SpdeResidual out;
    out.t.resize(n + 1);
    out.rms.assign(n + 1, 0.0);
    for (std::uint64_t k = 0; k <= n; ++k) out.t[k] = static_cast<double>(k) * dt;
    for (double x : x_grid) {
        double dx = 1e-3 * std::max(1.0, std::fabs(x));
        auto res = residual_for_point(model, forward, f, x, dx, n);
        for (std::uint64_t k = 0; k <= n; ++k) out.rms[k] += res[k] * res[k];
    }
    for (auto& v : out.rms) v = std::sqrt(v / static_cast<double>(x_grid.size()));
    return out;
}

SpdeResidual spde_residual(const DiffusionModel& model, const NoisePath& path,
                           const CoefficientFunction& f, const std::vector<double>& x_grid,
                           double T) {
    ForwardSeq forward(path);
    return spde_residual(model, forward, f, x_grid, T);
}

} // namespace ergoflow
