#include "ergoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ergoflow {

Ensemble::Ensemble(const DiffusionModel& model, std::vector<double> x0) : model_(&model) {
    model.require_positive_recurrent();
    members_.reserve(x0.size());
    for (double x : x0) {
        EnsembleMember m;
        m.x = x;
        members_.push_back(m);
    }
}

std::vector<double> Ensemble::positions() const {
    std::vector<double> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.x);
    return out;
}

namespace {

// One classical RK4 step of the drift ODE x' = f(x) over h.
template <typename F> double rk4_step(F&& f, double x, double h) {
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h * k2);
    const double k4 = f(x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

void Ensemble::advance(const IncrementSeq& noise, std::uint64_t n_steps,
                       const StepOptions& opt) {
    const double dt = noise.dt();
    const DiffusionModel& model = *model_;
    for (std::uint64_t step = 0; step < n_steps; ++step) {
        const double db = noise.at(steps_);
        for (std::size_t k = 0; k < members_.size(); ++k) {
            EnsembleMember& mem = members_[k];
            if (mem.status != MemberStatus::alive) continue;
            const double x = mem.x;
            const double sig = model.sigma(x);
            const double dsig = model.dsigma(x);
            auto drift = [&](double y) { return opt.drift_sign * model.m(y); };
            if (opt.accumulate_log_jacobian) {
                const double ms = model.m(x) / sig;
                mem.log_jac += -2.0 * ms * db - 2.0 * ms * ms * dt;
            }
            // Strang splitting of the Stratonovich SDE: half an RK4 drift
            // step, the Stratonovich-Milstein noise map, half a drift step.
            // Same terms as Ito drift q = m + sigma sigma'/2 with Milstein
            // correction (q dt + sigma sigma'(db^2-dt)/2 = m dt + sigma
            // sigma' db^2 / 2), but the symmetric placement makes the sharp
            // and pullback flows exact inverses of each other step by step.
            const double x_euler = x + drift(x) * dt + sig * db + 0.5 * sig * dsig * db * db;
            double xn;
            if (std::fabs(x_euler) >= opt.escape_threshold) {
                xn = x_euler; // escaping anyway; RK4 stages could overflow
            } else {
                double y = rk4_step(drift, x, 0.5 * dt);
                const double sy = model.sigma(y);
                y += sy * db + 0.5 * sy * model.dsigma(y) * db * db;
                xn = rk4_step(drift, y, 0.5 * dt);
            }
            if (!std::isfinite(xn)) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "numeric overflow: member %zu at step %llu", k,
                              static_cast<unsigned long long>(steps_));
                throw flow_error(buf);
            }
            if (std::fabs(xn) >= opt.escape_threshold) {
                mem.status = xn > 0 ? MemberStatus::escaped_plus : MemberStatus::escaped_minus;
                mem.escape_time = static_cast<double>(steps_ + 1) * dt;
                mem.x = std::copysign(opt.escape_threshold, xn);
                continue;
            }
            mem.x = xn;
        }
        ++steps_;
        // order check among alive members (initial order is preserved by
        // construction order, flows must keep it)
        const EnsembleMember* prev = nullptr;
        for (const auto& mem : members_) {
            if (mem.status != MemberStatus::alive) continue;
            if (prev && prev->x > mem.x) ++mono_violations_;
            prev = &mem;
        }
    }
}

void step_forward(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps) {
    StepOptions opt;
    e.advance(noise, n_steps, opt);
}

void step_sharp(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps,
                double escape_threshold) {
    StepOptions opt;
    opt.drift_sign = -1.0;
    opt.escape_threshold = escape_threshold;
    e.advance(noise, n_steps, opt);
}

void accumulate_log_jacobian(Ensemble& e, const IncrementSeq& noise, std::uint64_t n_steps) {
    StepOptions opt;
    opt.accumulate_log_jacobian = true;
    e.advance(noise, n_steps, opt);
}

MemberStatus sharp_escape_sign(const DiffusionModel& model, const NoisePath& path, double x0,
                               double t, double escape_threshold) {
    Ensemble e(model, {x0});
    ForwardSeq noise(path);
    step_sharp(e, noise, static_cast<std::uint64_t>(to_grid(t, path.dt())), escape_threshold);
    return e.members()[0].status;
}

DomainEndpoints domain_endpoints(const DiffusionModel& model, const NoisePath& path, double t,
                                 double bracket_lo, double bracket_hi, double tol,
                                 double escape_threshold) {
    if (!(bracket_lo < bracket_hi)) throw flow_error("domain_endpoints: empty bracket");
    DomainEndpoints out;
    out.left = bracket_lo;
    out.right = bracket_hi;

    auto sign_at = [&](double x0) {
        return sharp_escape_sign(model, path, x0, t, escape_threshold);
    };
    MemberStatus lo = sign_at(bracket_lo);
    MemberStatus hi = sign_at(bracket_hi);
    if (lo == MemberStatus::escaped_plus || hi == MemberStatus::escaped_minus)
        throw flow_error("domain_endpoints: bracket does not straddle the escape behavior");

    // R_t: boundary between "alive at t" and "escaped to +inf by t"
    if (hi == MemberStatus::escaped_plus) {
        out.explosion_plus = true;
        double a = bracket_lo, b = bracket_hi;
        while (b - a > tol) {
            double mid = 0.5 * (a + b);
            (sign_at(mid) == MemberStatus::escaped_plus ? b : a) = mid;
        }
        out.right = 0.5 * (a + b);
    }
    // L_t: boundary between "escaped to -inf by t" and "alive at t"
    if (lo == MemberStatus::escaped_minus) {
        out.explosion_minus = true;
        double a = bracket_lo, b = out.explosion_plus ? out.right : bracket_hi;
        while (b - a > tol) {
            double mid = 0.5 * (a + b);
            (sign_at(mid) == MemberStatus::escaped_minus ? a : b) = mid;
        }
        out.left = 0.5 * (a + b);
    }
    return out;
}

} // namespace ergoflow
