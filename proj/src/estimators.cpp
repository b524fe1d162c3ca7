#include "ergoflow/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace ergoflow {

EstimateReport gamma_birkhoff(const DiffusionModel& model, std::uint64_t seed, double T,
                              double burn_in, double dt, double x0) {
    if (!(T > 2.0 * burn_in)) throw estimator_error("gamma_birkhoff: T must exceed 2x burn-in");
    NoisePath path(seed, dt);
    ForwardSeq noise(path);
    Ensemble e(model, {x0});
    const auto n_burn = static_cast<std::uint64_t>(to_grid(burn_in, dt));
    step_forward(e, noise, n_burn);
    const auto n = static_cast<std::uint64_t>(to_grid(T, dt)) - n_burn;
    const std::size_t n_batches = 20;
    std::vector<double> batch_sum(n_batches, 0.0);
    std::vector<std::uint64_t> batch_n(n_batches, 0);
    for (std::uint64_t k = 0; k < n; ++k) {
        const double x = e.members()[0].x;
        const double ms = model.m(x) / model.sigma(x);
        const std::size_t b = static_cast<std::size_t>(k * n_batches / n);
        batch_sum[b] += 2.0 * ms * ms;
        ++batch_n[b];
        step_forward(e, noise, 1);
    }
    double grand = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) grand += batch_sum[b];
    grand /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        const double mb = batch_sum[b] / static_cast<double>(batch_n[b]);
        var += (mb - grand) * (mb - grand);
    }
    var /= static_cast<double>(n_batches - 1);
    EstimateReport r;
    r.value = grand;
    r.std_error = std::sqrt(var / static_cast<double>(n_batches));
    r.n = n;
    r.method = "birkhoff";
    r.diagnostics["burn_in"] = burn_in;
    r.diagnostics["batches"] = static_cast<double>(n_batches);
    return r;
}

std::vector<double> focusing_series(const DiffusionModel& model, const MeasureTable& table,
                                    const IncrementSeq& noise, double a, double b, double T,
                                    double* continuation_from) {
    if (!(a < b)) throw estimator_error("two_point_rate: needs a < b");
    const double dt = noise.dt();
    const auto n = static_cast<std::uint64_t>(to_grid(T, dt));
    Ensemble e(model, {a, b});
    // relative floor well above cancellation: the s-gap loses digits to the
    // difference of two O(1)..O(large) scale values
    const double rel_floor = 1e-9;
    std::vector<double> lg(n + 1);
    bool continuation = false;
    double base_lg = 0.0, base_jac = 0.0;
    double t_switch = std::numeric_limits<double>::quiet_NaN();
    for (std::uint64_t k = 0;; ++k) {
        if (!continuation) {
            const double sa = table.scale_at(e.members()[0].x);
            const double sb = table.scale_at(e.members()[1].x);
            const double gap = sb - sa;
            if (!(gap > 0.0) || !std::isfinite(gap))
                throw estimator_error("two_point_rate: scale gap not positive");
            lg[k] = std::log(gap);
            if (gap < rel_floor * std::max({1.0, std::fabs(sa), std::fabs(sb)})) {
                continuation = true;
                base_lg = lg[k];
                base_jac = e.members()[0].log_jac;
                t_switch = static_cast<double>(k) * dt;
            }
        } else {
            lg[k] = base_lg + (e.members()[0].log_jac - base_jac);
        }
        if (k == n) break;
        accumulate_log_jacobian(e, noise, 1);
    }
    if (continuation_from) *continuation_from = t_switch;
    return lg;
}

EstimateReport two_point_rate_on(const DiffusionModel& model, const MeasureTable& table,
                                 const IncrementSeq& noise, double a, double b, double T) {
    const double dt = noise.dt();
    double t_switch = std::numeric_limits<double>::quiet_NaN();
    auto lg = focusing_series(model, table, noise, a, b, T, &t_switch);
    const auto n = static_cast<std::uint64_t>(lg.size() - 1);
    // least squares of lg against t over [T/2, T]
    const std::uint64_t k0 = n / 2;
    const auto m = static_cast<double>(n - k0 + 1);
    double st = 0.0, sy = 0.0;
    for (std::uint64_t k = k0; k <= n; ++k) {
        st += static_cast<double>(k) * dt;
        sy += lg[k];
    }
    const double tbar = st / m, ybar = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::uint64_t k = k0; k <= n; ++k) {
        const double u = static_cast<double>(k) * dt - tbar;
        const double v = lg[k] - ybar;
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
    }
    const double slope = sxy / sxx;
    const double rss = std::max(0.0, syy - slope * sxy);
    EstimateReport r;
    r.value = slope;
    r.std_error = std::sqrt(rss / (m - 2.0) / sxx);
    r.n = static_cast<std::uint64_t>(m);
    r.method = "two_point";
    r.diagnostics["r_squared"] = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    r.diagnostics["fit_from"] = static_cast<double>(k0) * dt;
    if (std::isfinite(t_switch)) r.diagnostics["log_jac_continuation_from"] = t_switch;
    return r;
}

EstimateReport two_point_rate(const DiffusionModel& model, const MeasureTable& table,
                              std::uint64_t seed, double a, double b, double T, double dt) {
    NoisePath path(seed, dt);
    ForwardSeq noise(path);
    return two_point_rate_on(model, table, noise, a, b, T);
}

EstimateReport exit_probability(const DiffusionModel& model, double x0, std::uint64_t n_paths,
                                double horizon, double escape_threshold, double dt,
                                std::uint64_t seed_base) {
    if (n_paths == 0) throw estimator_error("exit_probability: needs paths");
    const auto n_steps = static_cast<std::uint64_t>(to_grid(horizon, dt));
    std::uint64_t plus = 0, minus = 0, undecided = 0;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
        NoisePath path(seed_base + i, dt);
        ForwardSeq noise(path);
        Ensemble e(model, {x0});
        while (e.steps_taken() < n_steps && e.members()[0].status == MemberStatus::alive)
            step_sharp(e, noise, std::min<std::uint64_t>(1000, n_steps - e.steps_taken()),
                       escape_threshold);
        switch (e.members()[0].status) {
        case MemberStatus::escaped_plus: ++plus; break;
        case MemberStatus::escaped_minus: ++minus; break;
        case MemberStatus::alive: ++undecided; break;
        }
    }
    const double undecided_frac = static_cast<double>(undecided) / static_cast<double>(n_paths);
    if (undecided_frac > 0.05)
        throw estimator_error("exit_probability: > 5% of paths undecided at the horizon");
    const double p = static_cast<double>(plus) / static_cast<double>(n_paths);
    EstimateReport r;
    r.value = p;
    r.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n_paths));
    r.n = n_paths;
    r.method = "exit_probability";
    r.diagnostics["undecided_fraction"] = undecided_frac;
    r.diagnostics["escaped_minus"] = static_cast<double>(minus);
    return r;
}

EstimateReport occupation_vs_invariant(const DiffusionModel& model, const MeasureTable& table,
                                       std::uint64_t seed, double T, std::size_t n_bins,
                                       double burn_in, double thin_stride, double dt) {
    NoisePath path(seed, dt);
    ForwardSeq noise(path);
    Ensemble e(model, {0.0});
    const auto n_burn = static_cast<std::uint64_t>(to_grid(burn_in, dt));
    const auto n_total = static_cast<std::uint64_t>(to_grid(T, dt));
    const auto stride = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(to_grid(thin_stride, dt)));
    if (n_total <= n_burn) throw estimator_error("occupation_vs_invariant: T <= burn-in");
    step_forward(e, noise, n_burn);
    std::vector<double> samples;
    samples.reserve((n_total - n_burn) / stride + 1);
    for (std::uint64_t k = n_burn; k < n_total; k += stride) {
        samples.push_back(e.members()[0].x);
        step_forward(e, noise, std::min(stride, n_total - k));
    }
    if (samples.empty()) throw estimator_error("occupation_vs_invariant: no samples");
    const double ks = ks_distance(samples, [&](double x) { return table.pi_cdf_at(x); });
    // histogram peak location for multimodality diagnostics
    auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / static_cast<double>(std::max<std::size_t>(1, n_bins));
    std::vector<std::uint64_t> counts(std::max<std::size_t>(1, n_bins), 0);
    for (double x : samples) {
        auto bi = width > 0.0 ? static_cast<std::size_t>((x - lo) / width) : 0;
        ++counts[std::min(bi, counts.size() - 1)];
    }
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    EstimateReport r;
    r.value = ks;
    r.std_error = 0.0;
    r.n = samples.size();
    r.method = "occupation_ks";
    r.diagnostics["burn_in"] = burn_in;
    r.diagnostics["thin_stride"] = thin_stride;
    r.diagnostics["peak_location"] = lo + (static_cast<double>(peak) + 0.5) * width;
    return r;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw estimator_error("ks_distance: empty sample set");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    return d;
}

double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw estimator_error("ks_distance: empty sample set");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

double ks_two_sample_critical_1pct(std::size_t n, std::size_t m) {
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return 1.628 * std::sqrt((nn + mm) / (nn * mm));
}

} // namespace ergoflow
