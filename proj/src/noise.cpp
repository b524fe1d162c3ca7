#include "ergoflow/noise.hpp"

#include <cmath>
#include <cstdio>

namespace ergoflow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kSidePos = 0x8BADF00DDEADBEEFull;
constexpr std::uint64_t kSideNeg = 0x0123456789ABCDEFull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

} // namespace

// AS241 PPND16: the normal quantile to full double precision.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw noise_error("inverse_normal_cdf: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) *
                        r +
                    4.5921953931549871457e+4) *
                       r +
                   1.3731693765509461125e+4) *
                      r +
                  1.9715909503065514427e+3) *
                     r +
                 1.3314166789178437745e+2) *
                    r +
                3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) *
                        r +
                    2.1213794301586595867e+4) *
                       r +
                   5.3941960214247511077e+3) *
                      r +
                  6.8718700749205790830e+2) *
                     r +
                 4.2313330701600911252e+1) *
                    r +
                1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) *
                       r +
                   1.27045825245236838258e+0) *
                      r +
                  3.64784832476320460504e+0) *
                     r +
                 5.76949722146069140550e+0) *
                    r +
                4.63033784615654529590e+0) *
                   r +
               1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) *
                       r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e+0) *
                    r +
                2.05319162663775882187e+0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) *
                       r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e+0) *
                    r +
                5.46378491116411436990e+0) *
                   r +
               6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) *
                       r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return q < 0.0 ? -val : val;
}

std::int64_t to_grid(double t, double dt) {
    auto j = static_cast<std::int64_t>(std::llround(t / dt));
    if (std::fabs(static_cast<double>(j) * dt - t) > 1e-12) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "time %.17g is off the dt=%.17g grid", t, dt);
        throw noise_error(buf);
    }
    return j;
}

NoisePath::NoisePath(std::uint64_t seed, double dt) : seed_(seed), dt_(dt) {
    if (!(dt > 0.0)) throw noise_error("dt must be positive");
    key_pos_ = mix64(seed ^ kSidePos);
    key_neg_ = mix64(seed ^ kSideNeg);
}

double NoisePath::increment(Side side, std::uint64_t i) const {
    std::uint64_t key = (side == Side::positive) ? key_pos_ : key_neg_;
    std::uint64_t bits = mix64(key + i * kGolden);
    // 53-bit uniform strictly inside (0,1)
    double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(dt_) * inverse_normal_cdf(u);
}

double NoisePath::value_at_index(std::int64_t j) const {
    double b = 0.0;
    if (j >= 0) {
        for (std::int64_t i = 0; i < j; ++i) b += increment(Side::positive, i);
    } else {
        for (std::int64_t i = 0; i < -j; ++i) b += increment(Side::negative, i);
    }
    return b;
}

void NoisePath::extend(double t_plus, double t_minus) {
    if (t_plus > t_plus_) t_plus_ = t_plus;
    if (t_minus > t_minus_) t_minus_ = t_minus;
}

ReversedSeq::ReversedSeq(const NoisePath& path, double T) : path_(&path) {
    std::int64_t n = to_grid(T, path.dt());
    if (n < 0) throw noise_error("reversed view needs T >= 0");
    n_ = static_cast<std::uint64_t>(n);
}

double ReversedSeq::at(std::uint64_t i) const {
    if (i >= n_) throw noise_error("reversed view read past horizon");
    return -path_->increment(Side::positive, n_ - 1 - i);
}

ReversedWindowSeq::ReversedWindowSeq(const NoisePath& path, double t0, double T)
    : path_(&path), j0_(to_grid(t0, path.dt())) {
    std::int64_t n = to_grid(T, path.dt());
    if (n < 0) throw noise_error("reversed window needs T >= 0");
    n_ = static_cast<std::uint64_t>(n);
}

double ReversedWindowSeq::at(std::uint64_t i) const {
    if (i >= n_) throw noise_error("reversed window read past horizon");
    return -path_->forward_increment(j0_ + static_cast<std::int64_t>(n_ - 1 - i));
}

ShiftedSeq::ShiftedSeq(const NoisePath& path, double t0)
    : path_(&path), j0_(to_grid(t0, path.dt())) {}

NoisePath rotated_path(const NoisePath& path) {
    NoisePath r = path;
    std::swap(r.key_pos_, r.key_neg_);
    std::swap(r.t_plus_, r.t_minus_);
    return r;
}

} // namespace ergoflow
