#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ergoflow {

struct noise_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Standard normal quantile function (Wichura's AS241, double precision).
double inverse_normal_cdf(double p);

/// Snaps t to the dt grid; throws if t is off-grid by more than 1e-12.
std::int64_t to_grid(double t, double dt);

enum class Side : int { positive = 0, negative = 1 };

/// Read-only increment sequence: element i is the Brownian increment over
/// the i-th step of whatever time parametrization the view encodes.
class IncrementSeq {
  public:
    virtual ~IncrementSeq() = default;
    virtual double at(std::uint64_t i) const = 0;
    virtual double dt() const = 0;
};

/// Two-sided grid-discretized Brownian path. Increment i on each side is a
/// pure function of (seed, side, i) — counter-based, so reads are random
/// access, bit-reproducible, and safe from any number of threads.
///
/// Conventions: b(0) = 0; for t = i*dt >= 0, b(t) = sum of positive-side
/// increments 0..i-1; for t <= 0, b(t) = b2(-t) where b2 is the cumulative
/// sum of negative-side increments.
class NoisePath {
  public:
    NoisePath(std::uint64_t seed, double dt);

    double dt() const { return dt_; }
    std::uint64_t seed() const { return seed_; }

    /// Raw i.i.d. Normal(0, dt) draw for (side, i).
    double increment(Side side, std::uint64_t i) const;

    /// Forward increment of b over [j*dt, (j+1)*dt] for any signed grid
    /// index j (handles the two-sided seam).
    double forward_increment(std::int64_t j) const {
        return j >= 0 ? increment(Side::positive, static_cast<std::uint64_t>(j))
                      : -increment(Side::negative, static_cast<std::uint64_t>(-j - 1));
    }

    /// b at grid time index j (O(|j|)).
    double value_at_index(std::int64_t j) const;

    /// Horizon bookkeeping; extension never alters existing increments.
    void extend(double t_plus, double t_minus = 0.0);
    double horizon_plus() const { return t_plus_; }
    double horizon_minus() const { return t_minus_; }

  private:
    friend NoisePath rotated_path(const NoisePath&);
    std::uint64_t seed_;
    double dt_;
    double t_plus_ = 0.0;
    double t_minus_ = 0.0;
    std::uint64_t key_pos_;
    std::uint64_t key_neg_;
};

NoisePath rotated_path(const NoisePath& path);

/// Increments of the reversed path b_T(t) = b(T-t) - b(T) on [0, T]:
/// element i equals -(positive-side increment N-1-i), N = T/dt.
class ReversedSeq final : public IncrementSeq {
  public:
    ReversedSeq(const NoisePath& path, double T);
    double at(std::uint64_t i) const override;
    double dt() const override { return path_->dt(); }
    std::uint64_t steps() const { return n_; }

  private:
    const NoisePath* path_;
    std::uint64_t n_;
};

/// Reversal of the window [t0, t0+T]: the reversed path of theta_{t0} b.
/// Element i equals -(forward increment at grid index t0/dt + N-1-i).
/// ReversedWindowSeq(path, 0, T) coincides with ReversedSeq(path, T).
class ReversedWindowSeq final : public IncrementSeq {
  public:
    ReversedWindowSeq(const NoisePath& path, double t0, double T);
    double at(std::uint64_t i) const override;
    double dt() const override { return path_->dt(); }
    std::uint64_t steps() const { return n_; }

  private:
    const NoisePath* path_;
    std::int64_t j0_;
    std::uint64_t n_;
};

/// Increments of the shifted path (theta_{t0} b)(s) = b(s+t0) - b(t0);
/// works across the two-sided seam for negative t0.
class ShiftedSeq final : public IncrementSeq {
  public:
    ShiftedSeq(const NoisePath& path, double t0);
    double at(std::uint64_t i) const override { return path_->forward_increment(j0_ + static_cast<std::int64_t>(i)); }
    double dt() const override { return path_->dt(); }

  private:
    const NoisePath* path_;
    std::int64_t j0_;
};

/// Plain forward increments starting from t = 0.
class ForwardSeq final : public IncrementSeq {
  public:
    explicit ForwardSeq(const NoisePath& path) : path_(&path) {}
    double at(std::uint64_t i) const override { return path_->increment(Side::positive, i); }
    double dt() const override { return path_->dt(); }

  private:
    const NoisePath* path_;
};

/// A NoisePath whose increments are all zero, for deterministic ODE-limit
/// debugging. Implemented as an IncrementSeq.
class ZeroSeq final : public IncrementSeq {
  public:
    explicit ZeroSeq(double dt) : dt_(dt) {}
    double at(std::uint64_t) const override { return 0.0; }
    double dt() const override { return dt_; }

  private:
    double dt_;
};

} // namespace ergoflow
