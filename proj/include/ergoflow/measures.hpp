#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ergoflow/coeffs.hpp"

namespace ergoflow {

struct measures_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// gamma = 2 int m^2/sigma^2 dPi, kept as a flagged state rather than a
/// float infinity so downstream code must handle divergence explicitly.
struct FocusingRate {
    bool finite = false;
    double value = 0.0;
};

struct GapReport {
    double gamma = 0.0;
    bool cond_v_square_integrable = false; // (a) int V^2 dPi < inf
    bool cond_sigma_square_integrable = false; // (b) int sigma^2 dPi < inf
    bool cond_gamma_finite = false;        // (c)
    double beta_shift = 0.0;               // -int V dPi
    double alpha_norm = 0.0;               // normalization of F = alpha (V + beta)
    double trial_mean = 0.0;               // int F dPi   (should be ~0)
    double trial_variance = 0.0;           // int F^2 dPi (should be ~1)
    double rayleigh_of_F = 0.0;            // (1/2) int (F')^2 / s'
    bool bound_asserted = false;           // all conditions held and bound checked
};

struct BoundarySideReport {
    // log of the truncated non-entrance double integral at growing windows
    std::vector<double> window;
    std::vector<double> log_double_integral;
    bool non_entrance = false; // integral large and growing
    double sharp_scale_tail = 0.0; // s_sharp(W) - s_sharp(W/2), transience check
};

struct BoundaryReport {
    BoundarySideReport plus;
    BoundarySideReport minus;
};

/// Tabulated closed-form objects of a positive recurrent model: Lambda,
/// psi^2, scale s, invariant CDF Pi, the dual sharp scale/speed, and gamma.
/// Immutable after build; concurrent reads are safe.
class MeasureTable {
  public:
    /// Everything is computed by composite Simpson on a uniform grid with
    /// midpoint evaluations (effective step h/2) plus one Richardson
    /// extrapolation for the scalar integrals.
    static MeasureTable build(const DiffusionModel& model, double window = 40.0,
                              int n_grid = 16384);

    double window() const { return window_; }
    int n_grid() const { return n_; }
    double lambda() const { return lambda_; }
    const FocusingRate& gamma() const { return gamma_; }
    /// gamma recomputed as the Dirichlet form (1/2) int (1/s')(sigma'/sigma - 2 psi'/psi)^2.
    double gamma_alt() const { return gamma_alt_; }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& psi2() const { return psi2_; }
    const std::vector<double>& log_psi2() const { return log_psi2_; }
    const std::vector<double>& scale() const { return s_; }
    const std::vector<double>& pi_cdf() const { return pi_cdf_; }
    /// Upper tail 1 - Pi(x), accumulated from the right so the right tail
    /// keeps full relative precision.
    const std::vector<double>& pi_tail() const { return pi_tail_; }

    /// Point lookups (linear interpolation between grid nodes).
    double pi_cdf_at(double x) const;
    double pi_pdf_at(double x) const;
    double scale_at(double x) const;
    double log_scale_deriv_at(double x) const; // ln s'(x)
    double scale_deriv_at(double x) const { return std::exp(log_scale_deriv_at(x)); }

    /// Sharp-diffusion dual measures on the grid: ds_sharp = dmu,
    /// dmu_sharp = ds (Eqs. of the generator factorization).
    double sharp_scale_at(double x) const; // s_sharp, total mass 2
    double total_sharp_scale_mass() const; // int ds_sharp
    double total_speed_mass() const;       // int dmu

    /// x beyond which invariant tail mass is below `tail_mass`, times 1.5 —
    /// the model-derived numerical infinity used as escape threshold.
    double escape_threshold(double tail_mass = 1e-12) const;

    /// Quantile of the invariant CDF by bisection on the tabulated grid.
    double pi_quantile(double u) const;

    /// V(x) = int_0^x 1/sigma (the unit-diffusivity change of variable).
    double v_at(double x) const { return interp(v_, x); }

    /// ln s(x) along the positive/negative branch, k coarse steps from 0.
    double log_s_pos_branch(int k) const { return log_s_pos_[static_cast<std::size_t>(k)]; }
    double log_s_neg_branch(int k) const { return log_s_neg_[static_cast<std::size_t>(k)]; }

    const DiffusionModel& model() const { return *model_; }

  private:
    MeasureTable() = default;
    double interp(const std::vector<double>& values, double x) const;
    double interp_inner(double x) const; // cubic Hermite, exact slopes 2m/sigma^2

    const DiffusionModel* model_ = nullptr;
    double window_ = 0.0;
    int n_ = 0;
    double h_ = 0.0;
    double lambda_ = 0.0;
    FocusingRate gamma_;
    double gamma_alt_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> inner_;    // int_0^x 2m/sigma^2
    std::vector<double> psi2_;     // may saturate to +inf in far tails
    std::vector<double> log_psi2_;
    std::vector<double> s_;        // scale, s(0) = 0; +-inf once e^{ln s'} overflows
    std::vector<double> log_s_pos_; // ln s(x), x > 0 branch (for boundary report)
    std::vector<double> log_s_neg_; // ln (-s(x)), x < 0 branch
    std::vector<double> pi_cdf_;
    std::vector<double> pi_tail_;
    std::vector<double> v_;        // V(x) = int_0^x 1/sigma
};

/// 2 int m^2/sigma^2 dPi together with the agreement assertion against the
/// rewritten form (relative 1e-6 on finite values).
FocusingRate gamma_quadrature(const MeasureTable& table);

/// Feller non-entrance test for +-inf and the transience of the sharp scale.
BoundaryReport boundary_classification(const MeasureTable& table);

/// Trial-function spectral-gap bound rayleigh_of_F <= gamma, with the
/// normalized trial function F = alpha (V + beta), V = int_0^x 1/sigma.
GapReport spectral_gap_bound(const MeasureTable& table);

/// Rayleigh quotient (1/2) int (f')^2/s' for f centered and normalized to
/// zero Pi-mean and unit Pi-variance. Throws if f is Pi-a.s. constant.
double rayleigh_quotient(const MeasureTable& table, const CoefficientFunction& f);

} // namespace ergoflow
