#include "ergoflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// Simpson totals of integrand values tabulated on the quarter-step ladder
// (4n+1 points): fine total uses step h/2 with odd-index midpoints, coarse
// total uses step h with even-index midpoints. One Richardson extrapolation
// combines them.
struct SimpsonTotals {
    double fine = 0.0;
    double coarse = 0.0;
    double richardson() const { return (16.0 * fine - coarse) / 15.0; }
};

SimpsonTotals simpson_totals(const std::vector<double>& g, double hq) {
    SimpsonTotals t;
    const std::size_t q = g.size() - 1; // 4n intervals
    double hf = 2.0 * hq;
    for (std::size_t k = 0; k + 2 <= q; k += 2)
        t.fine += hf / 6.0 * (g[k] + 4.0 * g[k + 1] + g[k + 2]);
    double hc = 4.0 * hq;
    for (std::size_t k = 0; k + 4 <= q; k += 4)
        t.coarse += hc / 6.0 * (g[k] + 4.0 * g[k + 2] + g[k + 4]);
    return t;
}

// Cumulative Simpson at even ladder indices (fine resolution).
std::vector<double> cumulative_fine(const std::vector<double>& g, double hq) {
    const std::size_t q = g.size() - 1;
    double hf = 2.0 * hq;
    std::vector<double> cum(q / 2 + 1, 0.0);
    for (std::size_t k = 0; k + 2 <= q; k += 2)
        cum[k / 2 + 1] = cum[k / 2] + hf / 6.0 * (g[k] + 4.0 * g[k + 1] + g[k + 2]);
    return cum;
}

} // namespace

MeasureTable MeasureTable::build(const DiffusionModel& model, double window, int n_grid) {
    model.require_positive_recurrent();
    if (n_grid < 1000) throw measures_error("n_grid must be >= 1000");
    if (n_grid % 2 != 0) throw measures_error("n_grid must be even");

    MeasureTable t;
    t.model_ = &model;
    t.window_ = window;
    t.n_ = n_grid;
    t.h_ = 2.0 * window / n_grid;

    const int n = n_grid;
    const std::size_t q = 4 * static_cast<std::size_t>(n); // quarter-step intervals
    const double hq = t.h_ / 4.0;
    const std::size_t cq = q / 2; // ladder index of x = 0

    auto xq = [&](std::size_t j) { return -window + hq * static_cast<double>(j); };

    // inner(x) = int_0^x 2m/sigma^2, marched outward from 0 with per-step
    // Simpson (extra evaluation at the half-quarter midpoint).
    std::vector<double> inner(q + 1, 0.0);
    auto g2 = [&](double x) {
        double s = model.sigma(x);
        return 2.0 * model.m(x) / (s * s);
    };
    for (std::size_t j = cq; j < q; ++j) {
        double a = xq(j), b = xq(j + 1);
        inner[j + 1] = inner[j] + hq / 6.0 * (g2(a) + 4.0 * g2(0.5 * (a + b)) + g2(b));
    }
    for (std::size_t j = cq; j > 0; --j) {
        double a = xq(j - 1), b = xq(j);
        inner[j - 1] = inner[j] - hq / 6.0 * (g2(a) + 4.0 * g2(0.5 * (a + b)) + g2(b));
    }

    std::vector<double> sigma_q(q + 1), log_sigma_q(q + 1);
    for (std::size_t j = 0; j <= q; ++j) {
        sigma_q[j] = model.sigma(xq(j));
        log_sigma_q[j] = std::log(sigma_q[j]);
    }

    // Unnormalized invariant density exp(inner)/sigma; Lambda is its total.
    std::vector<double> pi_un(q + 1);
    for (std::size_t j = 0; j <= q; ++j) pi_un[j] = std::exp(inner[j]) / sigma_q[j];
    auto lam_tot = simpson_totals(pi_un, hq);
    std::vector<double> pi_cum = cumulative_fine(pi_un, hq);
    const double lambda_un = pi_cum.back();
    t.lambda_ = lam_tot.richardson();
    const double log_lambda = std::log(lambda_un);

    // V(x) = int_0^x 1/sigma, cumulative from the center.
    std::vector<double> inv_sigma(q + 1);
    for (std::size_t j = 0; j <= q; ++j) inv_sigma[j] = 1.0 / sigma_q[j];
    std::vector<double> v_cum = cumulative_fine(inv_sigma, hq);
    const double v0 = v_cum[v_cum.size() / 2];

    // ln s'(x) = ln Lambda - ln sigma - inner
    std::vector<double> log_sprime(q + 1);
    for (std::size_t j = 0; j <= q; ++j)
        log_sprime[j] = log_lambda - log_sigma_q[j] - inner[j];

    // scale s from the center outward; saturates to +-inf where s' overflows
    const std::size_t nf = q / 2; // fine intervals
    std::vector<double> s_fine(nf + 1, 0.0);
    {
        const std::size_t cf = nf / 2;
        double hf = 2.0 * hq;
        for (std::size_t k = cf; k < nf; ++k) {
            double piece = hf / 6.0 *
                           (std::exp(log_sprime[2 * k]) + 4.0 * std::exp(log_sprime[2 * k + 1]) +
                            std::exp(log_sprime[2 * k + 2]));
            s_fine[k + 1] = s_fine[k] + piece;
        }
        for (std::size_t k = cf; k > 0; --k) {
            double piece = hf / 6.0 *
                           (std::exp(log_sprime[2 * k - 2]) +
                            4.0 * std::exp(log_sprime[2 * k - 1]) + std::exp(log_sprime[2 * k]));
            s_fine[k - 1] = s_fine[k] - piece;
        }
    }

    // log-domain scale branches for the boundary classification
    const int nc = n / 2; // coarse nodes per side
    t.log_s_pos_.assign(nc + 1, -kInf);
    t.log_s_neg_.assign(nc + 1, -kInf);
    for (int k = 0; k < nc; ++k) {
        std::size_t j0 = cq + 4 * static_cast<std::size_t>(k);
        double piece = std::log(4.0 * hq / 2.0) + log_add(log_sprime[j0], log_sprime[j0 + 4]);
        t.log_s_pos_[k + 1] = log_add(t.log_s_pos_[k], piece);
        std::size_t j1 = cq - 4 * static_cast<std::size_t>(k);
        double piece_n =
            std::log(4.0 * hq / 2.0) + log_add(log_sprime[j1], log_sprime[j1 - 4]);
        t.log_s_neg_[k + 1] = log_add(t.log_s_neg_[k], piece_n);
    }

    // gamma, route A: 2 int m^2/sigma^2 dPi
    std::vector<double> gA(q + 1);
    for (std::size_t j = 0; j <= q; ++j) {
        double mm = model.m(xq(j));
        gA[j] = 2.0 * mm * mm / (sigma_q[j] * sigma_q[j]) * pi_un[j] / lambda_un;
    }
    auto gA_tot = simpson_totals(gA, hq);
    // route B: (1/2) int (1/s')(sigma'/sigma - 2 psi'/psi)^2, with
    // psi'/psi = sigma'/(2 sigma) - m/sigma^2 from the inner-integral derivative
    std::vector<double> gB(q + 1);
    for (std::size_t j = 0; j <= q; ++j) {
        double x = xq(j);
        double ds = model.dsigma(x);
        double term = ds / sigma_q[j] -
                      2.0 * (0.5 * ds / sigma_q[j] - model.m(x) / (sigma_q[j] * sigma_q[j]));
        gB[j] = 0.5 * std::exp(-log_sprime[j]) * term * term;
    }
    auto gB_tot = simpson_totals(gB, hq);
    t.gamma_alt_ = gB_tot.richardson();

    // divergence screen: the outermost quarter of the window must be
    // negligible, otherwise gamma is flagged infinite
    double tail = 0.0, total = 0.0;
    {
        double hf = 2.0 * hq;
        for (std::size_t k = 0; k + 2 <= q; k += 2) {
            double piece = hf / 6.0 * (gA[k] + 4.0 * gA[k + 1] + gA[k + 2]);
            total += piece;
            if (k < q / 8 || k >= q - q / 8) tail += piece;
        }
    }
    t.gamma_.finite = std::isfinite(total) && total < 1e8 && tail <= 1e-6 * std::max(total, 1e-300);
    t.gamma_.value = gA_tot.richardson();

    // upper tail accumulated from the right (keeps relative precision near 1)
    std::vector<double> tail_fine(nf + 1, 0.0);
    {
        double hf = 2.0 * hq;
        for (std::size_t k = nf; k-- > 0;)
            tail_fine[k] = tail_fine[k + 1] +
                           hf / 6.0 * (pi_un[2 * k] + 4.0 * pi_un[2 * k + 1] + pi_un[2 * k + 2]);
    }

    // coarse-grid tabulation
    t.grid_.resize(n + 1);
    t.inner_.resize(n + 1);
    t.psi2_.resize(n + 1);
    t.log_psi2_.resize(n + 1);
    t.s_.resize(n + 1);
    t.pi_cdf_.resize(n + 1);
    t.pi_tail_.resize(n + 1);
    t.v_.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        std::size_t j = 4 * static_cast<std::size_t>(i);
        t.grid_[i] = xq(j);
        t.inner_[i] = inner[j];
        t.log_psi2_[i] = log_lambda + log_sigma_q[j] - inner[j];
        t.psi2_[i] = std::exp(t.log_psi2_[i]);
        t.s_[i] = s_fine[2 * static_cast<std::size_t>(i)];
        t.pi_cdf_[i] = pi_cum[2 * static_cast<std::size_t>(i)] / lambda_un;
        t.pi_tail_[i] = tail_fine[2 * static_cast<std::size_t>(i)] / lambda_un;
        t.v_[i] = v_cum[2 * static_cast<std::size_t>(i)] - v0;
    }
    return t;
}

double MeasureTable::interp(const std::vector<double>& values, double x) const {
    if (x <= grid_.front()) return values.front();
    if (x >= grid_.back()) return values.back();
    double u = (x - grid_.front()) / h_;
    auto i = static_cast<std::size_t>(u);
    if (i >= values.size() - 1) i = values.size() - 2;
    double w = u - static_cast<double>(i);
    double a = values[i], b = values[i + 1];
    if (std::isinf(a) || std::isinf(b)) return w < 0.5 ? a : b;
    return a + w * (b - a);
}

double MeasureTable::pi_cdf_at(double x) const { return interp(pi_cdf_, x); }

// cubic Hermite on the coarse grid; the slope inner'(x) = 2m/sigma^2 is
// known exactly, which buys two orders of accuracy over linear interpolation
double MeasureTable::interp_inner(double x) const {
    if (x <= grid_.front()) return inner_.front();
    if (x >= grid_.back()) return inner_.back();
    double u = (x - grid_.front()) / h_;
    auto i = static_cast<std::size_t>(u);
    if (i >= inner_.size() - 1) i = inner_.size() - 2;
    double w = u - static_cast<double>(i);
    auto slope = [&](double y) {
        double s = model_->sigma(y);
        return 2.0 * model_->m(y) / (s * s);
    };
    double p0 = inner_[i], p1 = inner_[i + 1];
    double m0 = h_ * slope(grid_[i]), m1 = h_ * slope(grid_[i + 1]);
    double w2 = w * w, w3 = w2 * w;
    return (2 * w3 - 3 * w2 + 1) * p0 + (w3 - 2 * w2 + w) * m0 + (-2 * w3 + 3 * w2) * p1 +
           (w3 - w2) * m1;
}

double MeasureTable::pi_pdf_at(double x) const {
    return std::exp(-(std::log(lambda_) + std::log(model_->sigma(x)) - interp_inner(x)));
}

double MeasureTable::scale_at(double x) const {
    if (x <= grid_.front()) return s_.front();
    if (x >= grid_.back()) return s_.back();
    double u = (x - grid_.front()) / h_;
    auto i = static_cast<std::size_t>(u);
    if (i >= s_.size() - 1) i = s_.size() - 2;
    if (std::isinf(s_[i]) || std::isinf(s_[i + 1])) return interp(s_, x);
    // cubic Hermite with the exact slope s' = exp(ln s')
    double w = u - static_cast<double>(i);
    double p0 = s_[i], p1 = s_[i + 1];
    double m0 = h_ * std::exp(log_scale_deriv_at(grid_[i]));
    double m1 = h_ * std::exp(log_scale_deriv_at(grid_[i + 1]));
    if (!std::isfinite(m0) || !std::isfinite(m1)) return interp(s_, x);
    double w2 = w * w, w3 = w2 * w;
    return (2 * w3 - 3 * w2 + 1) * p0 + (w3 - 2 * w2 + w) * m0 + (-2 * w3 + 3 * w2) * p1 +
           (w3 - w2) * m1;
}

double MeasureTable::log_scale_deriv_at(double x) const {
    return std::log(lambda_) - std::log(model_->sigma(x)) - interp_inner(x);
}

double MeasureTable::sharp_scale_at(double x) const {
    // ds_sharp = dmu = 2 psi^{-2} dx, anchored at s_sharp(0) = 0
    return 2.0 * (pi_cdf_at(x) - pi_cdf_at(0.0));
}

double MeasureTable::total_sharp_scale_mass() const {
    return 2.0 * (pi_cdf_.back() - pi_cdf_.front());
}

double MeasureTable::total_speed_mass() const { return total_sharp_scale_mass(); }

double MeasureTable::escape_threshold(double tail_mass) const {
    double hi = grid_.back(), lo = grid_.front();
    for (std::size_t i = 0; i < pi_cdf_.size(); ++i)
        if (pi_cdf_[i] >= 1.0 - tail_mass) {
            hi = grid_[i];
            break;
        }
    for (std::size_t i = pi_cdf_.size(); i-- > 0;)
        if (pi_cdf_[i] <= tail_mass) {
            lo = grid_[i];
            break;
        }
    return 1.5 * std::max(std::fabs(lo), std::fabs(hi));
}

double MeasureTable::pi_quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw measures_error("quantile argument outside (0,1)");
    auto it = std::lower_bound(pi_cdf_.begin(), pi_cdf_.end(), u);
    if (it == pi_cdf_.begin()) return grid_.front();
    if (it == pi_cdf_.end()) return grid_.back();
    std::size_t i = static_cast<std::size_t>(it - pi_cdf_.begin());
    double c0 = pi_cdf_[i - 1], c1 = pi_cdf_[i];
    double w = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
    return grid_[i - 1] + w * h_;
}

FocusingRate gamma_quadrature(const MeasureTable& table) {
    FocusingRate g = table.gamma();
    if (g.finite) {
        double rel = std::fabs(g.value - table.gamma_alt()) /
                     std::max({std::fabs(g.value), std::fabs(table.gamma_alt()), 1e-300});
        if (rel > 1e-6)
            throw measures_error("gamma quadrature routes disagree beyond 1e-6 relative");
    }
    return g;
}

BoundaryReport boundary_classification(const MeasureTable& table) {
    BoundaryReport rep;
    const auto& grid = table.grid();
    const auto& logp2 = table.log_psi2();
    const int n = table.n_grid();
    const int c = n / 2;
    const double h = grid[1] - grid[0];

    auto side = [&](int sgn) {
        BoundarySideReport out;
        for (double frac : {0.25, 0.5, 1.0}) {
            int kmax = static_cast<int>(frac * c);
            // log s values along this side, reused from the table branches
            auto log_s_at = [&](int k) {
                return sgn > 0 ? table.log_s_pos_branch(k) : table.log_s_neg_branch(k);
            };
            double log_sW = log_s_at(kmax);
            double acc = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < kmax; ++k) {
                auto g_at = [&](int kk) {
                    int idx = c + sgn * kk;
                    double ls = log_s_at(kk);
                    double diff = (kk == 0)
                                      ? log_sW
                                      : (ls >= log_sW ? -std::numeric_limits<double>::infinity()
                                                      : log_sW + std::log1p(-std::exp(ls - log_sW)));
                    return std::log(2.0) - logp2[idx] + diff;
                };
                double piece = std::log(h / 2.0) + log_add(g_at(k), g_at(k + 1));
                acc = log_add(acc, piece);
            }
            out.window.push_back(frac * table.window());
            out.log_double_integral.push_back(acc);
        }
        out.non_entrance = out.log_double_integral[2] > std::log(1e4) &&
                           out.log_double_integral[2] > out.log_double_integral[1] &&
                           out.log_double_integral[1] > out.log_double_integral[0];
        double w = table.window();
        double xw = sgn * w, xh = sgn * w / 2.0;
        out.sharp_scale_tail =
            std::fabs(table.sharp_scale_at(xw) - table.sharp_scale_at(xh));
        return out;
    };
    rep.plus = side(+1);
    rep.minus = side(-1);
    return rep;
}

GapReport spectral_gap_bound(const MeasureTable& table) {
    GapReport rep;
    FocusingRate g = gamma_quadrature(table);
    rep.cond_gamma_finite = g.finite;
    rep.gamma = g.value;

    const auto& grid = table.grid();
    const int n = table.n_grid();
    const double h = grid[1] - grid[0];
    const auto& model = table.model();

    // Pi-weighted Simpson sums on the coarse grid with midpoint evaluations
    auto pi_integral = [&](auto&& f) {
        double acc = 0.0, tail = 0.0;
        for (int i = 0; i < n; ++i) {
            double a = grid[i], b = grid[i + 1], m = 0.5 * (a + b);
            double piece = h / 6.0 *
                           (f(a) * table.pi_pdf_at(a) + 4.0 * f(m) * table.pi_pdf_at(m) +
                            f(b) * table.pi_pdf_at(b));
            acc += piece;
            if (i < n / 8 || i >= n - n / 8) tail += std::fabs(piece);
        }
        return std::pair<double, double>(acc, tail);
    };

    auto v_at = [&](double x) { return table.v_at(x); };
    auto [v2, v2_tail] = pi_integral([&](double x) { double v = v_at(x); return v * v; });
    auto [s2, s2_tail] =
        pi_integral([&](double x) { double s = model.sigma(x); return s * s; });
    rep.cond_v_square_integrable = v2_tail <= 1e-6 * std::max(v2, 1e-300);
    rep.cond_sigma_square_integrable = s2_tail <= 1e-6 * std::max(s2, 1e-300);

    auto [mean_v, mv_tail] = pi_integral(v_at);
    (void)mv_tail;
    rep.beta_shift = -mean_v;
    auto [var_shifted, vt] = pi_integral([&](double x) {
        double u = v_at(x) + rep.beta_shift;
        return u * u;
    });
    (void)vt;
    if (!(var_shifted > 0.0)) throw measures_error("degenerate trial function variance");
    rep.alpha_norm = 1.0 / std::sqrt(var_shifted);

    auto [fm, fmt] =
        pi_integral([&](double x) { return rep.alpha_norm * (v_at(x) + rep.beta_shift); });
    (void)fmt;
    rep.trial_mean = fm;
    auto [fv, fvt] = pi_integral([&](double x) {
        double u = rep.alpha_norm * (v_at(x) + rep.beta_shift);
        return u * u;
    });
    (void)fvt;
    rep.trial_variance = fv;

    // (1/2) int (F')^2 / s' dx with F' = alpha / sigma
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = grid[i], b = grid[i + 1], m = 0.5 * (a + b);
        auto f = [&](double x) {
            double fp = rep.alpha_norm / model.sigma(x);
            return 0.5 * fp * fp * std::exp(-table.log_scale_deriv_at(x));
        };
        acc += h / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    }
    rep.rayleigh_of_F = acc;

    rep.bound_asserted = rep.cond_gamma_finite && rep.cond_v_square_integrable &&
                         rep.cond_sigma_square_integrable &&
                         std::fabs(rep.trial_mean) <= 1e-8 &&
                         std::fabs(rep.trial_variance - 1.0) <= 1e-8;
    return rep;
}

double rayleigh_quotient(const MeasureTable& table, const CoefficientFunction& f) {
    const auto& grid = table.grid();
    const int n = table.n_grid();
    const double h = grid[1] - grid[0];

    double mean = 0.0, second = 0.0, dirichlet = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = grid[i], b = grid[i + 1], m = 0.5 * (a + b);
        auto w = [&](double x) { return table.pi_pdf_at(x); };
        mean += h / 6.0 * (f(a) * w(a) + 4.0 * f(m) * w(m) + f(b) * w(b));
        second += h / 6.0 * (f(a) * f(a) * w(a) + 4.0 * f(m) * f(m) * w(m) + f(b) * f(b) * w(b));
        auto d = [&](double x) {
            double fp = f.deriv(x, 1);
            return 0.5 * fp * fp * std::exp(-table.log_scale_deriv_at(x));
        };
        dirichlet += h / 6.0 * (d(a) + 4.0 * d(m) + d(b));
    }
    double var = second - mean * mean;
    if (!(var > 1e-8 * std::max({1.0, mean * mean, second})))
        throw measures_error("trial function has (numerically) zero variance under Pi");
    return dirichlet / var;
}

} // namespace ergoflow
