// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Every tolerance is pinned here, next to the check it guards.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ergoflow/cli.hpp"
#include "ergoflow/estimators.hpp"
#include "ergoflow/oracle.hpp"
#include "ergoflow/pullback.hpp"

using namespace ergoflow;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d  %s: %s\n", pass ? "PASS" : "FAIL", idx, name,
                detail.c_str());
    if (!pass) ++g_failures;
}

DiffusionModel validated(const std::string& kind, std::map<std::string, double> params) {
    ModelSpec s;
    s.kind = kind;
    s.params = std::move(params);
    auto model = make_model(s);
    validate_recurrence(model);
    return model;
}

std::string g17(double v) { return format_g17(v); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// 1. Invariant-law sampling: 5000 pullback samples at T = 10, dt = 1e-3;
//    one-sample KS below the 1% critical value 0.023, for OU against the
//    exact Normal(0, 1/2) law and for tanh_drift against quadrature Pi.
void criterion_1() {
    const double dt = 1e-3, T = 10.0, crit = 0.023;
    const std::size_t n = 5000;
    auto sample = [&](const DiffusionModel& model) {
        std::vector<double> xs;
        xs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            NoisePath path(1 + i, dt);
            xs.push_back(pullback_map(model, path, T, {0.0})[0]);
        }
        return xs;
    };
    auto ou = validated("ou", {{"beta", 1.0}});
    const double ks_ou =
        ks_distance(sample(ou), [](double x) { return std_normal_cdf(x / std::sqrt(0.5)); });
    auto th = validated("tanh_drift", {{"kappa", 1.0}});
    auto table = MeasureTable::build(th);
    const double ks_th =
        ks_distance(sample(th), [&](double x) { return table.pi_cdf_at(x); });
    report(1, "invariant-law sampling (KS, 1% critical value)",
           ks_ou < crit && ks_th < crit,
           "KS(ou) = " + g17(ks_ou) + ", KS(tanh_drift) = " + g17(ks_th) + ", bound " +
               g17(crit));
}

// ---------------------------------------------------------------------------
// 2. Focusing rate: 50-seed mean two-point slope within 3% of -1 for OU and
//    within 10% of -2/3 for tanh_drift (a = -1, b = 1, T = 20).
void criterion_2() {
    auto mean_slope = [](const DiffusionModel& model, const MeasureTable& table) {
        double sum = 0.0;
        for (int k = 0; k < 50; ++k)
            sum += two_point_rate(model, table, 1 + k, -1.0, 1.0, 20.0, 1e-3).value;
        return sum / 50.0;
    };
    auto ou = validated("ou", {{"beta", 1.0}});
    auto t_ou = MeasureTable::build(ou);
    const double s_ou = mean_slope(ou, t_ou);
    auto th = validated("tanh_drift", {{"kappa", 1.0}});
    auto t_th = MeasureTable::build(th);
    const double s_th = mean_slope(th, t_th);
    const bool ok_ou = std::fabs(s_ou + 1.0) < 0.03;
    const bool ok_th = std::fabs(s_th + 2.0 / 3.0) < 0.10 * (2.0 / 3.0);
    report(2, "two-point focusing rate (50-seed mean)", ok_ou && ok_th,
           "slope(ou) = " + g17(s_ou) + " vs -1 (3%), slope(tanh_drift) = " + g17(s_th) +
               " vs -2/3 (10%)");
}

// ---------------------------------------------------------------------------
// 3. Gamma consistency triangle on all catalog models: Birkhoff average
//    within 3 std errors of quadrature, and the two quadrature forms agree
//    to 1e-6 relative.
void criterion_3() {
    struct Case {
        const char* kind;
        std::map<std::string, double> params;
        double T;
    };
    std::vector<Case> cases{{"ou", {{"beta", 1.0}}, 1000.0},
                            {"tanh_drift", {{"kappa", 1.0}}, 2000.0},
                            {"double_well", {{"a", 1.0}, {"b", 1.0}}, 1000.0}};
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        auto model = validated(c.kind, c.params);
        auto table = MeasureTable::build(model);
        const double gq = table.gamma().value;
        const double rel = std::fabs(gq - table.gamma_alt()) / gq;
        auto r = gamma_birkhoff(model, 42, c.T, std::ceil(10.0 / gq), 1e-3);
        const bool pass = rel <= 1e-6 && std::fabs(r.value - gq) <= 3.0 * r.std_error;
        ok = ok && pass;
        detail += std::string(c.kind) + ": |birkhoff-quad| = " + g17(std::fabs(r.value - gq)) +
                  " vs 3se = " + g17(3.0 * r.std_error) + ", forms rel = " + g17(rel) + "; ";
    }
    report(3, "gamma consistency triangle", ok, detail);
}

// ---------------------------------------------------------------------------
// 4. Exit probabilities at 10 quantile probes per model, n = 1e4 sharp paths
//    each, within 3 binomial std errors of pi_cdf; undecided fraction < 1%.
void criterion_4() {
    struct Case {
        const char* kind;
        std::map<std::string, double> params;
        double horizon;
    };
    std::vector<Case> cases{{"ou", {{"beta", 1.0}}, 50.0},
                            {"tanh_drift", {{"kappa", 1.0}}, 75.0},
                            {"double_well", {{"a", 1.0}, {"b", 1.0}}, 30.0}};
    const std::uint64_t n = 10000;
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        auto model = validated(c.kind, c.params);
        auto table = MeasureTable::build(model);
        const double thr = table.escape_threshold();
        double worst_z = 0.0, worst_undecided = 0.0;
        for (int i = 0; i < 10; ++i) {
            const double x0 = table.pi_quantile(0.05 + 0.1 * i);
            auto r = exit_probability(model, x0, n, c.horizon, thr, 1e-3,
                                      1 + static_cast<std::uint64_t>(i) * n);
            const double z = std::fabs(r.value - table.pi_cdf_at(x0)) /
                             std::max(r.std_error, 1e-300);
            worst_z = std::max(worst_z, z);
            worst_undecided = std::max(worst_undecided, r.diagnostics.at("undecided_fraction"));
        }
        const bool pass = worst_z <= 3.0 && worst_undecided < 0.01;
        ok = ok && pass;
        detail += std::string(c.kind) + ": max|z| = " + g17(worst_z) +
                  ", max undecided = " + g17(worst_undecided) + "; ";
    }
    report(4, "exit probabilities vs invariant CDF", ok, detail);
}

// ---------------------------------------------------------------------------
// 5. Inverse-flow identity on the alive domain: max over probes of
//    |X_down_T(X_sharp_T(x)) - x| < 1e-3 at T = 1, dt = 1e-3, 20 seeds,
//    all models (double-well probes inside the sharp basin (-1, 1)).
void criterion_5() {
    struct Case {
        const char* kind;
        std::map<std::string, double> params;
        std::vector<double> probes;
    };
    std::vector<Case> cases{
        {"ou", {{"beta", 1.0}}, {-1.0, -0.3, 0.0, 0.5, 1.0}},
        {"tanh_drift", {{"kappa", 1.0}}, {-1.0, -0.3, 0.0, 0.5, 1.0}},
        {"double_well", {{"a", 1.0}, {"b", 1.0}}, {-0.6, -0.3, 0.0, 0.3, 0.6}}};
    bool ok = true;
    double worst = 0.0;
    std::size_t skipped = 0;
    for (const auto& c : cases) {
        auto model = validated(c.kind, c.params);
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            NoisePath path(seed, 1e-3);
            Ensemble sharp(model, c.probes);
            ForwardSeq noise(path);
            step_sharp(sharp, noise, 1000, 6.0);
            auto back = pullback_map(model, path, 1.0, sharp.positions());
            for (std::size_t j = 0; j < c.probes.size(); ++j) {
                if (sharp.members()[j].status != MemberStatus::alive) {
                    ++skipped; // identity undefined outside D_T
                    continue;
                }
                worst = std::max(worst, std::fabs(back[j] - c.probes[j]));
            }
        }
    }
    ok = worst < 1e-3;
    report(5, "inverse-flow identity", ok,
           "max residual = " + g17(worst) + " (bound 1e-3), exploded probes skipped: " +
               std::to_string(skipped) + " of 300");
}

// ---------------------------------------------------------------------------
// 6. Stagnation-point triple agreement on OU, 20 seeds: escape-sign
//    bisection, reversed-noise pullback, and the forward-from-(-T) pullback
//    (identified via the rotated path) agree within 1e-3 on a common path.
void criterion_6() {
    auto model = validated("ou", {{"beta", 1.0}});
    auto schedule = default_t_schedule(1.0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        NoisePath path(seed, 1e-3);
        const double via_bisect = stagnation_bisect(model, path, 5.0, -8.0, 8.0, 1e-6, 12.0);
        auto via_rev = sample_xinf(model, path, {-5.0, 0.0, 5.0}, schedule, 1e-4);
        NoisePath rot = rotated_path(path);
        const double via_fwd = pullback_process(model, rot, via_rev.T_used, 0.0);
        worst = std::max({worst, std::fabs(via_bisect - via_rev.value),
                          std::fabs(via_bisect - via_fwd), std::fabs(via_rev.value - via_fwd)});
    }
    report(6, "stagnation-point triple agreement", worst < 1e-3,
           "max pairwise gap = " + g17(worst) + " (bound 1e-3)");
}

// ---------------------------------------------------------------------------
// 7. Invariant-point identity at t = 1 on OU, 20 seeds, residual < 5e-3;
//    plus marginal stationarity: two-sample KS between xinf(b) and
//    xinf(theta_1 b) over disjoint seed sets below the 1% critical value.
void criterion_7() {
    auto model = validated("ou", {{"beta", 1.0}});
    auto schedule = default_t_schedule(1.0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        NoisePath path(seed, 1e-3);
        auto chk = invariant_point_check(model, path, 1.0, {-5.0, 0.0, 5.0}, schedule, 1e-4,
                                         12.0);
        worst = std::max(worst, chk.residual);
    }
    const std::size_t n = 400;
    std::vector<double> at0, at1;
    for (std::size_t i = 0; i < n; ++i) {
        NoisePath p0(20000 + i, 1e-3);
        at0.push_back(sample_xinf_at(model, p0, 0.0, {-5.0, 0.0, 5.0}, schedule, 1e-3).value);
        NoisePath p1(30000 + i, 1e-3);
        at1.push_back(sample_xinf_at(model, p1, 1.0, {-5.0, 0.0, 5.0}, schedule, 1e-3).value);
    }
    const double ks = ks_distance_two_sample(at0, at1);
    const double crit = ks_two_sample_critical_1pct(n, n);
    report(7, "invariant-point identity + marginal stationarity",
           worst < 5e-3 && ks < crit,
           "max residual = " + g17(worst) + " (bound 5e-3), shift KS = " + g17(ks) +
               " vs critical " + g17(crit));
}

// ---------------------------------------------------------------------------
// 8. Spectral gap bound: rayleigh_of_F <= gamma + 1e-6 wherever conditions
//    (a)-(c) hold; equality to 1e-6 for OU; strict inequality for tanh.
void criterion_8() {
    bool ok = true;
    std::string detail;
    auto check = [&](const char* kind, std::map<std::string, double> params) {
        auto model = validated(kind, std::move(params));
        auto table = MeasureTable::build(model);
        auto gap = spectral_gap_bound(table);
        const bool bound = !gap.bound_asserted || gap.rayleigh_of_F <= gap.gamma + 1e-6;
        ok = ok && gap.bound_asserted && bound;
        detail += std::string(kind) + ": rayleigh = " + g17(gap.rayleigh_of_F) +
                  ", gamma = " + g17(gap.gamma) + "; ";
        return gap;
    };
    auto ou = check("ou", {{"beta", 1.0}});
    ok = ok && std::fabs(ou.rayleigh_of_F - ou.gamma) <= 1e-6; // affine drift: equality
    auto th = check("tanh_drift", {{"kappa", 1.0}});
    ok = ok && th.rayleigh_of_F < th.gamma; // strictly below
    check("double_well", {{"a", 1.0}, {"b", 1.0}});
    report(8, "spectral gap bound (Rayleigh quotient vs gamma)", ok, detail);
}

// ---------------------------------------------------------------------------
// 9. Integrator order: strong RMS error vs the exact OU flow at T = 1 fits
//    order >= 0.9 over dt in {4e-3, 2e-3, 1e-3}, 40 seeds.
void criterion_9() {
    auto model = validated("ou", {{"beta", 1.0}});
    OuParams p{1.0, 1.0};
    std::vector<double> dts{4e-3, 2e-3, 1e-3}, rms;
    for (double dt : dts) {
        double acc = 0.0;
        for (int k = 0; k < 40; ++k) {
            NoisePath path(500 + k, dt);
            Ensemble e(model, {1.0});
            ForwardSeq noise(path);
            step_forward(e, noise, static_cast<std::uint64_t>(to_grid(1.0, dt)));
            const double err = e.members()[0].x - ou_exact_flow(p, path, 1.0, 1.0);
            acc += err * err;
        }
        rms.push_back(std::sqrt(acc / 40.0));
    }
    const double order = 0.5 * (std::log2(rms[0] / rms[1]) + std::log2(rms[1] / rms[2]));
    report(9, "strong integrator order vs exact OU flow", order >= 0.9,
           "fitted order = " + g17(order) + " (needs >= 0.9), rms = {" + g17(rms[0]) + ", " +
               g17(rms[1]) + ", " + g17(rms[2]) + "}");
}

// ---------------------------------------------------------------------------
// 10. SPDE residual: for OU and the nonlinear observable f(x) = x^2 the
//     final RMS residual decays with fitted order 0.5 +- 0.15 in dt (the
//     leading term is the martingale sum of (1/2) f'' sigma^2 (db^2 - dt);
//     200 seeds averaged to tame its chi-distributed scatter); identically
//     zero for constant f.
void criterion_10() {
    auto model = validated("ou", {{"beta", 1.0}});
    auto f = CoefficientFunction::from_expression("x*x", {});
    std::vector<double> grid{-1.0, 0.0, 1.0};
    std::vector<double> dts{4e-3, 2e-3, 1e-3}, rms;
    for (double dt : dts) {
        double acc = 0.0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            NoisePath path(77 + s, dt);
            acc += std::pow(spde_residual(model, path, f, grid, 1.0).rms.back(), 2);
        }
        rms.push_back(std::sqrt(acc / 200.0));
    }
    const double order = 0.5 * (std::log2(rms[0] / rms[1]) + std::log2(rms[1] / rms[2]));
    auto c = CoefficientFunction::from_expression("2.0", {});
    NoisePath path(77, 1e-3);
    auto rc = spde_residual(model, path, c, grid, 1.0);
    double cmax = 0.0;
    for (double v : rc.rms) cmax = std::max(cmax, v);
    report(10, "SPDE residual order and constant-observable exactness",
           std::fabs(order - 0.5) <= 0.15 && cmax == 0.0,
           "fitted order = " + g17(order) + " (0.5 +- 0.15), constant-f max = " + g17(cmax));
}

// ---------------------------------------------------------------------------
// 11. Determinism: rerunning a command with the same config and seed gives
//     byte-identical artifacts, independent of ERGOFLOW_WORKERS.
void criterion_11() {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "ergoflow_acceptance";
    fs::create_directories(dir);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool ok = true;
    std::string detail;
    auto cfg = parse_config_json("{\"n_grid\": 2048, \"seed\": 11, \"params\": {\"t\": 5}}");
    for (const char* cmd : {"analyze", "focusing", "dump-noise", "attractor"}) {
        ::setenv("ERGOFLOW_WORKERS", "1", 1);
        auto o1 = (dir / (std::string(cmd) + "_1.csv")).string();
        auto r1 = run_command(cmd, cfg, o1);
        ::setenv("ERGOFLOW_WORKERS", "8", 1);
        auto o2 = (dir / (std::string(cmd) + "_2.csv")).string();
        auto r2 = run_command(cmd, cfg, o2);
        const bool same = r1.exit_code == 0 && r2.exit_code == 0 &&
                          slurp(o1) == slurp(o2) &&
                          slurp(o1 + ".json") == slurp(o2 + ".json");
        ok = ok && same;
        if (!same) detail += std::string(cmd) + " differs; ";
    }
    if (detail.empty()) detail = "analyze/focusing/dump-noise/attractor byte-identical";
    fs::remove_all(dir);
    report(11, "byte-identical determinism across reruns and worker counts", ok, detail);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures == 0) std::printf("acceptance: all 11 criteria passed\n");
    else std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return g_failures;
}
