#include "ergoflow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ergoflow/estimators.hpp"
#include "ergoflow/measures.hpp"
#include "ergoflow/oracle.hpp"
#include "ergoflow/pullback.hpp"

namespace ergoflow {

using nlohmann::json;

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

double expect_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw config_error("config field " + path + " must be a number");
    return j.get<double>();
}

std::string expect_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw config_error("config field " + path + " must be a string");
    return j.get<std::string>();
}

std::vector<double> expect_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw config_error("config field " + path + " must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(expect_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::map<std::string, double> expect_number_map(const json& j, const std::string& path) {
    if (!j.is_object()) throw config_error("config field " + path + " must be an object");
    std::map<std::string, double> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out[it.key()] = expect_number(it.value(), path + "." + it.key());
    return out;
}

json model_echo(const ModelSpec& m) {
    json j;
    if (!m.kind.empty()) j["kind"] = m.kind;
    if (!m.sigma_expr.empty()) j["sigma"] = m.sigma_expr;
    if (!m.m_expr.empty()) j["m"] = m.m_expr;
    j["params"] = m.params;
    return j;
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["model"] = model_echo(cfg.model);
    j["dt"] = cfg.dt;
    j["window"] = cfg.window;
    j["n_grid"] = cfg.n_grid;
    j["seed"] = cfg.seed;
    if (cfg.escape_threshold) j["escape_threshold"] = *cfg.escape_threshold;
    j["params"] = cfg.params;
    j["x0"] = cfg.x0_list;
    j["dt_list"] = cfg.dt_list;
    j["f"] = cfg.f_expr;
    j["method"] = cfg.method;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open output file " + path);
    out << content;
    if (!out) throw config_error("failed writing output file " + path);
}

/// Sidecar contract: config echo, spec version, and deterministic work
/// counters in place of wall-clock timings (artifacts must be byte-identical
/// across reruns and worker counts).
void write_sidecar(const std::string& out_path, const RunConfig& cfg,
                   const std::map<std::string, double>& work, const json& extra) {
    json side;
    side["config_echo"] = config_echo(cfg);
    side["versions"] = {{"spec", "1"}};
    side["timings"] = {{"unit", "deterministic work counters"}, {"work", work}};
    for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
    write_file(out_path + ".json", side.dump(2) + "\n");
}

DiffusionModel build_validated(const RunConfig& cfg) {
    auto model = make_model(cfg.model, cfg.window);
    auto report = validate_recurrence(model, cfg.window);
    if (!model.is_positive_recurrent())
        throw config_error("model rejected: " + report.reason);
    return model;
}

double threshold_of(const RunConfig& cfg, const MeasureTable& table) {
    return cfg.escape_threshold ? *cfg.escape_threshold : table.escape_threshold();
}

std::vector<double> default_probes(const MeasureTable& table) {
    return {table.pi_quantile(0.01), table.pi_quantile(0.5), table.pi_quantile(0.99)};
}

const char* status_name(MemberStatus s) {
    switch (s) {
    case MemberStatus::escaped_plus: return "escaped_plus";
    case MemberStatus::escaped_minus: return "escaped_minus";
    default: return "alive";
    }
}

// ---------------------------------------------------------------- commands

RunResult cmd_analyze(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    auto boundary = boundary_classification(table);
    auto gap = spectral_gap_bound(table);

    std::ostringstream csv;
    csv << "x,pi_cdf,pi_tail,pi_pdf,scale,log_scale_deriv,v\n";
    const auto& grid = table.grid();
    for (std::size_t i = 0; i < grid.size(); i += 4) {
        const double x = grid[i];
        csv << format_g17(x) << ',' << format_g17(table.pi_cdf()[i]) << ','
            << format_g17(table.pi_tail()[i]) << ',' << format_g17(table.pi_pdf_at(x)) << ','
            << format_g17(table.scale()[i]) << ',' << format_g17(table.log_scale_deriv_at(x))
            << ',' << format_g17(table.v_at(x)) << '\n';
    }
    write_file(out, csv.str());

    json extra;
    extra["lambda"] = table.lambda();
    extra["gamma"] = {{"finite", table.gamma().finite}, {"value", table.gamma().value}};
    extra["gamma_alt"] = table.gamma_alt();
    extra["rayleigh_of_F"] = gap.rayleigh_of_F;
    extra["gap_bound_asserted"] = gap.bound_asserted;
    extra["escape_threshold"] = table.escape_threshold();
    extra["boundary"] = {{"plus_non_entrance", boundary.plus.non_entrance},
                         {"minus_non_entrance", boundary.minus.non_entrance},
                         {"plus_sharp_scale_tail", boundary.plus.sharp_scale_tail},
                         {"minus_sharp_scale_tail", boundary.minus.sharp_scale_tail}};
    extra["recurrence"] = model.recurrence_report().reason;
    std::map<std::string, double> work{{"table_nodes", static_cast<double>(grid.size())}};
    write_sidecar(out, cfg, work, extra);
    return {0, "analyze: lambda = " + format_g17(table.lambda())};
}

RunResult cmd_simulate(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    const auto n_paths = static_cast<std::uint64_t>(cfg.param("paths", 1.0));
    const double T = cfg.param("t", 1.0);
    const auto record_every = static_cast<std::uint64_t>(cfg.param("record_every", 100.0));
    std::vector<double> x0s = cfg.x0_list.empty() ? std::vector<double>{0.0} : cfg.x0_list;
    const auto n_steps = static_cast<std::uint64_t>(to_grid(T, cfg.dt));

    std::ostringstream csv;
    csv << "path_id,t,member_id,x,log_jac,status\n";
    double total_steps = 0.0;
    for (std::uint64_t p = 0; p < n_paths; ++p) {
        NoisePath path(cfg.seed + p, cfg.dt);
        ForwardSeq noise(path);
        Ensemble e(model, x0s);
        auto record = [&]() {
            for (std::size_t m = 0; m < e.members().size(); ++m) {
                const auto& mem = e.members()[m];
                csv << p << ',' << format_g17(e.time(cfg.dt)) << ',' << m << ','
                    << format_g17(mem.x) << ',' << format_g17(mem.log_jac) << ','
                    << status_name(mem.status) << '\n';
            }
        };
        record();
        while (e.steps_taken() < n_steps) {
            accumulate_log_jacobian(e, noise,
                                    std::min(record_every, n_steps - e.steps_taken()));
            record();
        }
        total_steps += static_cast<double>(n_steps);
    }
    write_file(out, csv.str());
    write_sidecar(out, cfg, {{"sde_steps", total_steps}}, json::object());
    return {0, "simulate: " + std::to_string(n_paths) + " path(s) to t = " + format_g17(T)};
}

RunResult cmd_focusing(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    const double a = cfg.param("a", -1.0), b = cfg.param("b", 1.0);
    const double T = cfg.param("t", 20.0);
    NoisePath path(cfg.seed, cfg.dt);
    ForwardSeq noise(path);
    double t_switch = std::numeric_limits<double>::quiet_NaN();
    auto lg = focusing_series(model, table, noise, a, b, T, &t_switch);

    std::ostringstream csv;
    csv << "t,ln_gap\n";
    for (std::size_t k = 0; k < lg.size(); ++k)
        csv << format_g17(static_cast<double>(k) * cfg.dt) << ',' << format_g17(lg[k]) << '\n';
    write_file(out, csv.str());

    NoisePath path2(cfg.seed, cfg.dt);
    ForwardSeq noise2(path2);
    auto fit = two_point_rate_on(model, table, noise2, a, b, T);
    json extra;
    extra["slope"] = fit.value;
    extra["slope_std_error"] = fit.std_error;
    extra["r_squared"] = fit.diagnostics.at("r_squared");
    extra["gamma_quadrature"] = table.gamma().value;
    if (std::isfinite(t_switch)) extra["log_jac_continuation_from"] = t_switch;
    write_sidecar(out, cfg, {{"sde_steps", 2.0 * static_cast<double>(lg.size() - 1)}}, extra);
    return {0, "focusing: slope = " + format_g17(fit.value)};
}

RunResult cmd_gamma(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    if (!table.gamma().finite) throw measures_error("gamma is not finite for this model");
    const double gq = table.gamma().value;
    const bool all = cfg.method == "all";

    json result;
    result["gamma_quadrature"] = gq;
    result["gamma_alt_form"] = table.gamma_alt();
    result["two_forms_rel_diff"] = std::fabs(gq - table.gamma_alt()) / gq;
    double work = 0.0;
    if (all || cfg.method == "birkhoff") {
        const double burn = 10.0 / gq;
        const double T = cfg.param("t", 1000.0);
        auto r = gamma_birkhoff(model, cfg.seed, T, burn, cfg.dt);
        result["birkhoff"] = {{"value", r.value},
                              {"std_error", r.std_error},
                              {"n", r.n},
                              {"burn_in", burn},
                              {"within_3_std_errors", std::fabs(r.value - gq) <= 3.0 * r.std_error}};
        work += static_cast<double>(r.n);
    }
    if (all || cfg.method == "two-point") {
        const double T = cfg.param("t_two_point", std::max(20.0, 20.0 / gq));
        const double a = cfg.param("a", -1.0), b = cfg.param("b", 1.0);
        auto r = two_point_rate(model, table, cfg.seed, a, b, T, cfg.dt);
        result["two_point"] = {{"slope", r.value},
                               {"std_error", r.std_error},
                               {"r_squared", r.diagnostics.at("r_squared")},
                               {"within_10_percent", std::fabs(r.value + gq) <= 0.1 * gq}};
        work += 2.0 * T / cfg.dt;
    }
    write_file(out, result.dump(2) + "\n");
    write_sidecar(out, cfg, {{"sde_steps", work}}, json::object());
    return {0, "gamma: quadrature = " + format_g17(gq)};
}

RunResult cmd_exit_prob(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    const double thr = threshold_of(cfg, table);
    const auto n = static_cast<std::uint64_t>(cfg.param("n", 10000.0));
    const double gq = table.gamma().finite ? table.gamma().value : 1.0;
    const double horizon = cfg.param("t", std::max(20.0, 50.0 / gq));
    std::vector<double> probes = cfg.x0_list;
    if (probes.empty())
        for (int i = 0; i < 10; ++i) probes.push_back(table.pi_quantile(0.05 + 0.1 * i));

    std::ostringstream csv;
    csv << "x0,estimate,stderr,pi_cdf,z_score\n";
    json diag = json::array();
    double work = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        auto r = exit_probability(model, probes[i], n, horizon, thr, cfg.dt,
                                  cfg.seed + i * n);
        const double target = table.pi_cdf_at(probes[i]);
        const double se = std::max(r.std_error, 1e-300);
        csv << format_g17(probes[i]) << ',' << format_g17(r.value) << ','
            << format_g17(r.std_error) << ',' << format_g17(target) << ','
            << format_g17((r.value - target) / se) << '\n';
        diag.push_back({{"x0", probes[i]},
                        {"undecided_fraction", r.diagnostics.at("undecided_fraction")}});
        work += static_cast<double>(n);
    }
    write_file(out, csv.str());
    json extra;
    extra["horizon"] = horizon;
    extra["escape_threshold"] = thr;
    extra["per_probe"] = diag;
    write_sidecar(out, cfg, {{"sharp_paths", work}}, extra);
    return {0, "exit-prob: " + std::to_string(probes.size()) + " probes, n = " + std::to_string(n)};
}

RunResult cmd_sample_invariant(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    if (!table.gamma().finite) throw measures_error("gamma is not finite for this model");
    const auto n = static_cast<std::uint64_t>(cfg.param("n", 5000.0));
    const double tol = cfg.param("tol", 1e-4);
    auto schedule = default_t_schedule(table.gamma().value);
    std::vector<double> probes = cfg.x0_list.empty() ? default_probes(table) : cfg.x0_list;

    std::ostringstream csv;
    csv << "seed,xinf,T_used,spread\n";
    std::uint64_t failed = 0;
    double work = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        NoisePath path(cfg.seed + i, cfg.dt);
        auto r = sample_xinf(model, path, probes, schedule, tol);
        if (!r.converged) ++failed;
        csv << (cfg.seed + i) << ',' << format_g17(r.value) << ',' << format_g17(r.T_used)
            << ',' << format_g17(r.spread) << '\n';
        for (double T : r.horizons) work += static_cast<double>(probes.size()) * T / cfg.dt;
    }
    write_file(out, csv.str());
    json extra;
    extra["non_converged"] = failed;
    extra["t_schedule"] = schedule;
    extra["tolerance"] = tol;
    write_sidecar(out, cfg, {{"sde_steps", work}}, extra);
    if (failed > 0)
        return {3, "sample-invariant: " + std::to_string(failed) + " of " + std::to_string(n) +
                       " samples did not converge"};
    return {0, "sample-invariant: " + std::to_string(n) + " samples"};
}

RunResult cmd_attractor(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    if (!table.gamma().finite) throw measures_error("gamma is not finite for this model");
    const double gq = table.gamma().value;
    auto schedule = default_t_schedule(gq);
    std::vector<double> probes = cfg.x0_list.empty() ? default_probes(table) : cfg.x0_list;
    NoisePath path(cfg.seed, cfg.dt);

    std::ostringstream csv;
    csv << "T,x0,value,method\n";
    double work = 0.0;
    for (double T : schedule) {
        auto vals = pullback_map(model, path, T, probes);
        for (std::size_t j = 0; j < probes.size(); ++j)
            csv << format_g17(T) << ',' << format_g17(probes[j]) << ',' << format_g17(vals[j])
                << ",reversed\n";
        for (double x0 : probes)
            csv << format_g17(T) << ',' << format_g17(x0) << ','
                << format_g17(pullback_process(model, path, T, x0)) << ",forward_from_minus_T\n";
        work += 2.0 * static_cast<double>(probes.size()) * T / cfg.dt;
    }
    write_file(out, csv.str());

    json extra;
    extra["note"] = "forward_from_minus_T uses the negative side of the two-sided path; "
                    "it matches the reversed method on the rotated path, not row-by-row here";
    const double thr = threshold_of(cfg, table);
    try {
        const double horizon = std::max(5.0, 10.0 / gq);
        const double lo = table.pi_quantile(1e-4), hi = table.pi_quantile(1.0 - 1e-4);
        extra["bisection"] = stagnation_bisect(model, path, horizon, lo, hi,
                                               cfg.param("tol", 1e-6), thr);
    } catch (const pullback_error& e) {
        extra["bisection_error"] = e.what();
    }
    write_sidecar(out, cfg, {{"sde_steps", work}}, extra);
    return {0, "attractor: " + std::to_string(schedule.size()) + " horizons"};
}

RunResult cmd_gap(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto table = MeasureTable::build(model, cfg.window, cfg.n_grid);
    auto gap = spectral_gap_bound(table);
    json result;
    result["gamma"] = gap.gamma;
    result["rayleigh_of_F"] = gap.rayleigh_of_F;
    result["slack"] = gap.gamma - gap.rayleigh_of_F;
    result["bound_asserted"] = gap.bound_asserted;
    result["conditions"] = {{"v_square_integrable", gap.cond_v_square_integrable},
                            {"sigma_square_integrable", gap.cond_sigma_square_integrable},
                            {"gamma_finite", gap.cond_gamma_finite}};
    result["trial_function"] = {{"beta_shift", gap.beta_shift},
                                {"alpha_norm", gap.alpha_norm},
                                {"pi_mean", gap.trial_mean},
                                {"pi_variance", gap.trial_variance}};
    write_file(out, result.dump(2) + "\n");
    write_sidecar(out, cfg, {{"table_nodes", static_cast<double>(table.grid().size())}},
                  json::object());
    return {0, "gap: rayleigh = " + format_g17(gap.rayleigh_of_F) +
                   " <= gamma = " + format_g17(gap.gamma)};
}

RunResult cmd_spde_residual(const RunConfig& cfg, const std::string& out) {
    auto model = build_validated(cfg);
    auto f = CoefficientFunction::from_expression(cfg.f_expr, cfg.model.params);
    std::vector<double> grid =
        cfg.x0_list.empty() ? std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0} : cfg.x0_list;
    const double T = cfg.param("t", 1.0);
    NoisePath path(cfg.seed, cfg.dt);
    auto r = spde_residual(model, path, f, grid, T);

    std::ostringstream csv;
    csv << "t,rms\n";
    for (std::size_t k = 0; k < r.t.size(); ++k)
        csv << format_g17(r.t[k]) << ',' << format_g17(r.rms[k]) << '\n';
    write_file(out, csv.str());
    json extra;
    extra["final_rms"] = r.rms.back();
    extra["x_grid"] = grid;
    const double n = T / cfg.dt;
    write_sidecar(out, cfg,
                  {{"sde_steps", 3.0 * static_cast<double>(grid.size()) * n * (n + 1.0) / 2.0}},
                  extra);
    return {0, "spde-residual: final RMS = " + format_g17(r.rms.back())};
}

RunResult cmd_oracle_check(const RunConfig& cfg, const std::string& out) {
    const double beta = cfg.param("beta", 1.0);
    const double sigma0 = cfg.param("sigma0", 1.0);
    const auto n_seeds = static_cast<std::uint64_t>(cfg.param("seeds", 40.0));
    const double T = cfg.param("t", 1.0), x0 = cfg.param("x0", 1.0);
    std::vector<double> dts =
        cfg.dt_list.empty() ? std::vector<double>{4e-3, 2e-3, 1e-3} : cfg.dt_list;

    ModelSpec spec;
    spec.kind = "ou";
    spec.params = {{"beta", beta}, {"sigma0", sigma0}};
    auto model = make_model(spec, cfg.window);
    validate_recurrence(model, cfg.window);
    OuParams p{beta, sigma0};

    std::ostringstream csv;
    csv << "dt,rms_strong_error\n";
    std::vector<double> rms;
    double work = 0.0;
    for (double dt : dts) {
        double acc = 0.0;
        for (std::uint64_t k = 0; k < n_seeds; ++k) {
            NoisePath path(cfg.seed + k, dt);
            Ensemble e(model, {x0});
            ForwardSeq noise(path);
            step_forward(e, noise, static_cast<std::uint64_t>(to_grid(T, dt)));
            const double err = e.members()[0].x - ou_exact_flow(p, path, x0, T);
            acc += err * err;
            work += T / dt;
        }
        rms.push_back(std::sqrt(acc / static_cast<double>(n_seeds)));
        csv << format_g17(dt) << ',' << format_g17(rms.back()) << '\n';
    }
    write_file(out, csv.str());
    // least-squares slope of ln rms against ln dt
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double lx = std::log(dts[i]), ly = std::log(rms[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto m = static_cast<double>(dts.size());
    const double order = (sxy - sx * sy / m) / (sxx - sx * sx / m);
    json extra;
    extra["fitted_order"] = order;
    write_sidecar(out, cfg, {{"sde_steps", work}}, extra);
    return {0, "oracle-check: fitted strong order = " + format_g17(order)};
}

RunResult cmd_dump_noise(const RunConfig& cfg, const std::string& out) {
    const auto n = static_cast<std::uint64_t>(cfg.param("n", 1000.0));
    NoisePath path(cfg.seed, cfg.dt);
    std::ostringstream csv;
    csv << "index,side,increment\n";
    for (std::uint64_t i = 0; i < n; ++i)
        csv << i << ",positive," << format_g17(path.increment(Side::positive, i)) << '\n';
    for (std::uint64_t i = 0; i < n; ++i)
        csv << i << ",negative," << format_g17(path.increment(Side::negative, i)) << '\n';
    write_file(out, csv.str());
    write_sidecar(out, cfg, {{"noise_draws", 2.0 * static_cast<double>(n)}}, json::object());
    return {0, "dump-noise: " + std::to_string(2 * n) + " increments"};
}

} // namespace

RunConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");

    RunConfig cfg;
    cfg.model.kind = "ou";
    cfg.model.params = {{"beta", 1.0}};
    static const std::vector<std::string> known{"model", "dt",      "window", "n_grid", "seed",
                                                "escape_threshold", "params", "x0",     "dt_list",
                                                "f",     "method"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw config_error("unknown config field: " + it.key());

    if (j.contains("model")) {
        const auto& m = j["model"];
        if (!m.is_object()) throw config_error("config field model must be an object");
        cfg.model = ModelSpec{};
        for (auto it = m.begin(); it != m.end(); ++it) {
            const std::string& k = it.key();
            if (k == "kind") cfg.model.kind = expect_string(it.value(), "model.kind");
            else if (k == "sigma") cfg.model.sigma_expr = expect_string(it.value(), "model.sigma");
            else if (k == "m") cfg.model.m_expr = expect_string(it.value(), "model.m");
            else if (k == "params") cfg.model.params = expect_number_map(it.value(), "model.params");
            else throw config_error("unknown config field: model." + k);
        }
        if (cfg.model.kind.empty() && cfg.model.sigma_expr.empty())
            throw config_error("config field model needs a kind or sigma/m expressions");
    }
    if (j.contains("dt")) cfg.dt = expect_number(j["dt"], "dt");
    if (!(cfg.dt > 0.0)) throw config_error("config field dt must be positive");
    if (j.contains("window")) cfg.window = expect_number(j["window"], "window");
    if (!(cfg.window > 0.0)) throw config_error("config field window must be positive");
    if (j.contains("n_grid")) {
        const double g = expect_number(j["n_grid"], "n_grid");
        if (g < 16.0 || g != std::floor(g))
            throw config_error("config field n_grid must be an integer >= 16");
        cfg.n_grid = static_cast<int>(g);
    }
    if (j.contains("seed")) {
        const double s = expect_number(j["seed"], "seed");
        if (s < 0.0 || s != std::floor(s))
            throw config_error("config field seed must be a non-negative integer");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("escape_threshold")) {
        const double e = expect_number(j["escape_threshold"], "escape_threshold");
        if (!(e > 0.0)) throw config_error("config field escape_threshold must be positive");
        cfg.escape_threshold = e;
    }
    if (j.contains("params")) cfg.params = expect_number_map(j["params"], "params");
    if (j.contains("x0")) cfg.x0_list = expect_number_array(j["x0"], "x0");
    if (j.contains("dt_list")) cfg.dt_list = expect_number_array(j["dt_list"], "dt_list");
    if (j.contains("f")) cfg.f_expr = expect_string(j["f"], "f");
    if (j.contains("method")) {
        cfg.method = expect_string(j["method"], "method");
        static const std::vector<std::string> methods{"quadrature", "birkhoff", "two-point",
                                                      "all"};
        if (std::find(methods.begin(), methods.end(), cfg.method) == methods.end())
            throw config_error("config field method must be one of "
                               "quadrature|birkhoff|two-point|all");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return parse_config_json("{}");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

RunResult run_command(const std::string& command, const RunConfig& cfg, const std::string& out) {
    const std::string out_path = out.empty() ? command + ".csv" : out;
    try {
        if (command == "analyze") return cmd_analyze(cfg, out_path);
        if (command == "simulate") return cmd_simulate(cfg, out_path);
        if (command == "focusing") return cmd_focusing(cfg, out_path);
        if (command == "gamma") return cmd_gamma(cfg, out_path);
        if (command == "exit-prob") return cmd_exit_prob(cfg, out_path);
        if (command == "sample-invariant") return cmd_sample_invariant(cfg, out_path);
        if (command == "attractor") return cmd_attractor(cfg, out_path);
        if (command == "gap") return cmd_gap(cfg, out_path);
        if (command == "spde-residual") return cmd_spde_residual(cfg, out_path);
        if (command == "oracle-check") return cmd_oracle_check(cfg, out_path);
        if (command == "dump-noise") return cmd_dump_noise(cfg, out_path);
        throw config_error("unknown command: " + command);
    } catch (const config_error& e) {
        return {2, e.what()};
    } catch (const parse_error& e) {
        return {2, std::string("expression error: ") + e.what()};
    } catch (const model_error& e) {
        return {2, e.what()};
    } catch (const noise_error& e) {
        return {2, e.what()};
    } catch (const std::exception& e) {
        // measures/flow/pullback/estimator failures are convergence problems
        json extra;
        extra["error"] = e.what();
        try {
            write_sidecar(out_path, cfg, {}, extra);
        } catch (...) {
        }
        return {3, e.what()};
    }
}

} // namespace ergoflow
