#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ergoflow/cli.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string command;
    bool quiet = false;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool has_paths = false;
    std::uint64_t paths = 0;
    bool has_t = false;
    double t = 0.0;
    bool has_a = false, has_b = false, has_n = false, has_beta = false;
    double a = 0.0, b = 0.0, beta = 1.0;
    std::uint64_t n = 0;
    std::vector<double> x0_list;
    std::vector<double> dt_list;
    std::string method;
    std::string f_expr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "JSON config file");
    sub->add_option("--out", o.out_path, "output artifact path (sidecar adds .json)");
    sub->add_option("--seed", o.seed, "seed override")->each([&](const std::string&) {
        o.has_seed = true;
    });
    sub->add_option("--paths", o.paths, "path count override")->each([&](const std::string&) {
        o.has_paths = true;
    });
    sub->add_option("--t", o.t, "horizon override")->each([&](const std::string&) {
        o.has_t = true;
    });
    sub->add_flag("--quiet", o.quiet, "suppress status output");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergoflow: invariant measures, focusing rates, and pullback attractors "
                 "of 1D positive recurrent diffusions"};
    app.require_subcommand(1);

    CommonOpts o;
    const std::vector<std::string> commands{"analyze",     "simulate",        "focusing",
                                            "gamma",       "exit-prob",       "sample-invariant",
                                            "attractor",   "gap",             "spde-residual",
                                            "oracle-check", "dump-noise"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        add_common(sub, o);
        if (name == "focusing") {
            sub->add_option("--a", o.a)->each([&](const std::string&) { o.has_a = true; });
            sub->add_option("--b", o.b)->each([&](const std::string&) { o.has_b = true; });
        }
        if (name == "exit-prob" || name == "sample-invariant" || name == "dump-noise")
            sub->add_option("--n", o.n)->each([&](const std::string&) { o.has_n = true; });
        if (name == "exit-prob" || name == "attractor" || name == "spde-residual")
            sub->add_option("--x0", o.x0_list, "probe points");
        if (name == "gamma") sub->add_option("--method", o.method, "quadrature|birkhoff|two-point|all");
        if (name == "spde-residual") sub->add_option("--f", o.f_expr, "observable expression");
        if (name == "oracle-check") {
            sub->add_option("--beta", o.beta)->each([&](const std::string&) { o.has_beta = true; });
            sub->add_option("--dt", o.dt_list, "step sizes for the order fit");
            sub->add_option("--seeds", o.n)->each([&](const std::string&) { o.has_n = true; });
        }
        sub->callback([&o, name]() { o.command = name; });
    }

    CLI11_PARSE(app, argc, argv);

    ergoflow::RunConfig cfg;
    try {
        cfg = ergoflow::load_config(o.config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    if (o.has_seed) cfg.seed = o.seed;
    if (o.has_paths) cfg.params["paths"] = static_cast<double>(o.paths);
    if (o.has_t) cfg.params["t"] = o.t;
    if (o.has_a) cfg.params["a"] = o.a;
    if (o.has_b) cfg.params["b"] = o.b;
    if (o.has_n) cfg.params[o.command == "oracle-check" ? "seeds" : "n"] =
        static_cast<double>(o.n);
    if (o.has_beta) cfg.params["beta"] = o.beta;
    if (!o.x0_list.empty()) cfg.x0_list = o.x0_list;
    if (!o.dt_list.empty()) cfg.dt_list = o.dt_list;
    if (!o.method.empty()) cfg.method = o.method;
    if (!o.f_expr.empty()) cfg.f_expr = o.f_expr;

    auto result = ergoflow::run_command(o.command, cfg, o.out_path);
    if (!o.quiet || result.exit_code != 0)
        std::fprintf(result.exit_code == 0 ? stdout : stderr, "%s\n", result.message.c_str());
    return result.exit_code;
}
