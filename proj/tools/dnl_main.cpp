#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dnl.h"

int main(int argc, char** argv) {
    CLI::App app{std::string("dnl ") + dnl_version() +
                 " - spectral laboratory for regularized doubly nonlinear stochastic dynamics"};
    app.require_subcommand(1);

    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    int workers = 0;
    bool force = false;

    auto* config_opt =
        app.add_option("--config", config, "JSON config file, or a manifest.json to rerun");
    app.add_option("--out", out, "output directory for CSVs and manifest.json");
    auto* seed_opt = app.add_option("--seed", seed, "override the config RNG seed");
    seed_opt->envname("DNL_SEED");
    auto* workers_opt =
        app.add_option("--workers", workers, "worker threads, 0 = hardware concurrency");
    workers_opt->envname("DNL_WORKERS");
    app.add_flag("--force", force, "proceed past failed assumption checks, recording them");

    struct Sub {
        const char* name;
        const char* desc;
    };
    const Sub subs[] = {
        {"validate-config", "print the assumption margin table"},
        {"branch", "minimize the energy functional and certify the branch family"},
        {"simulate", "integrate an ensemble and report the energy balance"},
        {"stability", "run the approximation ladder and compare laws across rungs"},
        {"contrast", "noise-off branch separation vs noisy conditional law distance"},
        {"feller", "probe the semigroup gradient decay exponent"},
        {"kolmogorov", "solve the discounted Kolmogorov fixed point and cross-check it"},
    };
    for (const Sub& s : subs) app.add_subcommand(s.name, s.desc)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    dnl_session* s = dnl_session_new();
    if (!s) {
        std::fputs("out of memory\n", stderr);
        return 1;
    }
    if (config_opt->count() > 0) dnl_session_set_config(s, config.c_str());
    if (seed_opt->count() > 0) dnl_session_set_seed(s, seed);
    if (workers_opt->count() > 0) dnl_session_set_workers(s, workers);
    dnl_session_set_force(s, force ? 1 : 0);

    const std::string sub = app.get_subcommands().front()->get_name();
    dnl_status st = dnl_run(s, sub.c_str(), out.c_str());
    std::fputs(dnl_last_message(s), stdout);
    dnl_session_free(s);
    return static_cast<int>(st);
}
