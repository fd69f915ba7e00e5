#include "dnl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dnl/operators.hpp"

namespace dnl {

double DNLConfig::k_A() const { return std::pow(M, 2.0 - p) / (p - 1.0); }
double DNLConfig::s_A() const { return 1.0 / (p - 1.0); }
double DNLConfig::C_A() const { return (p - 1.0) * std::pow(M, p - 2.0); }
double DNLConfig::C_F() const { return ell_gain * (M + 1.0); }

double DNLConfig::C_A_prime_paper() const {
    double a = M + k_A() * std::pow(M, p - 1.0);
    double b = k_A() * (p - 2.0) * std::pow(M, p - 1.0);
    return std::sqrt(a * a + b * b);
}

double DNLConfig::C_A_prime_tight() const { return M * (p - 2.0) / (p - 1.0); }

double DNLConfig::lambda1() const { return std::pow(M_PI, rho); }

bool ValidationReport::ok() const {
    for (const auto& c : checks)
        if (c.status == CheckStatus::Fail) return false;
    return true;
}

bool ValidationReport::has_warnings() const {
    for (const auto& c : checks)
        if (c.status == CheckStatus::Warn) return true;
    return false;
}

namespace {

CheckResult check(const std::string& name, double margin, bool hard, const std::string& note = "") {
    CheckResult r;
    r.name = name;
    r.margin = margin;
    r.status = margin > 0.0 ? CheckStatus::Pass : (hard ? CheckStatus::Fail : CheckStatus::Warn);
    r.note = note;
    return r;
}

} // namespace

ValidationReport validate_config(const DNLConfig& cfg, int d) {
    ValidationReport rep;
    rep.checks.push_back(check("p_exponent", cfg.p - 2.0, true, "p > 2"));
    rep.checks.push_back(check("M_truncation", cfg.M, true, "M > 0"));
    rep.checks.push_back(check("ell_gain_positive", cfg.ell_gain, true, "ell_gain > 0"));
    rep.checks.push_back(check("rho_positive", cfg.rho, true, "rho > 0"));
    rep.checks.push_back(check("modes_positive", double(d), true, "d >= 1"));
    rep.checks.push_back(check("delta_window",
                               std::min(cfg.delta, 0.5 - cfg.delta), true,
                               "delta in (0, 1/2)"));
    if (!rep.ok()) return rep; // derived constants below need the basics

    ScalarOps ops(cfg);
    const double CA = cfg.C_A();

    // A1 on a scalar grid spanning both truncation branches
    double lin_margin = 1e300, mono_margin = 1e300, coer = 1e300;
    const int n = 4001;
    const double span = 4.0 * cfg.M;
    double prev_x = -span, prev_a = ops.alpha(-span);
    for (int i = 0; i < n; ++i) {
        double x = -span + 2.0 * span * i / (n - 1);
        double a = ops.alpha(x);
        lin_margin = std::min(lin_margin, CA * (1.0 + std::abs(x)) - std::abs(a));
        if (i > 0 && x != prev_x)
            mono_margin = std::min(mono_margin, (a - prev_a) / (x - prev_x));
        coer = std::min(coer, (a * x + CA) / (x * x + 1e-12));
        prev_x = x;
        prev_a = a;
    }
    rep.checks.push_back(check("A1_linear_bound", lin_margin + 1e-15, true,
                               "|alpha(x)| <= C_A (1 + |x|)"));
    rep.checks.push_back(check("A1_monotone", mono_margin + 1e-15, true,
                               "alpha nondecreasing"));
    rep.checks.push_back(check("A1_coercive", coer, true,
                               "alpha(x) x >= c_A x^2 - C_A for some c_A > 0"));
    rep.checks.push_back(check("A1_holder_exponent",
                               std::min(cfg.s_A(), 1.0 - cfg.s_A()) + 1e-15, true,
                               "s_A = 1/(p-1) in (0, 1)"));
    rep.checks.push_back(check("A2_spectrum", cfg.lambda1(), true, "lambda_1 > 0"));
    rep.checks.push_back(check("A3_F_bounded", cfg.C_F(), true,
                               "C_F = ell_gain (M + 1) finite"));

    // A4: finite-mode HS norm always exists; report its value. The
    // infinite-dimensional tail needs 2 rho delta > 1.
    double hs2 = 0.0;
    for (int k = 1; k <= d; ++k) hs2 += std::pow(std::pow(k * M_PI, cfg.rho), -2.0 * cfg.delta);
    rep.checks.push_back(check("A4_HS_retained_modes", hs2, true, "||G||_HS^2 over retained modes"));
    rep.checks.push_back(check("A4_HS_infinite_tail", 2.0 * cfg.rho * cfg.delta - 1.0, false,
                               "2 rho delta > 1 (square-summability of the full spectrum)"));
    rep.checks.push_back(check("A6_inequality",
                               cfg.s_A() + 2.0 / (1.0 + 2.0 * cfg.delta) - 2.0, true,
                               "s_A + 2/(1+2 delta) > 2"));

    const bool branch_regime = cfg.rho == 2.0;
    rep.checks.push_back(check("nonuniqueness_precondition",
                               cfg.ell_gain - cfg.lambda1(), branch_regime,
                               branch_regime ? "ell_gain > lambda_1 (branch construction)"
                                             : "ell_gain > lambda_1 (informational, rho != 2)"));
    return rep;
}

namespace {

template <typename T>
void get_to_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace

LabConfig LabConfig::from_json(const nlohmann::json& j) {
    LabConfig c;
    if (j.contains("spectral_core")) {
        const auto& s = j.at("spectral_core");
        get_to_if(s, "d", c.d);
        get_to_if(s, "rho", c.model.rho);
        get_to_if(s, "oversample", c.oversample);
    }
    if (j.contains("nonlinear_ops")) {
        const auto& s = j.at("nonlinear_ops");
        get_to_if(s, "p", c.model.p);
        get_to_if(s, "M", c.model.M);
        get_to_if(s, "ell_gain", c.model.ell_gain);
        get_to_if(s, "delta", c.model.delta);
        get_to_if(s, "C_f", c.model.C_f);
    }
    if (j.contains("branch_lab")) {
        const auto& s = j.at("branch_lab");
        get_to_if(s, "T", c.branch.T);
        get_to_if(s, "t_star", c.branch.t_star);
        get_to_if(s, "signs", c.branch.signs);
        get_to_if(s, "grad_tol", c.branch.grad_tol);
        get_to_if(s, "max_iter", c.branch.max_iter);
        get_to_if(s, "time_grid_points", c.branch.time_grid_points);
    }
    if (j.contains("spde_sim")) {
        const auto& s = j.at("spde_sim");
        get_to_if(s, "T", c.sim.T);
        get_to_if(s, "dt", c.sim.dt);
        get_to_if(s, "yosida_lam", c.sim.yosida_lam);
        get_to_if(s, "mollifier_n", c.sim.noise.mollifier_n);
        get_to_if(s, "u0", c.sim.u0);
        get_to_if(s, "u0_resolvent_n", c.sim.u0_resolvent_n);
        get_to_if(s, "seed", c.sim.seed);
        get_to_if(s, "ensemble_size", c.sim.ensemble_size);
        get_to_if(s, "drift_F_on", c.sim.drift_F_on);
        get_to_if(s, "drift_K_on", c.sim.drift_K_on);
        get_to_if(s, "noise_on", c.sim.noise_on);
        c.sim.noise.delta = c.model.delta;
    }
    if (j.contains("ou_kolmogorov")) {
        const auto& s = j.at("ou_kolmogorov");
        get_to_if(s, "alpha", c.ou.alpha);
        get_to_if(s, "d_K", c.ou.d_K);
        get_to_if(s, "mc_size", c.ou.mc_size);
        get_to_if(s, "quad_nodes", c.ou.quad_nodes);
        get_to_if(s, "design_points", c.ou.design_points);
        get_to_if(s, "design_radius_mult", c.ou.design_radius_mult);
        get_to_if(s, "fp_tol", c.ou.fp_tol);
        get_to_if(s, "max_sweeps", c.ou.max_sweeps);
        get_to_if(s, "probe_points", c.ou.probe_points);
        get_to_if(s, "probe_mc", c.ou.probe_mc);
        get_to_if(s, "tail_eps", c.ou.tail_eps);
    }
    if (j.contains("law_stability")) {
        const auto& s = j.at("law_stability");
        get_to_if(s, "ladder_lambda", c.stability.ladder_lambda);
        get_to_if(s, "ladder_n", c.stability.ladder_n);
        get_to_if(s, "alpha", c.stability.alpha);
        get_to_if(s, "ensemble", c.stability.ensemble);
        get_to_if(s, "bootstrap", c.stability.bootstrap);
        get_to_if(s, "contrast_eps", c.stability.contrast_eps);
        get_to_if(s, "sample_times", c.stability.sample_times);
    }
    c.sim.noise.delta = c.model.delta;
    return c;
}

LabConfig LabConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json LabConfig::to_json() const {
    nlohmann::json j;
    j["spectral_core"] = {{"d", d}, {"rho", model.rho}, {"oversample", oversample}};
    j["nonlinear_ops"] = {{"p", model.p},       {"M", model.M}, {"ell_gain", model.ell_gain},
                          {"delta", model.delta}, {"C_f", model.C_f}};
    j["branch_lab"] = {{"T", branch.T},
                       {"t_star", branch.t_star},
                       {"signs", branch.signs},
                       {"grad_tol", branch.grad_tol},
                       {"max_iter", branch.max_iter},
                       {"time_grid_points", branch.time_grid_points}};
    j["spde_sim"] = {{"T", sim.T},
                     {"dt", sim.dt},
                     {"yosida_lam", sim.yosida_lam},
                     {"mollifier_n", sim.noise.mollifier_n},
                     {"u0", sim.u0},
                     {"u0_resolvent_n", sim.u0_resolvent_n},
                     {"seed", sim.seed},
                     {"ensemble_size", sim.ensemble_size},
                     {"drift_F_on", sim.drift_F_on},
                     {"drift_K_on", sim.drift_K_on},
                     {"noise_on", sim.noise_on}};
    j["ou_kolmogorov"] = {{"alpha", ou.alpha},
                          {"d_K", ou.d_K},
                          {"mc_size", ou.mc_size},
                          {"quad_nodes", ou.quad_nodes},
                          {"design_points", ou.design_points},
                          {"design_radius_mult", ou.design_radius_mult},
                          {"fp_tol", ou.fp_tol},
                          {"max_sweeps", ou.max_sweeps},
                          {"probe_points", ou.probe_points},
                          {"probe_mc", ou.probe_mc},
                          {"tail_eps", ou.tail_eps}};
    j["law_stability"] = {{"ladder_lambda", stability.ladder_lambda},
                          {"ladder_n", stability.ladder_n},
                          {"alpha", stability.alpha},
                          {"ensemble", stability.ensemble},
                          {"bootstrap", stability.bootstrap},
                          {"contrast_eps", stability.contrast_eps},
                          {"sample_times", stability.sample_times}};
    return j;
}

std::string LabConfig::canonical_dump() const { return to_json().dump(2); }

std::uint64_t LabConfig::config_hash() const { return fnv1a64(canonical_dump()); }

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace dnl
