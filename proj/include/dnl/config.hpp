#pragma once

// Model parameter pack and its derived constants, the assumption validator,
// and the JSON file format shared by every CLI subcommand. Section names in
// the JSON mirror the module layout (spectral_core, nonlinear_ops, ...).

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dnl {

// Truncation threshold M and exponent p define the truncated power map
// alpha and its inverse; ell is the truncated linear reaction with slope
// ell_gain; delta sets the noise spectral decay g_k = lambda_k^{-delta}.
struct DNLConfig {
    double p = 3.0;
    double M = 2.0;
    double ell_gain = 11.0;
    double delta = 0.15;
    double rho = 2.0;
    double C_f = 0.0; // gain of the optional bounded monotone reaction f

    // derived constants
    double k_A() const;           // M^{2-p}/(p-1)
    double s_A() const;           // 1/(p-1), Hoelder exponent of alpha_inv
    double C_A() const;           // linear-bound constant of alpha
    double C_F() const;           // sup||F|| + Lip(F) = ell_gain*(M+1), |D| = 1
    double C_A_prime_paper() const; // coarse bound on ||K||: sqrt((M+k_A M^{p-1})^2 + (k_A(p-2)M^{p-1})^2)
    double C_A_prime_tight() const; // exact scalar sup |alpha_inv(v) - k_A v| = M(p-2)/(p-1)
    double lambda1() const;       // pi^rho
};

enum class CheckStatus { Pass, Warn, Fail };

struct CheckResult {
    std::string name;
    double margin = 0.0; // > 0 means satisfied
    CheckStatus status = CheckStatus::Pass;
    std::string note;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool ok() const; // no Fail entries
    bool has_warnings() const;
};

// Checks every structural assumption with its numeric margin. The
// nonuniqueness precondition ell_gain > lambda_1 is Fail-level only when
// rho == 2 (the branch construction needs it); Warn-level otherwise. The
// infinite-dimensional square-summability condition 2 rho delta > 1 is
// always Warn-level.
ValidationReport validate_config(const DNLConfig& cfg, int d);

struct BranchConfig {
    double T = 2.0;
    std::vector<double> t_star = {0.0, 1.0};
    std::vector<int> signs = {1};
    double grad_tol = 1e-8;
    long max_iter = 2000000;
    int time_grid_points = 801;
};

struct NoiseSpec {
    double delta = 0.15;
    long mollifier_n = 0; // 0 means no mollification (G itself)
};

struct SimConfig {
    double T = 8.0;
    double dt = 1.0 / 128.0;
    double yosida_lam = 0.1;
    NoiseSpec noise;
    std::vector<double> u0;      // empty = zero initial state
    double u0_resolvent_n = 0.0; // > 0: replace u0 by (I + L/n)^{-1} u0
    std::uint64_t seed = 424242;
    int ensemble_size = 256;
    bool drift_F_on = true; // diagnostic switches, default full model
    bool drift_K_on = true;
    bool noise_on = true;
};

struct OUKolmogorovConfig {
    double alpha = 0.0; // 0 = choose 2*alpha_0 from the measured constants
    int d_K = 1;
    int mc_size = 10000;
    int quad_nodes = 64;
    int design_points = 21;
    double design_radius_mult = 3.0; // radius = mult * ||Q_inf||^{1/2}
    double fp_tol = 1e-7;
    int max_sweeps = 60;
    int probe_points = 9;
    int probe_mc = 20000;
    double tail_eps = 1e-8; // e^{-alpha T_max} target
};

struct StabilityConfig {
    std::vector<double> ladder_lambda = {0.1, 0.05, 0.02, 0.01};
    std::vector<long> ladder_n = {4, 8, 16, 32};
    double alpha = 2.0;
    int ensemble = 2000;
    int bootstrap = 400;
    double contrast_eps = 1e-3;
    std::vector<double> sample_times = {2.0, 4.0, 6.0, 8.0};
};

struct LabConfig {
    int d = 64;
    int oversample = 2;
    DNLConfig model;
    BranchConfig branch;
    SimConfig sim;
    OUKolmogorovConfig ou;
    StabilityConfig stability;

    static LabConfig from_json(const nlohmann::json& j);
    static LabConfig from_file(const std::string& path);
    nlohmann::json to_json() const; // effective values, every default filled in
    std::string canonical_dump() const;
    std::uint64_t config_hash() const; // FNV-1a over the canonical dump
};

std::uint64_t fnv1a64(const std::string& s);

} // namespace dnl
