#pragma once

// Law-convergence experiment: simulate the approximation ladder
// (yosida_lam_i decreasing, mollifier n_i increasing, u0_i = resolvent
// smoothed), compress every trajectory to a fixed a-priori catalog of bounded
// path functionals plus low-mode snapshots, and compare rungs with
// max-mean-difference + energy-distance statistics under a subsampled
// bootstrap. The deterministic contrast runs the same dynamics without noise
// from +-eps v_star initial data.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnl/branch.hpp"
#include "dnl/config.hpp"
#include "dnl/ou.hpp"
#include "dnl/sde.hpp"

namespace dnl {

// Rung-independent coordinate scales of the idealized limit dynamics:
// s_k = sqrt(q_k/(2 lambda_k)) with the unmollified q_k = lambda_k^{-2 delta}.
SpectralVec limit_scales(const SpectralBasis& basis, double delta, int modes);

// Bounded state observables on the first min(3, scales.size()) modes:
// Gaussian bumps (centered and offset by one scale) and tanh projections.
std::vector<Observable> catalog_state_observables(const SpectralVec& scales);

struct PathFunctional {
    enum class Kind { Discounted, Snapshot };
    std::string id;
    Kind kind = Kind::Discounted;
    Observable g;
    double alpha = 2.0;  // Discounted
    double t_snap = 0.0; // Snapshot
};

// The versioned 12-entry catalog: 6 discounted integrals and 6 snapshots,
// snapshot times taken from sample_times (middle and last).
std::vector<PathFunctional> catalog_functionals(const SpectralVec& scales, double alpha,
                                                const std::vector<double>& sample_times);

// Trapezoid quadrature of e^{-alpha t} g(u(t)) over the trajectory; the
// discarded tail is bounded by sup|g| e^{-alpha T}/alpha, written to
// *tail_bound when given.
double discounted_observable(const Trajectory& traj, const Observable& g, double alpha,
                             double* tail_bound = nullptr);

double eval_path_functional(const PathFunctional& f, const Trajectory& traj);

struct EnsembleFeatures {
    std::vector<std::string> functional_ids;
    Eigen::MatrixXd functionals;       // n x catalog
    Eigen::MatrixXd snapshots;         // n x (modes * sample_times)
    std::vector<double> sup_plus_int;  // per-trajectory sup ||u||^2 + int ||u||_V^2
    EnsembleEnergy energy;
    long n_bad = 0;
};

EnsembleFeatures simulate_features(const SpectralBasis& basis, const DNLConfig& model,
                                   const SimConfig& sim, const std::vector<PathFunctional>& catalog,
                                   const std::vector<double>& sample_times, int workers);

struct LawDistance {
    double mean_part = 0.0;   // max over the catalog of |mean_a - mean_b|
    double energy_part = 0.0; // energy distance on the snapshot vectors
    double total = 0.0;
    double radius = 0.0; // 1.96 x subsampled-bootstrap sd, rescaled to full n
};

// Energy distance between two point clouds (rows are samples).
double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

LawDistance law_distance(const EnsembleFeatures& a, const EnsembleFeatures& b, int bootstrap,
                         std::uint64_t seed);

struct LadderRung {
    double yosida_lam = 0.0;
    long mollifier_n = 0;
};

struct StabilityReport {
    std::vector<LadderRung> rungs;
    std::vector<double> rung_mean_sup_plus_int; // ensemble means per rung
    std::vector<double> rung_q99_sup_plus_int;  // tightness diagnostic
    std::vector<double> rung_mean_defect;
    std::vector<long> rung_bad;
    Eigen::MatrixXd functional_means; // rung x catalog
    std::vector<std::string> functional_ids;
    Eigen::MatrixXd distance; // pairwise law distance (total)
    Eigen::MatrixXd radius;   // matching bootstrap radii
    std::vector<double> consecutive;        // distance(i, i+1)
    std::vector<double> consecutive_radius; // radii of those entries
    bool cauchy_verdict = false; // consecutive distances decrease beyond radii
    double B_unif = 0.0;         // closed-form uniform energy bound
    bool energy_ok = false;      // every rung mean sup+int <= B_unif
};

// Dissipative Gronwall constant: rung-independent bound on the ensemble mean
// of sup_t ||u||_H^2 + int ||u||_V^2 built from the coarse drift bound, the
// slowest dissipation rate on the ladder, and the unmollified noise.
double energy_bound_uniform(const SpectralBasis& basis, const DNLConfig& model,
                            const SimConfig& sim, const StabilityConfig& stab);

StabilityReport stability_experiment(const SpectralBasis& basis, const DNLConfig& model,
                                     const SimConfig& sim_base, const StabilityConfig& stab,
                                     int workers);

struct ContrastReport {
    double separation_L2 = 0.0;     // noise-free ||u_+ - u_-||_{L^2(0,T;H)}
    double branch_separation = 0.0; // closed-form two-branch distance
    double sep_fraction = 0.0;
    double terminal_separation = 0.0;
    double ensemble_spread = 0.0; // noisy ensemble sd of ||u(T)||_H
    double noisy_distance = 0.0;  // law distance between +-eps conditional laws
    double noisy_radius = 0.0;
    double noisy_tolerance = 0.0; // pinned: 3 x radius + 1% of branch separation
    bool deterministic_separates = false; // sep_fraction >= 0.5
    bool noisy_within_tol = false;
};

ContrastReport deterministic_contrast(const SpectralBasis& basis, const DNLConfig& model,
                                      const SimConfig& sim_base, const StabilityConfig& stab,
                                      const SpectralVec& v_star, double T, std::uint64_t seed,
                                      int workers);

} // namespace dnl
