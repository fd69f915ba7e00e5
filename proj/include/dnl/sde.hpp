#pragma once

// Semi-implicit Euler-Maruyama integration of the regularized system
//   du + k_A B_lam(u) dt = [k_A F(u) + K_lam(u)] dt + G_n dW,
// with the linear diagonal Yosida drift solved implicitly (divisor
// D_k = 1 + dt k_A lambda_k/(1 + lam lambda_k)) and the bounded drifts
// explicit. All randomness is counter-based, keyed by
// (seed, trajectory, step, mode), so ensembles reproduce bit-identically
// under any worker count.

#include <cstdint>
#include <functional>
#include <vector>

#include "dnl/config.hpp"
#include "dnl/operators.hpp"
#include "dnl/spectral.hpp"

namespace dnl {

// Unmollified mode amplitudes g_k = lambda_k^{-delta}.
SpectralVec base_amplitudes(const SpectralBasis& basis, double delta);

// Mollified amplitudes g_{n,k} = g_k/(1 + lambda_k/n); n <= 0 returns g_k.
SpectralVec noise_amplitudes(const SpectralBasis& basis, const NoiseSpec& spec);

NoiseSpec mollify_G(const NoiseSpec& spec, long n);

// Squared Hilbert-Schmidt norm over the retained modes, sum g_k^2.
double hs_norm_sq(const SpectralVec& amps);

struct EmWorkspace {
    GridField field;
    SpectralVec f_c, blam_c, drift, scratch;

    explicit EmWorkspace(const SpectralBasis& basis)
        : field(basis.grid_size()),
          f_c(basis.d()),
          blam_c(basis.d()),
          drift(basis.d()),
          scratch(basis.d()) {}
};

// k_A F(u) + K_lam(u) honoring the diagnostic switches in cfg.
SpectralVec em_drift(const SpectralBasis& basis, const ScalarOps& ops, const SimConfig& cfg,
                     const SpectralVec& u);

// One step with the given standard-normal increment xi (deterministic).
void em_step(const SpectralBasis& basis, const ScalarOps& ops, const SimConfig& cfg,
             const SpectralVec& g_n, const SpectralVec& xi, SpectralVec& u, EmWorkspace& ws);

struct Trajectory {
    std::vector<double> times;        // step_count + 1 stamps
    std::vector<SpectralVec> states;  // one per stamp
    bool finite = true;
    long first_bad_step = -1; // step index that produced a non-finite state
    std::uint64_t traj_index = 0;
};

// Effective initial state: cfg.u0 padded/truncated to d modes, passed through
// (I + L/n)^{-1} when cfg.u0_resolvent_n > 0.
SpectralVec initial_state(const SpectralBasis& basis, const SimConfig& cfg);

Trajectory simulate_trajectory(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, std::uint64_t traj_index);

// Runs trajectories 0..ensemble_size-1 across workers and hands each finished
// trajectory to fn. fn runs on worker threads and must only write state owned
// by its trajectory index.
void for_each_trajectory(const SpectralBasis& basis, const DNLConfig& model, const SimConfig& cfg,
                         int workers, const std::function<void(long, const Trajectory&)>& fn);

// Discrete energy balance over one realized path. The identity
//   1/2||u_M||^2 + k_A sum dt (B_lam u_{m+1}, u_{m+1})
//     = 1/2||u_0||^2 + sum dt (drift_m, u_{m+1}) + sum (noise_m, u_m)
//       + sum (noise_m, du_m) - 1/2 sum ||du_m||^2
// is exact; the report folds the last two terms against the Ito correction
// 1/2 T ||G_n||_HS^2, so defect has nonpositive expectation and is 0 for
// noise-free equilibria.
struct EnergyDefect {
    double defect = 0.0;
    double sup_H2 = 0.0;        // sup_t ||u(t)||_H^2
    double int_V2 = 0.0;        // sum dt ||u_{m+1}||_V^2
    double int_V2_yosida = 0.0; // sum dt (B_lam u_{m+1}, u_{m+1})
    double final_H2 = 0.0;
    double martingale = 0.0;    // sum (noise_m, u_m)
    double identity_gap = 0.0;  // defect minus its exact discrete expression
};

EnergyDefect energy_diagnostic(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, const Trajectory& traj);

struct EnsembleEnergy {
    long n = 0;
    long n_bad = 0;
    double mean_defect = 0.0;
    double se_defect = 0.0; // standard error of the mean
    double mean_sup_H2 = 0.0;
    double mean_int_V2 = 0.0;
    double mean_int_V2_yosida = 0.0;
    double hs_Gn_sq = 0.0;
};

EnsembleEnergy ensemble_energy(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, int workers);

} // namespace dnl
