#include "dnl/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "dnl/parallel.hpp"
#include "dnl/rng.hpp"

namespace dnl {

SpectralVec base_amplitudes(const SpectralBasis& basis, double delta) {
    SpectralVec g(basis.d());
    for (int k = 0; k < basis.d(); ++k) g[k] = std::pow(basis.eigenvalue(k + 1), -delta);
    return g;
}

SpectralVec noise_amplitudes(const SpectralBasis& basis, const NoiseSpec& spec) {
    SpectralVec g = base_amplitudes(basis, spec.delta);
    if (spec.mollifier_n > 0) {
        double n = double(spec.mollifier_n);
        for (int k = 0; k < basis.d(); ++k) g[k] /= 1.0 + basis.eigenvalue(k + 1) / n;
    }
    return g;
}

NoiseSpec mollify_G(const NoiseSpec& spec, long n) {
    if (n < 1) throw std::invalid_argument("mollify_G: n must be >= 1");
    NoiseSpec out = spec;
    out.mollifier_n = n;
    return out;
}

double hs_norm_sq(const SpectralVec& amps) { return amps.squaredNorm(); }

namespace {

void em_drift_inplace(const SpectralBasis& basis, const ScalarOps& ops, const SimConfig& cfg,
                      const SpectralVec& u, EmWorkspace& ws) {
    ws.drift.setZero();
    if (!cfg.drift_F_on && !cfg.drift_K_on) return;

    ws.field = basis.synthesize(u);
    for (int j = 0; j < ws.field.size(); ++j) ws.field[j] = ops.ell(ws.field[j]);
    ws.f_c = basis.analyze(ws.field);
    if (cfg.drift_F_on) ws.drift = ops.k_A() * ws.f_c;

    if (cfg.drift_K_on) {
        ws.blam_c = yosida_B(basis, u, cfg.yosida_lam);
        ws.scratch = ws.f_c - ws.blam_c;
        ws.field = basis.synthesize(ws.scratch);
        for (int j = 0; j < ws.field.size(); ++j) ws.field[j] = ops.kappa(ws.field[j]);
        ws.drift += basis.analyze(ws.field);
    }
}

} // namespace

SpectralVec em_drift(const SpectralBasis& basis, const ScalarOps& ops, const SimConfig& cfg,
                     const SpectralVec& u) {
    EmWorkspace ws(basis);
    em_drift_inplace(basis, ops, cfg, u, ws);
    return ws.drift;
}

void em_step(const SpectralBasis& basis, const ScalarOps& ops, const SimConfig& cfg,
             const SpectralVec& g_n, const SpectralVec& xi, SpectralVec& u, EmWorkspace& ws) {
    em_drift_inplace(basis, ops, cfg, u, ws);
    double dt = cfg.dt;
    double sdt = std::sqrt(dt);
    double kA = ops.k_A();
    double lam = cfg.yosida_lam;
    for (int k = 0; k < basis.d(); ++k) {
        double lk = basis.eigenvalue(k + 1);
        double rhs = u[k] + dt * ws.drift[k];
        if (cfg.noise_on) rhs += sdt * g_n[k] * xi[k];
        u[k] = rhs / (1.0 + dt * kA * lk / (1.0 + lam * lk));
    }
}

SpectralVec initial_state(const SpectralBasis& basis, const SimConfig& cfg) {
    SpectralVec u0 = SpectralVec::Zero(basis.d());
    for (int k = 0; k < basis.d() && k < int(cfg.u0.size()); ++k) u0[k] = cfg.u0[k];
    if (cfg.u0_resolvent_n > 0.0) u0 = basis.resolvent(u0, 1.0 / cfg.u0_resolvent_n);
    return u0;
}

Trajectory simulate_trajectory(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, std::uint64_t traj_index) {
    if (cfg.dt <= 0.0) throw std::invalid_argument("simulate_trajectory: dt must be positive");
    long steps = std::lround(cfg.T / cfg.dt);
    if (std::abs(steps * cfg.dt - cfg.T) > 1e-9 * cfg.T || steps < 1)
        throw std::invalid_argument("simulate_trajectory: T/dt must be a positive integer");

    ScalarOps ops(model);
    SpectralVec g_n = noise_amplitudes(basis, cfg.noise);
    EmWorkspace ws(basis);
    SpectralVec xi(basis.d());

    Trajectory traj;
    traj.traj_index = traj_index;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    SpectralVec u = initial_state(basis, cfg);
    traj.times.push_back(0.0);
    traj.states.push_back(u);

    for (long m = 0; m < steps; ++m) {
        for (int k = 0; k < basis.d(); ++k) {
            CounterKey key{cfg.seed, traj_index, std::uint64_t(m), std::uint64_t(k), 0};
            xi[k] = gaussian(key);
        }
        em_step(basis, ops, cfg, g_n, xi, u, ws);
        if (!u.allFinite()) {
            traj.finite = false;
            traj.first_bad_step = m;
            break;
        }
        traj.times.push_back((m + 1) * cfg.dt);
        traj.states.push_back(u);
    }
    return traj;
}

void for_each_trajectory(const SpectralBasis& basis, const DNLConfig& model, const SimConfig& cfg,
                         int workers, const std::function<void(long, const Trajectory&)>& fn) {
    parallel_for(cfg.ensemble_size, workers, [&](long i) {
        Trajectory t = simulate_trajectory(basis, model, cfg, std::uint64_t(i));
        fn(i, t);
    });
}

EnergyDefect energy_diagnostic(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, const Trajectory& traj) {
    EnergyDefect rep;
    if (traj.states.empty()) return rep;

    ScalarOps ops(model);
    SpectralVec g_n = noise_amplitudes(basis, cfg.noise);
    double dt = cfg.dt;
    double sdt = std::sqrt(dt);
    double kA = ops.k_A();
    double lam = cfg.yosida_lam;

    size_t M = traj.states.size() - 1;
    rep.sup_H2 = traj.states[0].squaredNorm();
    double lhs_diss = 0.0, drift_work = 0.0, mart = 0.0, noise_quad = 0.0, incr_quad = 0.0;
    SpectralVec noise(basis.d());

    for (size_t m = 0; m < M; ++m) {
        const SpectralVec& u = traj.states[m];
        const SpectralVec& up = traj.states[m + 1];
        rep.sup_H2 = std::max(rep.sup_H2, up.squaredNorm());

        double v2 = 0.0, v2y = 0.0;
        for (int k = 0; k < basis.d(); ++k) {
            double lk = basis.eigenvalue(k + 1);
            v2 += lk * up[k] * up[k];
            v2y += lk / (1.0 + lam * lk) * up[k] * up[k];
        }
        rep.int_V2 += dt * v2;
        rep.int_V2_yosida += dt * v2y;
        lhs_diss += dt * kA * v2y;

        SpectralVec drift = em_drift(basis, ops, cfg, u);
        drift_work += dt * drift.dot(up);

        if (cfg.noise_on) {
            for (int k = 0; k < basis.d(); ++k) {
                CounterKey key{cfg.seed, traj.traj_index, std::uint64_t(m), std::uint64_t(k), 0};
                noise[k] = sdt * g_n[k] * gaussian(key);
            }
        } else {
            noise.setZero();
        }
        mart += noise.dot(u);
        noise_quad += noise.dot(up - u);
        incr_quad += 0.5 * (up - u).squaredNorm();
    }

    rep.final_H2 = traj.states[M].squaredNorm();
    rep.martingale = mart;
    double T_run = traj.times.back();
    double ito = cfg.noise_on ? 0.5 * T_run * hs_norm_sq(g_n) : 0.0;
    double lhs = 0.5 * rep.final_H2 + lhs_diss;
    double rhs = 0.5 * traj.states[0].squaredNorm() + drift_work + mart + ito;
    rep.defect = lhs - rhs;
    // lhs = rhs - ito + noise_quad - incr_quad holds exactly for realized
    // paths; the gap certifies that counters reproduced the path's noise
    rep.identity_gap = rep.defect - (noise_quad - incr_quad - ito);
    return rep;
}

EnsembleEnergy ensemble_energy(const SpectralBasis& basis, const DNLConfig& model,
                               const SimConfig& cfg, int workers) {
    long n = cfg.ensemble_size;
    std::vector<EnergyDefect> defects(n);
    std::vector<char> bad(n, 0);
    for_each_trajectory(basis, model, cfg, workers, [&](long i, const Trajectory& t) {
        if (!t.finite) bad[i] = 1;
        defects[i] = energy_diagnostic(basis, model, cfg, t);
    });

    EnsembleEnergy rep;
    rep.n = n;
    SpectralVec g_n = noise_amplitudes(basis, cfg.noise);
    rep.hs_Gn_sq = hs_norm_sq(g_n);
    double sum = 0.0, sum2 = 0.0;
    long good = 0;
    for (long i = 0; i < n; ++i) {
        if (bad[i]) {
            rep.n_bad++;
            continue;
        }
        good++;
        sum += defects[i].defect;
        sum2 += defects[i].defect * defects[i].defect;
        rep.mean_sup_H2 += defects[i].sup_H2;
        rep.mean_int_V2 += defects[i].int_V2;
        rep.mean_int_V2_yosida += defects[i].int_V2_yosida;
    }
    if (good > 0) {
        rep.mean_defect = sum / good;
        rep.mean_sup_H2 /= good;
        rep.mean_int_V2 /= good;
        rep.mean_int_V2_yosida /= good;
        if (good > 1) {
            double var = (sum2 - sum * sum / good) / (good - 1);
            rep.se_defect = std::sqrt(std::max(0.0, var) / good);
        }
    }
    return rep;
}

} // namespace dnl
