#include "dnl/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>

#include "dnl/parallel.hpp"
#include "dnl/rng.hpp"

namespace dnl {

SpectralVec limit_scales(const SpectralBasis& basis, double delta, int modes) {
    int m = std::min(modes, basis.d());
    SpectralVec s(m);
    for (int k = 1; k <= m; ++k) {
        double lam = basis.eigenvalue(k);
        s[k - 1] = std::sqrt(std::pow(lam, -2.0 * delta) / (2.0 * lam));
    }
    return s;
}

namespace {

Observable make_bump(const std::string& id, const SpectralVec& scales, int modes, double center1) {
    SpectralVec s = scales;
    Observable g;
    g.id = id;
    g.sup_bound = 1.0;
    double h2 = 0.0;
    for (int k = 0; k < modes; ++k) h2 += 1.0 / (s[k] * s[k]);
    g.holder_const = std::exp(-0.5) * std::sqrt(h2);
    g.eval = [s, modes, center1](const SpectralVec& x) {
        double e = 0.0;
        for (int k = 0; k < modes && k < x.size(); ++k) {
            double z = (x[k] - (k == 0 ? center1 : 0.0)) / s[k];
            e += z * z;
        }
        return std::exp(-0.5 * e);
    };
    return g;
}

Observable make_tanh(const std::string& id, double scale, int mode) {
    Observable g;
    g.id = id;
    g.sup_bound = 1.0;
    g.holder_const = 1.0 / scale;
    g.eval = [scale, mode](const SpectralVec& x) {
        return mode < x.size() ? std::tanh(x[mode] / scale) : 0.0;
    };
    return g;
}

Observable make_prod(const std::string& id, double s1, double s2) {
    Observable g;
    g.id = id;
    g.sup_bound = 1.0;
    g.holder_const = std::sqrt(1.0 / (s1 * s1) + 1.0 / (s2 * s2));
    g.eval = [s1, s2](const SpectralVec& x) {
        double a = std::tanh(x[0] / s1);
        double b = x.size() > 1 ? std::tanh(x[1] / s2) : 0.0;
        return a * b;
    };
    return g;
}

} // namespace

std::vector<Observable> catalog_state_observables(const SpectralVec& scales) {
    if (scales.size() < 1) throw std::invalid_argument("catalog needs at least one mode scale");
    int m = static_cast<int>(scales.size());
    std::vector<Observable> out;
    out.push_back(make_bump("bump0_m1", scales, 1, 0.0));
    out.push_back(make_bump("bump_plus_m1", scales, 1, scales[0]));
    out.push_back(make_tanh("tanh_m1", scales[0], 0));
    if (m >= 2) {
        out.push_back(make_tanh("tanh_m2", scales[1], 1));
        out.push_back(make_prod("prod_m12", scales[0], scales[1]));
    }
    if (m >= 3) {
        out.push_back(make_tanh("tanh_m3", scales[2], 2));
        out.push_back(make_bump("bump0_joint", scales, 3, 0.0));
    }
    return out;
}

std::vector<PathFunctional> catalog_functionals(const SpectralVec& scales, double alpha,
                                                const std::vector<double>& sample_times) {
    if (scales.size() < 2) throw std::invalid_argument("functional catalog needs >= 2 mode scales");
    if (sample_times.empty()) throw std::invalid_argument("functional catalog needs sample times");
    int m = static_cast<int>(scales.size());
    Observable bump0 = make_bump("bump0_m1", scales, 1, 0.0);
    Observable bump_plus = make_bump("bump_plus_m1", scales, 1, scales[0]);
    Observable tanh1 = make_tanh("tanh_m1", scales[0], 0);
    Observable tanh2 = make_tanh("tanh_m2", scales[1], 1);
    Observable joint = make_bump("bump0_joint", scales, std::min(3, m), 0.0);
    Observable prod = make_prod("prod_m12", scales[0], scales[1]);

    double t_mid = sample_times[sample_times.size() / 2];
    double t_end = sample_times.back();

    auto disc = [alpha](const std::string& id, const Observable& g) {
        PathFunctional f;
        f.id = "disc_" + id;
        f.kind = PathFunctional::Kind::Discounted;
        f.g = g;
        f.alpha = alpha;
        return f;
    };
    auto snap = [](const std::string& id, const Observable& g, double t, const std::string& tag) {
        PathFunctional f;
        f.id = "snap_" + id + "_" + tag;
        f.kind = PathFunctional::Kind::Snapshot;
        f.g = g;
        f.t_snap = t;
        return f;
    };

    std::vector<PathFunctional> cat;
    cat.push_back(disc("bump0_m1", bump0));
    cat.push_back(disc("bump_plus_m1", bump_plus));
    cat.push_back(disc("tanh_m1", tanh1));
    cat.push_back(disc("tanh_m2", tanh2));
    cat.push_back(disc("bump0_joint", joint));
    cat.push_back(disc("prod_m12", prod));
    cat.push_back(snap("bump0_m1", bump0, t_mid, "tmid"));
    cat.push_back(snap("bump0_m1", bump0, t_end, "tend"));
    cat.push_back(snap("tanh_m1", tanh1, t_mid, "tmid"));
    cat.push_back(snap("tanh_m1", tanh1, t_end, "tend"));
    cat.push_back(snap("tanh_m2", tanh2, t_end, "tend"));
    cat.push_back(snap("prod_m12", prod, t_end, "tend"));
    return cat;
}

double discounted_observable(const Trajectory& traj, const Observable& g, double alpha,
                             double* tail_bound) {
    size_t n = traj.states.size();
    if (n < 2) throw std::invalid_argument("trajectory too short for quadrature");
    double acc = 0.0;
    for (size_t m = 0; m < n; ++m) {
        double w = 0.0;
        if (m > 0) w += 0.5 * (traj.times[m] - traj.times[m - 1]);
        if (m + 1 < n) w += 0.5 * (traj.times[m + 1] - traj.times[m]);
        acc += w * std::exp(-alpha * traj.times[m]) * g.eval(traj.states[m]);
    }
    if (tail_bound) *tail_bound = g.sup_bound * std::exp(-alpha * traj.times.back()) / alpha;
    return acc;
}

double eval_path_functional(const PathFunctional& f, const Trajectory& traj) {
    if (f.kind == PathFunctional::Kind::Discounted) return discounted_observable(traj, f.g, f.alpha);
    double dt = traj.times[1] - traj.times[0];
    long idx = std::lround(f.t_snap / dt);
    idx = std::max(0L, std::min(idx, static_cast<long>(traj.states.size()) - 1));
    return f.g.eval(traj.states[idx]);
}

EnsembleFeatures simulate_features(const SpectralBasis& basis, const DNLConfig& model,
                                   const SimConfig& sim, const std::vector<PathFunctional>& catalog,
                                   const std::vector<double>& sample_times, int workers) {
    int n = sim.ensemble_size;
    int nf = static_cast<int>(catalog.size());
    int modes = std::min(3, basis.d());
    int nt = static_cast<int>(sample_times.size());
    SpectralVec scales = limit_scales(basis, sim.noise.delta, modes);

    Eigen::MatrixXd fun(n, nf), snap(n, modes * nt);
    std::vector<double> spi(n, 0.0), defects(n, 0.0), sups(n, 0.0), intv(n, 0.0), intvy(n, 0.0);
    std::vector<char> good(n, 0);

    for_each_trajectory(basis, model, sim, workers, [&](long i, const Trajectory& traj) {
        if (!traj.finite) return;
        for (int j = 0; j < nf; ++j) fun(i, j) = eval_path_functional(catalog[j], traj);
        double dt = traj.times[1] - traj.times[0];
        for (int s = 0; s < nt; ++s) {
            long idx = std::lround(sample_times[s] / dt);
            idx = std::max(0L, std::min(idx, static_cast<long>(traj.states.size()) - 1));
            for (int k = 0; k < modes; ++k)
                snap(i, s * modes + k) = traj.states[idx][k] / scales[k];
        }
        EnergyDefect e = energy_diagnostic(basis, model, sim, traj);
        spi[i] = e.sup_H2 + e.int_V2;
        defects[i] = e.defect;
        sups[i] = e.sup_H2;
        intv[i] = e.int_V2;
        intvy[i] = e.int_V2_yosida;
        good[i] = 1;
    });

    EnsembleFeatures out;
    for (const auto& f : catalog) out.functional_ids.push_back(f.id);
    long kept = std::count(good.begin(), good.end(), char(1));
    out.n_bad = n - kept;
    out.functionals.resize(kept, nf);
    out.snapshots.resize(kept, modes * nt);
    out.sup_plus_int.reserve(kept);
    double md = 0, msup = 0, mint = 0, minty = 0, sqd = 0;
    long r = 0;
    for (int i = 0; i < n; ++i) {
        if (!good[i]) continue;
        out.functionals.row(r) = fun.row(i);
        out.snapshots.row(r) = snap.row(i);
        out.sup_plus_int.push_back(spi[i]);
        md += defects[i];
        msup += sups[i];
        mint += intv[i];
        minty += intvy[i];
        ++r;
    }
    out.energy.n = n;
    out.energy.n_bad = out.n_bad;
    out.energy.hs_Gn_sq = hs_norm_sq(noise_amplitudes(basis, sim.noise));
    if (kept > 0) {
        md /= kept;
        out.energy.mean_defect = md;
        out.energy.mean_sup_H2 = msup / kept;
        out.energy.mean_int_V2 = mint / kept;
        out.energy.mean_int_V2_yosida = minty / kept;
        r = 0;
        for (int i = 0; i < n; ++i)
            if (good[i]) sqd += (defects[i] - md) * (defects[i] - md);
        if (kept > 1) out.energy.se_defect = std::sqrt(sqd / (kept - 1) / kept);
    }
    return out;
}

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    long na = a.rows(), nb = b.rows();
    if (na == 0 || nb == 0) throw std::invalid_argument("energy distance on empty sample");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (long i = 0; i < na; ++i)
        for (long j = 0; j < nb; ++j) ab += (a.row(i) - b.row(j)).norm();
    for (long i = 0; i < na; ++i)
        for (long j = i + 1; j < na; ++j) aa += (a.row(i) - a.row(j)).norm();
    for (long i = 0; i < nb; ++i)
        for (long j = i + 1; j < nb; ++j) bb += (b.row(i) - b.row(j)).norm();
    double d2 = 2.0 * ab / (double(na) * nb) - 2.0 * aa / (double(na) * na) -
                2.0 * bb / (double(nb) * nb);
    return std::sqrt(std::max(0.0, d2));
}

namespace {

double combined_statistic(const Eigen::MatrixXd& fa, const Eigen::MatrixXd& fb,
                          const Eigen::MatrixXd& sa, const Eigen::MatrixXd& sb, double* mean_part,
                          double* energy_part) {
    Eigen::VectorXd ma = fa.colwise().mean(), mb = fb.colwise().mean();
    double mp = (ma - mb).cwiseAbs().maxCoeff();
    double ep = energy_distance(sa, sb);
    if (mean_part) *mean_part = mp;
    if (energy_part) *energy_part = ep;
    return mp + ep;
}

Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, long count, std::uint64_t seed, long side) {
    Eigen::MatrixXd out(count, m.cols());
    for (long i = 0; i < count; ++i) {
        std::uint64_t u = counter_bits(CounterKey{seed, static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(side), 0, 0});
        long idx = static_cast<long>(uniform01(u) * m.rows());
        idx = std::min(idx, m.rows() - 1);
        out.row(i) = m.row(idx);
    }
    return out;
}

} // namespace

LawDistance law_distance(const EnsembleFeatures& a, const EnsembleFeatures& b, int bootstrap,
                         std::uint64_t seed) {
    LawDistance d;
    d.total = combined_statistic(a.functionals, b.functionals, a.snapshots, b.snapshots,
                                 &d.mean_part, &d.energy_part);
    long na = a.functionals.rows(), nb = b.functionals.rows();
    long n_min = std::min(na, nb);
    long m = std::min<long>(500, n_min);
    if (bootstrap > 1 && m > 1) {
        std::vector<double> reps(bootstrap);
        for (int bi = 0; bi < bootstrap; ++bi) {
            std::uint64_t sb = mix64(seed ^ (0x626f6f74ULL + static_cast<std::uint64_t>(bi)));
            Eigen::MatrixXd fa = resample_rows(a.functionals, m, sb, 0);
            Eigen::MatrixXd sa = resample_rows(a.snapshots, m, sb, 1);
            Eigen::MatrixXd fb = resample_rows(b.functionals, m, sb, 2);
            Eigen::MatrixXd sbm = resample_rows(b.snapshots, m, sb, 3);
            reps[bi] = combined_statistic(fa, fb, sa, sbm, nullptr, nullptr);
        }
        double mean = 0.0;
        for (double v : reps) mean += v;
        mean /= bootstrap;
        double var = 0.0;
        for (double v : reps) var += (v - mean) * (v - mean);
        var /= (bootstrap - 1);
        // m-out-of-n bootstrap: rescale the replicate sd to the full sample size
        d.radius = 1.96 * std::sqrt(var) * std::sqrt(double(m) / double(n_min));
    }
    return d;
}

double energy_bound_uniform(const SpectralBasis& basis, const DNLConfig& model,
                            const SimConfig& sim, const StabilityConfig& stab) {
    double lam_max = sim.yosida_lam;
    for (double l : stab.ladder_lambda) lam_max = std::max(lam_max, l);
    double lam1 = basis.eigenvalue(1);
    double lamd = basis.eigenvalue(basis.d());
    double a_min = model.k_A() * lam1 / (1.0 + lam_max * lam1);
    double C_d = model.k_A() * model.C_F() + model.C_A_prime_paper();
    double hs = hs_norm_sq(base_amplitudes(basis, sim.noise.delta));
    double s = (C_d + std::sqrt(C_d * C_d + 2.0 * a_min * hs)) / (2.0 * a_min);
    double u0_sq = 0.0;
    for (double c : sim.u0) u0_sq += c * c;
    double path_sup = std::max(std::sqrt(u0_sq), s);
    // H-energy balance: the regularized dissipation integral obeys
    //   k_A int (B_lam u, u) dt <= 0.5 u0^2 + C_d T sup||u|| + 0.5 T ||G||_HS^2
    // and the regularized form compresses each lambda_k by at most
    // 1 + lam_max lambda_d, which converts it into a full V-norm bound.
    double yosida_int =
        (0.5 * u0_sq + C_d * sim.T * path_sup + 0.5 * sim.T * hs) / model.k_A();
    return 4.0 * path_sup * path_sup + (1.0 + lam_max * lamd) * yosida_int;
}

StabilityReport stability_experiment(const SpectralBasis& basis, const DNLConfig& model,
                                     const SimConfig& sim_base, const StabilityConfig& stab,
                                     int workers) {
    size_t R = stab.ladder_lambda.size();
    if (R < 2 || stab.ladder_n.size() != R)
        throw std::invalid_argument("ladder needs >= 2 rungs with matching lambda and n lists");

    SpectralVec scales = limit_scales(basis, sim_base.noise.delta, 3);
    std::vector<PathFunctional> catalog =
        catalog_functionals(scales, stab.alpha, stab.sample_times);

    StabilityReport rep;
    for (const auto& f : catalog) rep.functional_ids.push_back(f.id);
    std::vector<EnsembleFeatures> feats;
    feats.reserve(R);
    rep.functional_means.resize(R, static_cast<long>(catalog.size()));
    for (size_t i = 0; i < R; ++i) {
        LadderRung rung;
        rung.yosida_lam = stab.ladder_lambda[i];
        rung.mollifier_n = stab.ladder_n[i];
        rep.rungs.push_back(rung);

        SimConfig sim = sim_base;
        sim.yosida_lam = rung.yosida_lam;
        sim.noise.mollifier_n = rung.mollifier_n;
        sim.u0_resolvent_n = static_cast<double>(rung.mollifier_n);
        sim.ensemble_size = stab.ensemble;
        sim.seed = mix64(sim_base.seed ^ (0x6c616464ULL + i));
        feats.push_back(simulate_features(basis, model, sim, catalog, stab.sample_times, workers));

        const EnsembleFeatures& f = feats.back();
        rep.functional_means.row(i) = f.functionals.colwise().mean();
        rep.rung_bad.push_back(f.n_bad);
        rep.rung_mean_defect.push_back(f.energy.mean_defect);
        rep.rung_mean_sup_plus_int.push_back(f.energy.mean_sup_H2 + f.energy.mean_int_V2);
        std::vector<double> spi = f.sup_plus_int;
        std::sort(spi.begin(), spi.end());
        long qi = spi.empty() ? 0
                              : std::min<long>(spi.size() - 1,
                                               static_cast<long>(std::ceil(0.99 * spi.size())) - 1);
        rep.rung_q99_sup_plus_int.push_back(spi.empty() ? 0.0 : spi[qi]);
    }

    rep.distance = Eigen::MatrixXd::Zero(R, R);
    rep.radius = Eigen::MatrixXd::Zero(R, R);
    for (size_t i = 0; i < R; ++i)
        for (size_t j = i + 1; j < R; ++j) {
            LawDistance d = law_distance(feats[i], feats[j], stab.bootstrap,
                                         mix64(sim_base.seed ^ (i * 16 + j)));
            rep.distance(i, j) = rep.distance(j, i) = d.total;
            rep.radius(i, j) = rep.radius(j, i) = d.radius;
        }
    for (size_t i = 0; i + 1 < R; ++i) {
        rep.consecutive.push_back(rep.distance(i, i + 1));
        rep.consecutive_radius.push_back(rep.radius(i, i + 1));
    }
    rep.cauchy_verdict = true;
    for (size_t i = 0; i + 1 < rep.consecutive.size(); ++i) {
        double drop = rep.consecutive[i] - rep.consecutive[i + 1];
        if (!(drop > rep.consecutive_radius[i] + rep.consecutive_radius[i + 1]))
            rep.cauchy_verdict = false;
    }

    rep.B_unif = energy_bound_uniform(basis, model, sim_base, stab);
    rep.energy_ok = true;
    for (size_t i = 0; i < R; ++i)
        if (!(rep.rung_mean_sup_plus_int[i] <= rep.B_unif) || rep.rung_bad[i] > 0)
            rep.energy_ok = false;
    return rep;
}

ContrastReport deterministic_contrast(const SpectralBasis& basis, const DNLConfig& model,
                                      const SimConfig& sim_base, const StabilityConfig& stab,
                                      const SpectralVec& v_star, double T, std::uint64_t seed,
                                      int workers) {
    if (v_star.size() != basis.d()) throw std::invalid_argument("v_star dimension mismatch");
    double eps = stab.contrast_eps;
    ContrastReport rep;

    double q = (model.p - 1.0) / (model.p - 2.0);
    double cp = c_p_constant(model.p);
    double vnorm = v_star.norm();
    rep.branch_separation =
        2.0 * vnorm * cp * std::sqrt(std::pow(T, 2.0 * q + 1.0) / (2.0 * q + 1.0));

    SimConfig det = sim_base;
    det.T = T;
    det.noise_on = false;
    det.u0_resolvent_n = 0.0;
    det.ensemble_size = 1;
    std::vector<double> up(v_star.data(), v_star.data() + v_star.size());
    std::vector<double> um = up;
    for (auto& c : up) c *= eps;
    for (auto& c : um) c *= -eps;

    det.u0 = up;
    Trajectory tp = simulate_trajectory(basis, model, det, 0);
    det.u0 = um;
    Trajectory tm = simulate_trajectory(basis, model, det, 0);
    if (!tp.finite || !tm.finite) throw std::runtime_error("deterministic contrast run diverged");

    double acc = 0.0;
    size_t n = tp.states.size();
    for (size_t m = 0; m < n; ++m) {
        double w = 0.0;
        if (m > 0) w += 0.5 * (tp.times[m] - tp.times[m - 1]);
        if (m + 1 < n) w += 0.5 * (tp.times[m + 1] - tp.times[m]);
        acc += w * (tp.states[m] - tm.states[m]).squaredNorm();
    }
    rep.separation_L2 = std::sqrt(acc);
    rep.terminal_separation = (tp.states.back() - tm.states.back()).norm();
    rep.sep_fraction = rep.separation_L2 / rep.branch_separation;
    rep.deterministic_separates = rep.sep_fraction >= 0.5;

    std::vector<double> times = {0.25 * T, 0.5 * T, 0.75 * T, T};
    SpectralVec scales = limit_scales(basis, sim_base.noise.delta, 3);
    std::vector<PathFunctional> catalog = catalog_functionals(scales, stab.alpha, times);

    SimConfig noisy = sim_base;
    noisy.T = T;
    noisy.noise_on = true;
    noisy.u0_resolvent_n = 0.0;
    noisy.ensemble_size = 512;
    noisy.u0 = up;
    noisy.seed = mix64(seed ^ 1);
    EnsembleFeatures fp = simulate_features(basis, model, noisy, catalog, times, workers);
    noisy.u0 = um;
    noisy.seed = mix64(seed ^ 2);
    EnsembleFeatures fm = simulate_features(basis, model, noisy, catalog, times, workers);

    LawDistance d = law_distance(fp, fm, stab.bootstrap, mix64(seed ^ 3));
    rep.noisy_distance = d.total;
    rep.noisy_radius = d.radius;
    rep.noisy_tolerance = 3.0 * d.radius + 0.01 * rep.branch_separation;
    rep.noisy_within_tol = rep.noisy_distance <= rep.noisy_tolerance;

    int modes = std::min(3, basis.d());
    Eigen::MatrixXd tail(fp.snapshots.rows() + fm.snapshots.rows(), modes);
    tail << fp.snapshots.rightCols(modes), fm.snapshots.rightCols(modes);
    Eigen::RowVectorXd mean = tail.colwise().mean();
    rep.ensemble_spread = std::sqrt((tail.rowwise() - mean).squaredNorm() / tail.rows());
    return rep;
}

} // namespace dnl
