#include "dnl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnl/branch.hpp"
#include "dnl/csv.hpp"
#include "dnl/kolmogorov.hpp"
#include "dnl/ou.hpp"
#include "dnl/rng.hpp"
#include "dnl/sde.hpp"
#include "dnl/spectral.hpp"
#include "dnl/stability.hpp"

namespace dnl {
namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int worker_count(const RunOptions& opt) {
    if (opt.workers > 0) return opt.workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

LabConfig load_config(const RunOptions& opt, bool* seed_from_manifest,
                      std::uint64_t* manifest_seed) {
    *seed_from_manifest = false;
    if (opt.config_path.empty()) return LabConfig{};
    std::ifstream in(opt.config_path);
    if (!in) throw UsageError("cannot open config file: " + opt.config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw UsageError("config parse error in " + opt.config_path + ": " + e.what());
    }
    if (j.is_object() && j.contains("subcommand") && j.contains("config")) {
        // a manifest.json reruns its embedded effective config and seed
        if (j.contains("seed")) {
            *seed_from_manifest = true;
            *manifest_seed = j.at("seed").get<std::uint64_t>();
        }
        return LabConfig::from_json(j.at("config"));
    }
    return LabConfig::from_json(j);
}

std::string status_name(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Warn: return "warn";
    default: return "fail";
    }
}

bool run_validate(const LabConfig& cfg, const std::string& dir, std::ostringstream& sum) {
    ValidationReport rep = validate_config(cfg.model, cfg.d);
    CsvWriter csv({"check", "margin", "status", "note"});
    std::ostringstream table;
    for (const auto& c : rep.checks) {
        csv.add_row_mixed({c.name, format_g17(c.margin), status_name(c.status), c.note});
        table << "  " << c.name << ": " << status_name(c.status) << " (margin "
              << format_g17(c.margin) << ")\n";
    }
    csv.write_file(dir + "/checks.csv");
    sum << "validate-config: " << (rep.ok() ? "pass" : "FAIL")
        << (rep.has_warnings() ? " with warnings" : "") << "\n"
        << table.str();
    return rep.ok();
}

bool run_branch(const LabConfig& cfg, const std::string& dir, std::ostringstream& sum) {
    SpectralBasis basis(cfg.d, cfg.model.rho, cfg.oversample);
    MinimizerReport min_rep = minimize_I(basis, cfg.model, cfg.branch);
    std::vector<BranchSolution> br;
    for (double ts : cfg.branch.t_star)
        for (int sg : cfg.branch.signs)
            br.push_back(assemble_branch(basis, cfg.model, min_rep, ts, sg, cfg.branch.T));
    if (br.empty()) throw UsageError("branch config lists no (t_star, sign) pairs");

    CsvWriter rows({"t_star", "sign", "M1", "M2", "M_effective", "I_value", "grad_norm",
                    "iterations", "ode_residual", "pde_residual"});
    double worst_ode = 0.0, worst_pde = 0.0;
    for (const auto& b : br) {
        double ode = ode_residual(cfg.model.p, b.t_star, b.T, cfg.branch.time_grid_points);
        double pde = pde_residual(basis, b, cfg.branch.time_grid_points);
        worst_ode = std::max(worst_ode, ode);
        worst_pde = std::max(worst_pde, pde);
        rows.add_row({b.t_star, double(b.sign), b.M1, b.M2, b.cfg.M, min_rep.I_value,
                      min_rep.grad_norm, double(min_rep.iterations), ode, pde});
    }
    rows.write_file(dir + "/branch_summary.csv");

    CsvWriter dist({"i", "j", "t_star_i", "t_star_j", "sign_i", "sign_j", "distance_grid",
                    "distance_closed_form", "rel_gap"});
    double worst_gap = 0.0;
    for (size_t i = 0; i < br.size(); ++i)
        for (size_t j = i + 1; j < br.size(); ++j) {
            double g = branch_distance_grid(basis, br[i], br[j], cfg.branch.time_grid_points);
            double c = branch_distance_closed_form(basis, br[i], br[j]);
            double gap = c > 1e-14 ? std::abs(g - c) / c : std::abs(g - c);
            worst_gap = std::max(worst_gap, gap);
            dist.add_row({double(i), double(j), br[i].t_star, br[j].t_star, double(br[i].sign),
                          double(br[j].sign), g, c, gap});
        }
    dist.write_file(dir + "/branch_distance.csv");

    std::vector<std::string> pcols = {"t"};
    for (size_t i = 0; i < br.size(); ++i) pcols.push_back("theta_b" + std::to_string(i));
    CsvWriter prof(pcols);
    int P = cfg.branch.time_grid_points;
    for (int m = 0; m < P; ++m) {
        double t = cfg.branch.T * m / (P - 1);
        std::vector<double> row = {t};
        for (const auto& b : br) row.push_back(b.sign * theta_star(t, b.t_star, cfg.model.p));
        prof.add_row(row);
    }
    prof.write_file(dir + "/branch_profiles.csv");
    write_text(dir + "/branch.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 't'\n"
               "set ylabel 'theta'\n"
               "plot for [i=2:*] 'branch_profiles.csv' using 1:i with lines\n");

    bool ok = min_rep.converged && worst_ode < 1e-12 && worst_pde < 1e-5 && worst_gap <= 0.01;
    sum << "branch: " << (ok ? "pass" : "FAIL") << ", " << br.size() << " branches, I(v*) = "
        << format_g17(min_rep.I_value) << ", max ode residual " << format_g17(worst_ode)
        << ", max pde residual " << format_g17(worst_pde) << ", max distance rel gap "
        << format_g17(worst_gap) << "\n";
    return ok;
}

bool run_simulate(const LabConfig& cfg, const std::string& dir, int workers,
                  std::ostringstream& sum) {
    SpectralBasis basis(cfg.d, cfg.model.rho, cfg.oversample);

    Trajectory t0 = simulate_trajectory(basis, cfg.model, cfg.sim, 0);
    std::vector<std::string> cols = {"t"};
    for (int k = 1; k <= basis.d(); ++k) cols.push_back("c_" + std::to_string(k));
    CsvWriter traj(cols);
    for (size_t m = 0; m < t0.states.size(); ++m) {
        std::vector<double> row = {t0.times[m]};
        row.insert(row.end(), t0.states[m].data(), t0.states[m].data() + t0.states[m].size());
        traj.add_row(row);
    }
    traj.write_file(dir + "/trajectory.csv");

    int n = cfg.sim.ensemble_size;
    std::vector<double> fin(n, 0), sup(n, 0), intv(n, 0), intvy(n, 0), def(n, 0), mart(n, 0),
        gap(n, 0);
    std::vector<char> good(n, 0);
    for_each_trajectory(basis, cfg.model, cfg.sim, workers, [&](long i, const Trajectory& tr) {
        good[i] = tr.finite ? 1 : 0;
        if (!tr.finite) return;
        EnergyDefect e = energy_diagnostic(basis, cfg.model, cfg.sim, tr);
        fin[i] = e.final_H2;
        sup[i] = e.sup_H2;
        intv[i] = e.int_V2;
        intvy[i] = e.int_V2_yosida;
        def[i] = e.defect;
        mart[i] = e.martingale;
        gap[i] = e.identity_gap;
    });

    CsvWriter ens({"traj", "finite", "final_H2", "sup_H2", "int_V2", "defect", "martingale",
                   "identity_gap"});
    long bad = 0;
    double md = 0, msup = 0, mint = 0, minty = 0;
    for (int i = 0; i < n; ++i) {
        if (!good[i]) ++bad;
        ens.add_row(
            {double(i), double(good[i]), fin[i], sup[i], intv[i], def[i], mart[i], gap[i]});
        md += def[i];
        msup += sup[i];
        mint += intv[i];
        minty += intvy[i];
    }
    ens.write_file(dir + "/ensemble_summary.csv");

    long kept = n - bad;
    double sq = 0.0;
    if (kept > 0) {
        md /= kept;
        msup /= kept;
        mint /= kept;
        minty /= kept;
        for (int i = 0; i < n; ++i)
            if (good[i]) sq += (def[i] - md) * (def[i] - md);
    }
    double se = kept > 1 ? std::sqrt(sq / (kept - 1) / kept) : 0.0;
    CsvWriter en({"n", "n_bad", "mean_defect", "se_defect", "mean_sup_H2", "mean_int_V2",
                  "mean_int_V2_yosida", "hs_Gn_sq"});
    en.add_row({double(n), double(bad), md, se, msup, mint, minty,
                hs_norm_sq(noise_amplitudes(basis, cfg.sim.noise))});
    en.write_file(dir + "/energy.csv");

    bool ok = bad == 0;
    sum << "simulate: " << (ok ? "pass" : "FAIL") << ", ensemble " << n << ", bad " << bad
        << ", mean energy defect " << format_g17(md) << " (se " << format_g17(se) << ")\n";
    return ok;
}

bool run_stability(const LabConfig& cfg, const std::string& dir, int workers,
                   std::ostringstream& sum) {
    SpectralBasis basis(cfg.d, cfg.model.rho, cfg.oversample);
    StabilityReport rep = stability_experiment(basis, cfg.model, cfg.sim, cfg.stability, workers);
    size_t R = rep.rungs.size();

    CsvWriter rungs({"rung", "yosida_lam", "mollifier_n", "mean_sup_plus_int", "q99_sup_plus_int",
                     "mean_defect", "n_bad"});
    for (size_t i = 0; i < R; ++i)
        rungs.add_row({double(i), rep.rungs[i].yosida_lam, double(rep.rungs[i].mollifier_n),
                       rep.rung_mean_sup_plus_int[i], rep.rung_q99_sup_plus_int[i],
                       rep.rung_mean_defect[i], double(rep.rung_bad[i])});
    rungs.write_file(dir + "/rungs.csv");

    CsvWriter means({"rung", "functional", "mean"});
    for (size_t i = 0; i < R; ++i)
        for (size_t j = 0; j < rep.functional_ids.size(); ++j)
            means.add_row_mixed({std::to_string(i), rep.functional_ids[j],
                                 format_g17(rep.functional_means(i, j))});
    means.write_file(dir + "/rung_means.csv");

    CsvWriter dist({"i", "j", "distance", "radius"});
    for (size_t i = 0; i < R; ++i)
        for (size_t j = i + 1; j < R; ++j)
            dist.add_row({double(i), double(j), rep.distance(i, j), rep.radius(i, j)});
    dist.write_file(dir + "/distances.csv");

    CsvWriter cons({"pair", "distance", "radius"});
    for (size_t i = 0; i < rep.consecutive.size(); ++i)
        cons.add_row({double(i), rep.consecutive[i], rep.consecutive_radius[i]});
    cons.write_file(dir + "/consecutive.csv");

    CsvWriter stat({"B_unif", "cauchy_verdict", "energy_ok"});
    stat.add_row({rep.B_unif, double(rep.cauchy_verdict), double(rep.energy_ok)});
    stat.write_file(dir + "/stability_summary.csv");

    write_text(dir + "/ladder.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set logscale y\n"
               "set xlabel 'consecutive rung pair'\n"
               "set ylabel 'law distance'\n"
               "plot 'consecutive.csv' using 1:2 with linespoints, \\\n"
               "     '' using 1:($2+$3) with lines dashtype 2, \\\n"
               "     '' using 1:($2-$3) with lines dashtype 2\n");

    bool ok = rep.cauchy_verdict && rep.energy_ok;
    sum << "stability: " << (ok ? "pass" : "FAIL") << ", consecutive distances";
    for (size_t i = 0; i < rep.consecutive.size(); ++i)
        sum << " " << format_g17(rep.consecutive[i]) << " (radius "
            << format_g17(rep.consecutive_radius[i]) << ")";
    sum << ", B_unif " << format_g17(rep.B_unif) << ", max rung energy "
        << format_g17(R ? *std::max_element(rep.rung_mean_sup_plus_int.begin(),
                                            rep.rung_mean_sup_plus_int.end())
                        : 0.0)
        << ", cauchy " << (rep.cauchy_verdict ? "yes" : "no") << ", energy bound "
        << (rep.energy_ok ? "holds" : "violated") << "\n";
    return ok;
}

bool run_contrast(const LabConfig& cfg, const std::string& dir, int workers,
                  std::ostringstream& sum) {
    SpectralBasis basis(cfg.d, cfg.model.rho, cfg.oversample);
    MinimizerReport min_rep = minimize_I(basis, cfg.model, cfg.branch);
    BranchSolution bs = assemble_branch(basis, cfg.model, min_rep, 0.0, 1, cfg.branch.T);
    ContrastReport rep = deterministic_contrast(basis, bs.cfg, cfg.sim, cfg.stability,
                                                min_rep.v_star, cfg.branch.T, cfg.sim.seed,
                                                workers);

    CsvWriter csv({"eps", "separation_L2", "branch_separation", "sep_fraction",
                   "terminal_separation", "ensemble_spread", "noisy_distance", "noisy_radius",
                   "noisy_tolerance", "deterministic_separates", "noisy_within_tol"});
    csv.add_row({cfg.stability.contrast_eps, rep.separation_L2, rep.branch_separation,
                 rep.sep_fraction, rep.terminal_separation, rep.ensemble_spread,
                 rep.noisy_distance, rep.noisy_radius, rep.noisy_tolerance,
                 double(rep.deterministic_separates), double(rep.noisy_within_tol)});
    csv.write_file(dir + "/contrast.csv");

    bool ok = rep.deterministic_separates && rep.noisy_within_tol;
    sum << "contrast: " << (ok ? "pass" : "FAIL") << ", deterministic separation "
        << format_g17(rep.separation_L2) << " (" << format_g17(100.0 * rep.sep_fraction)
        << "% of branch separation " << format_g17(rep.branch_separation)
        << "), noisy conditional law distance " << format_g17(rep.noisy_distance)
        << " <= tolerance " << format_g17(rep.noisy_tolerance)
        << (rep.noisy_within_tol ? " yes" : " no") << "\n";
    return ok;
}

bool run_feller(const LabConfig& cfg, const std::string& dir, std::ostringstream& sum) {
    SpectralBasis basis(cfg.d, cfg.model.rho, cfg.oversample);
    SpectralVec amps = noise_amplitudes(basis, cfg.sim.noise);
    OUParams ou = OUParams::spectral(basis, amps, 2.0);
    FellerProbe probe =
        feller_exponent_probe(ou, sign_family(basis.d()), cfg.model.delta, cfg.ou.probe_points,
                              cfg.ou.probe_mc, cfg.sim.seed);
    double expected = -(0.5 + cfg.model.delta);
    bool ok = std::abs(probe.slope - expected) <= 0.15;
    ContractionConstants cc = contraction_constants(cfg.model, probe.C_R_emp);
    double alpha = cfg.ou.alpha > 0 ? cfg.ou.alpha : 2.0 * cc.alpha_0;

    CsvWriter csv({"t", "sup_grad", "envelope"});
    for (size_t i = 0; i < probe.t.size(); ++i)
        csv.add_row({probe.t[i], probe.sup_grad[i], probe.envelope[i]});
    csv.write_file(dir + "/feller.csv");

    CsvWriter consts({"C_R_emp", "slope", "expected_slope", "gamma_factor", "perturbation",
                      "alpha_0", "alpha", "ratio_at_alpha", "C1_at_alpha"});
    consts.add_row({probe.C_R_emp, probe.slope, expected, cc.gamma_factor, cc.perturbation,
                    cc.alpha_0, alpha, cc.ratio(alpha), cc.C1(alpha)});
    consts.write_file(dir + "/feller_constants.csv");

    write_text(dir + "/feller.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set logscale xy\n"
               "set xlabel 't'\n"
               "set ylabel 'sup gradient norm'\n"
               "plot 'feller.csv' using 1:2 with points pt 7, '' using 1:3 with lines\n");

    sum << "feller: " << (ok ? "pass" : "FAIL") << ", fitted slope " << format_g17(probe.slope)
        << " vs expected " << format_g17(expected) << " (+-0.15), C_R_emp "
        << format_g17(probe.C_R_emp) << ", alpha_0 " << format_g17(cc.alpha_0) << ", ratio(2a0) "
        << format_g17(cc.ratio(2.0 * cc.alpha_0)) << "\n";
    return ok;
}

bool run_kolmogorov(const LabConfig& cfg, const std::string& dir, int workers,
                    std::ostringstream& sum) {
    double alpha = cfg.ou.alpha;
    double C_R_emp = 0.0;
    if (alpha <= 0) {
        SpectralBasis full(cfg.d, cfg.model.rho, cfg.oversample);
        SpectralVec amps_full = noise_amplitudes(full, cfg.sim.noise);
        FellerProbe probe = feller_exponent_probe(
            OUParams::spectral(full, amps_full, 2.0), sign_family(full.d()), cfg.model.delta,
            cfg.ou.probe_points, cfg.ou.probe_mc, mix64(cfg.sim.seed ^ 0x70726f6265ULL));
        C_R_emp = probe.C_R_emp;
        ContractionConstants cc = contraction_constants(cfg.model, C_R_emp);
        alpha = 2.0 * cc.alpha_0;
    }
    OUKolmogorovConfig kcfg = cfg.ou;
    kcfg.alpha = alpha;

    SpectralBasis kb(cfg.ou.d_K, cfg.model.rho, cfg.oversample);
    SpectralVec amps_k = noise_amplitudes(kb, cfg.sim.noise);
    OUParams ou = OUParams::matched(kb, cfg.model, cfg.sim.yosida_lam, amps_k, alpha);
    SpectralVec scales = limit_scales(kb, cfg.model.delta, 1);
    Observable g = catalog_state_observables(scales)[0];

    KolmogorovSolution sol = kolmogorov_fixed_point(kb, cfg.model, kcfg, ou, g,
                                                    cfg.sim.yosida_lam, true, cfg.sim.seed,
                                                    workers);

    CsvWriter iters({"sweep", "sup_diff", "ratio"});
    for (size_t s = 0; s < sol.sup_diffs.size(); ++s)
        iters.add_row_mixed({std::to_string(s), format_g17(sol.sup_diffs[s]),
                             s > 0 ? format_g17(sol.ratios[s - 1]) : ""});
    iters.write_file(dir + "/kolmogorov_iters.csv");

    std::vector<std::string> dcols;
    for (int k = 1; k <= kb.d(); ++k) dcols.push_back("y_" + std::to_string(k));
    dcols.push_back("value");
    for (int k = 1; k <= kb.d(); ++k) dcols.push_back("grad_" + std::to_string(k));
    CsvWriter design(dcols);
    for (long i = 0; i < sol.design.rows(); ++i) {
        std::vector<double> row;
        for (int k = 0; k < kb.d(); ++k) row.push_back(sol.design(i, k));
        row.push_back(sol.values[i]);
        for (int k = 0; k < kb.d(); ++k) row.push_back(sol.gradients(i, k));
        design.add_row(row);
    }
    design.write_file(dir + "/kolmogorov_design.csv");

    ResolventCheck chk = resolvent_identity_check(kb, cfg.model, kcfg, sol, g,
                                                  cfg.sim.yosida_lam, SpectralVec::Zero(kb.d()),
                                                  5000, mix64(cfg.sim.seed ^ 0x6368656bULL),
                                                  workers);

    CsvWriter check({"alpha", "C_R_emp", "T_max", "tail_bound", "converged",
                     "contraction_suspect", "mc_size_final", "grad_sup", "value_se_sup",
                     "psi_value", "psi_radius", "mc_value", "mc_se", "mc_radius", "overlap",
                     "ensemble", "T_sim", "dt"});
    check.add_row({sol.alpha, C_R_emp, sol.T_max, sol.tail_bound, double(sol.converged),
                   double(sol.contraction_suspect), double(sol.mc_size_final), sol.grad_sup,
                   sol.value_se_sup, chk.psi_value, chk.psi_radius, chk.mc_value, chk.mc_se,
                   chk.mc_radius, double(chk.overlap), double(chk.ensemble), chk.T_sim, chk.dt});
    check.write_file(dir + "/kolmogorov_check.csv");

    bool ok = sol.converged && chk.overlap;
    sum << "kolmogorov: " << (ok ? "pass" : "FAIL") << ", alpha " << format_g17(sol.alpha) << ", "
        << sol.sup_diffs.size() << " sweeps, converged " << (sol.converged ? "yes" : "no")
        << ", psi(0) = " << format_g17(chk.psi_value) << " +- " << format_g17(chk.psi_radius)
        << " vs MC " << format_g17(chk.mc_value) << " +- " << format_g17(chk.mc_radius)
        << ", overlap " << (chk.overlap ? "yes" : "no") << "\n";
    return ok;
}

} // namespace

RunResult run_subcommand(const std::string& name, const RunOptions& opt) {
    RunResult res;
    std::ostringstream sum;
    try {
        static const std::set<std::string> known = {"validate-config", "branch",   "simulate",
                                                    "stability",       "contrast", "feller",
                                                    "kolmogorov"};
        if (!known.count(name)) throw UsageError("unknown subcommand: " + name);

        bool seed_mf = false;
        std::uint64_t mseed = 0;
        LabConfig cfg = load_config(opt, &seed_mf, &mseed);
        if (opt.has_seed)
            cfg.sim.seed = opt.seed;
        else if (seed_mf)
            cfg.sim.seed = mseed;

        ValidationReport vrep = validate_config(cfg.model, cfg.d);
        std::vector<std::string> violations;
        for (const auto& c : vrep.checks)
            if (c.status == CheckStatus::Fail) violations.push_back(c.name);

        std::filesystem::create_directories(opt.out_dir);
        nlohmann::json man;
        man["subcommand"] = name;
        man["config_path"] = opt.config_path.empty() ? "builtin-defaults" : opt.config_path;
        man["seed"] = cfg.sim.seed;
        man["output_directory"] = opt.out_dir;
        man["tool_version"] = kToolVersion;
        man["config_hash"] = hash_hex(cfg.config_hash());
        man["force"] = opt.force;
        man["violations"] = violations;
        man["config"] = cfg.to_json();
        write_text(opt.out_dir + "/manifest.json", man.dump(2) + "\n");

        if (!violations.empty() && !opt.force && name != "validate-config") {
            sum << name << ": FAIL, invalid model assumptions (";
            for (size_t i = 0; i < violations.size(); ++i)
                sum << (i ? ", " : "") << violations[i];
            sum << "); rerun with --force to record the violation and proceed\n";
            res.status = 1;
            res.summary = sum.str();
            return res;
        }

        int workers = worker_count(opt);
        bool ok = false;
        if (name == "validate-config")
            ok = run_validate(cfg, opt.out_dir, sum);
        else if (name == "branch")
            ok = run_branch(cfg, opt.out_dir, sum);
        else if (name == "simulate")
            ok = run_simulate(cfg, opt.out_dir, workers, sum);
        else if (name == "stability")
            ok = run_stability(cfg, opt.out_dir, workers, sum);
        else if (name == "contrast")
            ok = run_contrast(cfg, opt.out_dir, workers, sum);
        else if (name == "feller")
            ok = run_feller(cfg, opt.out_dir, sum);
        else
            ok = run_kolmogorov(cfg, opt.out_dir, workers, sum);
        res.status = ok ? 0 : 1;
    } catch (const UsageError& e) {
        res.status = 2;
        sum << "usage error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        res.status = 1;
        sum << "runtime failure: " << e.what() << "\n";
    }
    res.summary = sum.str();
    return res;
}

} // namespace dnl
