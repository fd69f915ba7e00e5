#include "dnl/kolmogorov.hpp"

#include <cmath>
#include <stdexcept>

#include "dnl/operators.hpp"
#include "dnl/parallel.hpp"
#include "dnl/quadrature.hpp"
#include "dnl/rng.hpp"
#include "dnl/sde.hpp"

namespace dnl {

namespace {

inline double thin_plate(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

} // namespace

RbfDesign::RbfDesign(const Eigen::MatrixXd& points, double clamp_radius)
    : pts_(points), radius_(clamp_radius) {
    if (pts_.rows() < 2) throw std::invalid_argument("RbfDesign: need at least 2 points");
    int N = int(pts_.rows());
    int dim = int(pts_.cols());
    int m = N + 1 + dim;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) A(i, j) = thin_plate((pts_.row(i) - pts_.row(j)).norm());
    for (int i = 0; i < N; ++i) {
        A(i, N) = 1.0;
        A(N, i) = 1.0;
        for (int k = 0; k < dim; ++k) {
            A(i, N + 1 + k) = pts_(i, k);
            A(N + 1 + k, i) = pts_(i, k);
        }
    }
    lu_.compute(A);
}

Eigen::VectorXd RbfDesign::clamp(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = y;
    for (int k = 0; k < out.size(); ++k)
        out[k] = std::min(radius_, std::max(-radius_, out[k]));
    return out;
}

Eigen::VectorXd RbfDesign::solve(const Eigen::VectorXd& values) const {
    if (values.size() != pts_.rows()) throw std::invalid_argument("RbfDesign: value count mismatch");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pts_.rows() + 1 + pts_.cols());
    rhs.head(values.size()) = values;
    return lu_.solve(rhs);
}

double RbfDesign::evaluate(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& y) const {
    Eigen::VectorXd yc = clamp(y);
    int N = int(pts_.rows());
    int dim = int(pts_.cols());
    double s = coeffs[N];
    for (int k = 0; k < dim; ++k) s += coeffs[N + 1 + k] * yc[k];
    for (int i = 0; i < N; ++i) s += coeffs[i] * thin_plate((pts_.row(i).transpose() - yc).norm());
    return s;
}

Eigen::MatrixXd tensor_design(int dim, int points_per_axis, double radius) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("tensor_design: dim must be 1..3");
    if (points_per_axis < 2) throw std::invalid_argument("tensor_design: need >= 2 points per axis");
    if (radius <= 0.0) throw std::invalid_argument("tensor_design: radius must be positive");
    long N = 1;
    for (int k = 0; k < dim; ++k) N *= points_per_axis;
    Eigen::MatrixXd pts(N, dim);
    for (long idx = 0; idx < N; ++idx) {
        long rem = idx;
        for (int k = 0; k < dim; ++k) {
            long i = rem % points_per_axis;
            rem /= points_per_axis;
            pts(idx, k) = -radius + 2.0 * radius * double(i) / (points_per_axis - 1);
        }
    }
    return pts;
}

double KolmogorovSolution::value_at(const Eigen::VectorXd& y) const {
    return rbf->evaluate(value_coeffs, y);
}

Eigen::VectorXd KolmogorovSolution::gradient_at(const Eigen::VectorXd& y) const {
    Eigen::VectorXd g(rbf->dim());
    for (int k = 0; k < rbf->dim(); ++k) g[k] = rbf->evaluate(grad_coeffs[k], y);
    return g;
}

KolmogorovSolution kolmogorov_fixed_point(const SpectralBasis& basis, const DNLConfig& model,
                                          const OUKolmogorovConfig& kcfg, const OUParams& ou,
                                          const Observable& g, double yosida_lam, bool drift_on,
                                          std::uint64_t seed, int workers) {
    int dim = basis.d();
    if (dim > 3) throw std::invalid_argument("kolmogorov_fixed_point: state dimension must be <= 3");
    if (ou.rate.size() != dim) throw std::invalid_argument("kolmogorov_fixed_point: OU dimension mismatch");

    KolmogorovSolution sol;
    sol.alpha = ou.alpha;
    double radius = kcfg.design_radius_mult * std::sqrt(Q_infinity(ou).maxCoeff());
    sol.design = tensor_design(dim, kcfg.design_points, radius);
    sol.rbf = std::make_shared<RbfDesign>(sol.design, radius);
    long N = sol.design.rows();

    double beta = 0.5 - model.delta;
    sol.T_max = std::log(1.0 / kcfg.tail_eps) / ou.alpha;
    QuadRule qr = gauss_legendre(kcfg.quad_nodes, 0.0, std::pow(sol.T_max, beta));
    std::vector<double> t_node(qr.x.size()), w_node(qr.x.size());
    for (size_t j = 0; j < qr.x.size(); ++j) {
        double tau = qr.x[j];
        t_node[j] = std::pow(tau, 1.0 / beta);
        w_node[j] = qr.w[j] * (1.0 / beta) * std::pow(tau, 1.0 / beta - 1.0) *
                    std::exp(-ou.alpha * t_node[j]);
    }

    ScalarOps ops(model);
    sol.values = Eigen::VectorXd::Zero(N);
    sol.gradients = Eigen::MatrixXd::Zero(N, dim);
    sol.value_coeffs = sol.rbf->solve(sol.values);
    sol.grad_coeffs.assign(dim, sol.value_coeffs);

    int mc = kcfg.mc_size;
    int doublings = 0, stall = 0;
    for (int sweep = 0; sweep < kcfg.max_sweeps; ++sweep) {
        Observable Phi;
        Phi.id = "kolmogorov_integrand";
        Phi.eval = [&](const SpectralVec& y) {
            double v = g.eval(y);
            if (drift_on) {
                SpectralVec drift =
                    ops.k_A() * F_op(basis, ops, y) + K_lambda_op(basis, ops, y, yosida_lam);
                if (model.C_f != 0.0)
                    drift -= ops.k_A() * f_lambda_op(basis, ops, y, yosida_lam);
                Eigen::VectorXd dpsi(dim);
                for (int k = 0; k < dim; ++k) dpsi[k] = sol.rbf->evaluate(sol.grad_coeffs[k], y);
                v += drift.dot(dpsi);
            }
            return v;
        };

        Eigen::VectorXd new_values(N), new_se(N);
        Eigen::MatrixXd new_grads(N, dim);
        parallel_for(N, workers, [&](long i) {
            SpectralVec xi = sol.design.row(i).transpose();
            double val = 0.0, se = 0.0;
            SpectralVec grad = SpectralVec::Zero(dim);
            for (size_t j = 0; j < t_node.size(); ++j) {
                std::uint64_t sj = mix64(seed ^ (std::uint64_t(i) * 1000003ULL + j * 7919ULL));
                MCStat v;
                GradientEstimate ge;
                Rt_apply_and_gradient(ou, Phi, t_node[j], xi, mc, sj, v, ge);
                val += w_node[j] * v.mean;
                se += w_node[j] * v.se;
                grad += w_node[j] * ge.grad;
            }
            new_values[i] = val;
            new_se[i] = se;
            new_grads.row(i) = grad.transpose();
        });

        double sup_diff = (new_values - sol.values).cwiseAbs().maxCoeff();
        sol.values = new_values;
        sol.gradients = new_grads;
        sol.value_se_sup = new_se.maxCoeff();
        sol.value_coeffs = sol.rbf->solve(sol.values);
        for (int k = 0; k < dim; ++k) sol.grad_coeffs[k] = sol.rbf->solve(sol.gradients.col(k));

        if (!sol.sup_diffs.empty() && sol.sup_diffs.back() > 0.0)
            sol.ratios.push_back(sup_diff / sol.sup_diffs.back());
        sol.sup_diffs.push_back(sup_diff);

        if (sup_diff < kcfg.fp_tol) {
            sol.converged = true;
            break;
        }
        if (!sol.ratios.empty() && sol.ratios.back() > 0.97) stall++;
        else stall = 0;
        if (stall >= 3) {
            if (doublings < 2) {
                mc *= 2;
                doublings++;
                stall = 0;
            } else {
                sol.contraction_suspect = true;
                break;
            }
        }
    }
    if (!sol.converged && !sol.ratios.empty() && sol.ratios.back() >= 0.99)
        sol.contraction_suspect = true;

    sol.mc_size_final = mc;
    for (long i = 0; i < N; ++i)
        sol.grad_sup = std::max(sol.grad_sup, sol.gradients.row(i).norm());
    double pert = model.k_A() * model.C_F() + model.C_A_prime_paper() + model.k_A() * model.C_f;
    sol.tail_bound =
        std::exp(-ou.alpha * sol.T_max) / ou.alpha * (g.sup_bound + pert * sol.grad_sup);
    return sol;
}

ResolventCheck resolvent_identity_check(const SpectralBasis& basis, const DNLConfig& model,
                                        const OUKolmogorovConfig& kcfg,
                                        const KolmogorovSolution& sol, const Observable& g,
                                        double yosida_lam, const SpectralVec& u0, long ensemble,
                                        std::uint64_t seed, int workers) {
    if (model.C_f != 0.0)
        throw std::invalid_argument("resolvent_identity_check: requires C_f = 0 (the stepper "
                                    "integrates no f term)");
    if (u0.size() != basis.d())
        throw std::invalid_argument("resolvent_identity_check: u0 dimension mismatch");

    double alpha = sol.alpha;
    ResolventCheck rep;
    rep.ensemble = ensemble;
    rep.dt = 1.0 / (32.0 * alpha);
    long steps = long(std::ceil(std::log(1.0 / kcfg.tail_eps) / alpha / rep.dt));
    rep.T_sim = steps * rep.dt;
    rep.tail_bound = g.sup_bound * std::exp(-alpha * rep.T_sim) / alpha;

    SimConfig sim;
    sim.T = rep.T_sim;
    sim.dt = rep.dt;
    sim.yosida_lam = yosida_lam;
    sim.noise.delta = model.delta;
    sim.noise.mollifier_n = 0;
    sim.u0.assign(u0.data(), u0.data() + u0.size());
    sim.u0_resolvent_n = 0.0;
    sim.seed = mix64(seed ^ 0x7265736f6c76ULL);
    sim.ensemble_size = int(ensemble);

    std::vector<double> integrals(ensemble, 0.0);
    std::vector<char> bad(ensemble, 0);
    for_each_trajectory(basis, model, sim, workers, [&](long i, const Trajectory& traj) {
        if (!traj.finite) {
            bad[i] = 1;
            return;
        }
        double acc = 0.0;
        for (size_t m = 0; m + 1 < traj.states.size(); ++m) {
            double a = std::exp(-alpha * traj.times[m]) * g.eval(traj.states[m]);
            double b = std::exp(-alpha * traj.times[m + 1]) * g.eval(traj.states[m + 1]);
            acc += 0.5 * sim.dt * (a + b);
        }
        acc += std::exp(-alpha * traj.times.back()) * g.eval(traj.states.back()) / alpha;
        integrals[i] = acc;
    });

    double sum = 0.0, sum2 = 0.0;
    long good = 0;
    for (long i = 0; i < ensemble; ++i) {
        if (bad[i]) continue;
        good++;
        sum += integrals[i];
        sum2 += integrals[i] * integrals[i];
    }
    if (good < 2) throw std::runtime_error("resolvent_identity_check: every trajectory failed");
    rep.mc_value = sum / good;
    double var = (sum2 - sum * sum / good) / (good - 1);
    rep.mc_se = std::sqrt(std::max(0.0, var) / good);
    rep.mc_radius = 1.96 * rep.mc_se + rep.tail_bound;

    rep.psi_value = sol.value_at(u0);
    double r_emp = sol.ratios.empty() ? 0.9 : std::min(0.99, std::max(0.0, sol.ratios.back()));
    double last_diff = sol.sup_diffs.empty() ? 0.0 : sol.sup_diffs.back();
    rep.psi_radius = last_diff * r_emp / (1.0 - r_emp) + sol.tail_bound + 1.96 * sol.value_se_sup;
    rep.overlap = std::abs(rep.psi_value - rep.mc_value) <= rep.psi_radius + rep.mc_radius;
    return rep;
}

} // namespace dnl
