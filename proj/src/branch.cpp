#include "dnl/branch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dnl/quadrature.hpp"

namespace dnl {

double c_p_constant(double p) {
    double pp = p / (p - 1.0);
    double two_m = 2.0 - pp; // (p-2)/(p-1), in (0,1) for p > 2
    return std::pow(two_m, 1.0 / two_m);
}

double theta_star(double t, double t_star, double p) {
    double s = t - t_star;
    if (s <= 0.0) return 0.0;
    double pp = p / (p - 1.0);
    double q = 1.0 / (2.0 - pp); // (p-1)/(p-2)
    return c_p_constant(p) * std::pow(s, q);
}

double theta_star_dot(double t, double t_star, double p) {
    double s = t - t_star;
    if (s <= 0.0) return 0.0;
    double pp = p / (p - 1.0);
    double q = 1.0 / (2.0 - pp);
    return c_p_constant(p) * q * std::pow(s, q - 1.0);
}

namespace {

// grid quadrature of int |V|^p and the pointwise |V|^{p-2} V map
double p_power_integral(const SpectralBasis& basis, const GridField& V, double p) {
    double s = 0.0;
    if (p == 3.0) {
        for (int j = 0; j < V.size(); ++j) {
            double a = std::abs(V[j]);
            s += a * a * a;
        }
    } else {
        for (int j = 0; j < V.size(); ++j) s += std::pow(std::abs(V[j]), p);
    }
    return s / double(V.size() + 1);
}

void p_power_map(GridField& V, double p) {
    if (p == 3.0) {
        for (int j = 0; j < V.size(); ++j) V[j] = std::abs(V[j]) * V[j];
    } else {
        for (int j = 0; j < V.size(); ++j) V[j] = std::pow(std::abs(V[j]), p - 2.0) * V[j];
    }
}

// Hessian of I at v acting on x: L x - ell_gain x + (p-1)|W|^{p-2} X pointwise
SpectralVec hessian_apply(const SpectralBasis& basis, const DNLConfig& cfg, const GridField& pw,
                          const SpectralVec& x) {
    GridField X = basis.synthesize(x);
    for (int j = 0; j < X.size(); ++j) X[j] *= pw[j];
    SpectralVec h = basis.analyze(X);
    h += basis.eigenvalues().cwiseProduct(x);
    h -= cfg.ell_gain * x;
    return h;
}

SpectralVec newton_direction(const SpectralBasis& basis, const DNLConfig& cfg,
                             const SpectralVec& v, const SpectralVec& g) {
    GridField pw = basis.synthesize(v);
    if (cfg.p == 3.0) {
        for (int j = 0; j < pw.size(); ++j) pw[j] = 2.0 * std::abs(pw[j]);
    } else {
        for (int j = 0; j < pw.size(); ++j)
            pw[j] = (cfg.p - 1.0) * std::pow(std::abs(pw[j]), cfg.p - 2.0);
    }
    SpectralVec x = basis.zero();
    SpectralVec r = -g;
    SpectralVec d = r;
    double rs = r.squaredNorm();
    const double rs0 = rs;
    for (long k = 0; k < 40L * basis.d() && rs > 1e-24 * rs0; ++k) {
        SpectralVec Hd = hessian_apply(basis, cfg, pw, d);
        double dHd = d.dot(Hd);
        if (dHd <= 0.0) break; // nonconvex curvature, keep the partial solve
        double a = rs / dHd;
        x += a * d;
        r -= a * Hd;
        double rs_next = r.squaredNorm();
        d = r + (rs_next / rs) * d;
        rs = rs_next;
    }
    return x;
}

} // namespace

double I_functional(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v) {
    GridField V = basis.synthesize(v);
    double quad = 0.5 * basis.eigenvalues().cwiseProduct(v).dot(v);
    double pterm = p_power_integral(basis, V, cfg.p) / cfg.p;
    double gterm = 0.5 * cfg.ell_gain * v.squaredNorm();
    return quad + pterm - gterm;
}

SpectralVec I_gradient(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v) {
    GridField V = basis.synthesize(v);
    p_power_map(V, cfg.p);
    SpectralVec g = basis.analyze(V);
    g += basis.eigenvalues().cwiseProduct(v);
    g -= cfg.ell_gain * v;
    return g;
}

double elliptic_residual(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v) {
    return I_gradient(basis, cfg, v).norm();
}

MinimizerReport minimize_I(const SpectralBasis& basis, const DNLConfig& cfg,
                           const BranchConfig& bcfg, const SpectralVec& init) {
    if (cfg.rho != 2.0)
        throw std::invalid_argument("minimize_I: branch construction requires rho == 2");

    MinimizerReport rep;
    SpectralVec v;
    if (init.size() == basis.d()) {
        v = init;
    } else {
        double lam1 = basis.eigenvalue(1);
        if (cfg.ell_gain <= lam1) {
            v = basis.zero();
        } else {
            GridField E1 = basis.synthesize(basis.unit_mode(1));
            double ip = 0.0;
            for (int j = 0; j < E1.size(); ++j) ip += std::pow(std::abs(E1[j]), cfg.p);
            ip /= double(E1.size() + 1);
            double s = std::pow((cfg.ell_gain - lam1) / ip, 1.0 / (cfg.p - 2.0));
            v = s * basis.unit_mode(1);
        }
    }

    const double c_armijo = 1e-4;
    // descent handles the global approach; sufficient-decrease tests drown in
    // function-value rounding long before tight gradient targets, so the last
    // stretch is damped Newton on the gradient norm
    const double coarse_tol = std::max(bcfg.grad_tol, 1e-3);
    double Iv = I_functional(basis, cfg, v);
    double step = 1.0 / basis.eigenvalue(basis.d());
    rep.descent_monotone = true;

    long it = 0;
    for (; it < bcfg.max_iter; ++it) {
        SpectralVec g = I_gradient(basis, cfg, v);
        double gn = g.norm();
        if (gn <= coarse_tol) break;
        double t = step * 2.0;
        double In = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            In = I_functional(basis, cfg, v - t * g);
            if (In <= Iv - c_armijo * t * gn * gn) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break; // stalled at rounding level
        if (In > Iv) rep.descent_monotone = false;
        v -= t * g;
        Iv = In;
        step = t;
    }

    double gn = I_gradient(basis, cfg, v).norm();
    for (int nw = 0; nw < 60 && gn > bcfg.grad_tol && it < bcfg.max_iter; ++nw, ++it) {
        SpectralVec g = I_gradient(basis, cfg, v);
        SpectralVec dv = newton_direction(basis, cfg, v, g);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            SpectralVec vn = v + t * dv;
            double gnn = I_gradient(basis, cfg, vn).norm();
            if (gnn < gn) {
                v = vn;
                gn = gnn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }
    rep.converged = gn <= bcfg.grad_tol;

    rep.v_star = v;
    rep.I_value = I_functional(basis, cfg, v);
    rep.grad_norm = gn;
    rep.iterations = it;
    return rep;
}

BranchSolution assemble_branch(const SpectralBasis& basis, const DNLConfig& cfg,
                               const MinimizerReport& min_rep, double t_star, int sign, double T) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("assemble_branch: sign must be +-1");
    if (t_star < 0.0 || t_star > T) throw std::invalid_argument("assemble_branch: t_star outside [0, T]");

    BranchSolution b;
    b.t_star = t_star;
    b.sign = sign;
    b.T = T;
    b.v_star = min_rep.v_star;

    double pp = cfg.p / (cfg.p - 1.0);
    double q = 1.0 / (2.0 - pp);
    b.M1 = c_p_constant(cfg.p) * std::pow(T, q);
    GridField V = basis.synthesize(b.v_star);
    b.M2 = V.cwiseAbs().maxCoeff();
    if (b.M2 <= 0.0)
        throw std::invalid_argument("assemble_branch: zero minimizer carries no nontrivial branch");

    b.cfg = cfg;
    b.cfg.M = b.M1 * b.M2;

    // truncation must stay inactive: |u| <= M holds by construction, |du/dt|
    // can exceed it when thetadot_max = M1/(T(2-p')) > M1
    double thetadot_max = c_p_constant(cfg.p) * q * std::pow(T, q - 1.0);
    double worst = std::max(b.M1, thetadot_max) * b.M2;
    if (worst > b.cfg.M * (1.0 + 1e-12))
        throw std::runtime_error("assemble_branch: truncation violated (|du/dt| exceeds M)");
    return b;
}

SpectralVec branch_state(const BranchSolution& b, double t) {
    return double(b.sign) * theta_star(t, b.t_star, b.cfg.p) * b.v_star;
}

double ode_residual(double p, double t_star, double T, int grid_points) {
    double pp = p / (p - 1.0);
    double sup = 0.0;
    double h = T / double(grid_points - 1);
    for (int i = 0; i < grid_points; ++i) {
        double t = i * h;
        if (std::abs(t - t_star) < 0.5 * h) continue;
        double th = theta_star(t, t_star, p);
        double thd = theta_star_dot(t, t_star, p);
        double rhs = (th == 0.0) ? 0.0 : std::pow(std::abs(th), pp - 2.0) * th;
        sup = std::max(sup, std::abs(thd - rhs));
    }
    return sup;
}

double pde_residual(const SpectralBasis& basis, const BranchSolution& b, int grid_points) {
    ScalarOps ops(b.cfg);
    GridField V = basis.synthesize(b.v_star);
    double sup = 0.0;
    double h = b.T / double(grid_points - 1);
    GridField work(V.size());
    for (int i = 0; i < grid_points; ++i) {
        double t = i * h;
        if (std::abs(t - b.t_star) < 0.5 * h) continue;
        double th = double(b.sign) * theta_star(t, b.t_star, b.cfg.p);
        double thd = double(b.sign) * theta_star_dot(t, b.t_star, b.cfg.p);

        for (int j = 0; j < V.size(); ++j) work[j] = ops.alpha(thd * V[j]);
        SpectralVec r = basis.analyze(work);
        r += th * basis.eigenvalues().cwiseProduct(b.v_star);
        for (int j = 0; j < V.size(); ++j) work[j] = ops.ell(th * V[j]);
        r -= basis.analyze(work);

        GridField field = basis.synthesize(r);
        sup = std::max(sup, field.cwiseAbs().maxCoeff());
    }
    return sup;
}

double branch_distance_grid(const SpectralBasis& basis, const BranchSolution& a,
                            const BranchSolution& b, int grid_points) {
    if (a.T != b.T) throw std::invalid_argument("branch_distance_grid: horizons differ");
    double h = a.T / double(grid_points - 1);
    double acc = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        double t = i * h;
        double d2 = (branch_state(a, t) - branch_state(b, t)).squaredNorm();
        double w = (i == 0 || i == grid_points - 1) ? 0.5 : 1.0;
        acc += w * d2;
    }
    return std::sqrt(acc * h);
}

double branch_distance_closed_form(const SpectralBasis& basis, const BranchSolution& a,
                                   const BranchSolution& b) {
    if (a.T != b.T) throw std::invalid_argument("branch_distance_closed_form: horizons differ");
    double p = a.cfg.p;
    // piecewise-smooth theta products: exact Gauss-Legendre between the kinks
    std::vector<double> brk = {0.0, std::min(a.t_star, a.T), std::min(b.t_star, a.T), a.T};
    std::sort(brk.begin(), brk.end());
    auto integ = [&](double ta, double tb) {
        auto f = [&](double t) {
            double da = double(a.sign) * theta_star(t, a.t_star, p);
            double db = double(b.sign) * theta_star(t, b.t_star, p);
            return std::pair<double, double>(da, db);
        };
        double Iaa = 0.0, Iab = 0.0, Ibb = 0.0;
        QuadRule r = gauss_legendre(64, ta, tb);
        for (size_t i = 0; i < r.x.size(); ++i) {
            auto [da, db] = f(r.x[i]);
            Iaa += r.w[i] * da * da;
            Iab += r.w[i] * da * db;
            Ibb += r.w[i] * db * db;
        }
        return std::array<double, 3>{Iaa, Iab, Ibb};
    };
    double Iaa = 0.0, Iab = 0.0, Ibb = 0.0;
    for (size_t s = 0; s + 1 < brk.size(); ++s) {
        if (brk[s + 1] - brk[s] < 1e-15) continue;
        auto seg = integ(brk[s], brk[s + 1]);
        Iaa += seg[0];
        Iab += seg[1];
        Ibb += seg[2];
    }
    double vaa = a.v_star.squaredNorm();
    double vab = a.v_star.dot(b.v_star);
    double vbb = b.v_star.squaredNorm();
    double d2 = Iaa * vaa - 2.0 * Iab * vab + Ibb * vbb;
    return std::sqrt(std::max(0.0, d2));
}

} // namespace dnl
