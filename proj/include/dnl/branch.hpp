#pragma once

// Deterministic nonuniqueness laboratory for the rho = 2 Laplacian case.
// theta_star solves thetadot = |theta|^{p'-2} theta with p' = p/(p-1), giving
// the delayed-ignition family theta_*(t) = c_p ((t - t_star)^+)^{1/(2-p')};
// v_star is a nontrivial minimizer of
//   I(v) = int ( |v'|^2/2 + |v|^p/p - ell_gain v^2/2 ),
// and u = sign * theta_*(t) * v_star(x) solves the truncated equation
// alpha(du/dt) - Lap u = ell(u) whenever the truncation stays inactive, which
// pins the config M to M1*M2 = max|theta| * max|v_star|.

#include <vector>

#include "dnl/config.hpp"
#include "dnl/operators.hpp"
#include "dnl/spectral.hpp"

namespace dnl {

double theta_star(double t, double t_star, double p);
double theta_star_dot(double t, double t_star, double p);
double c_p_constant(double p); // (2-p')^{1/(2-p')}

struct MinimizerReport {
    SpectralVec v_star;
    double I_value = 0.0;
    double grad_norm = 0.0;
    long iterations = 0;
    bool converged = false;
    bool descent_monotone = true; // I decreased at every accepted step
};

double I_functional(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v);
SpectralVec I_gradient(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v);

// || L v + |v|^{p-2} v - ell_gain v ||_H with the Nemytskii term band-limited
double elliptic_residual(const SpectralBasis& basis, const DNLConfig& cfg, const SpectralVec& v);

// Plain gradient descent with Armijo backtracking (c = 1e-4, shrink 1/2,
// warm-started step). init empty = default initialization: 0 when
// ell_gain <= lambda_1, else the optimal multiple of e_1.
MinimizerReport minimize_I(const SpectralBasis& basis, const DNLConfig& cfg,
                           const BranchConfig& bcfg, const SpectralVec& init = SpectralVec());

struct BranchSolution {
    double t_star = 0.0;
    int sign = 1;
    double T = 2.0;
    SpectralVec v_star;
    double M1 = 0.0; // max |theta| on [0, T]
    double M2 = 0.0; // max |v_star| on the grid
    DNLConfig cfg;   // effective config, M = M1 * M2
};

// Errors if |u| or |du/dt| would exceed the effective M anywhere (truncation
// must stay inactive on the branch family).
BranchSolution assemble_branch(const SpectralBasis& basis, const DNLConfig& cfg,
                               const MinimizerReport& min_rep, double t_star, int sign, double T);

SpectralVec branch_state(const BranchSolution& b, double t);

// sup over the time grid (excluding a half-step around t_star) of
// |thetadot - |theta|^{p'-2} theta|
double ode_residual(double p, double t_star, double T, int grid_points);

// sup over the space-time grid of the band-limited residual field of
// alpha(du/dt) + L u - ell(u)
double pde_residual(const SpectralBasis& basis, const BranchSolution& b, int grid_points);

// L^2(0,T;H) distance between two branches sharing v_star: trapezoid on a
// sampled grid, and the closed-form value via exact piecewise quadrature of
// the theta difference.
double branch_distance_grid(const SpectralBasis& basis, const BranchSolution& a,
                            const BranchSolution& b, int grid_points);
double branch_distance_closed_form(const SpectralBasis& basis, const BranchSolution& a,
                                   const BranchSolution& b);

} // namespace dnl
