#pragma once

// Contraction solver for the discounted Kolmogorov equation of the
// regularized dynamics: psi = S_alpha psi with
//   (S_alpha psi)(x) = int_0^inf e^{-alpha t} R_t[ g + (k_A F + K_lam
//                      - k_A f_lam, D psi) ](x) dt,
// values and gradients maintained on a tensor design grid with thin-plate
// radial basis interpolation, the time integral regularized by the
// substitution tau = t^{1/2-delta} (flattening the t^{-(1/2+delta)} gradient
// singularity), and every Monte Carlo average counter-seeded independently of
// the sweep index (common random numbers), so the realized map is a
// deterministic contraction.

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dnl/config.hpp"
#include "dnl/ou.hpp"
#include "dnl/spectral.hpp"

namespace dnl {

// Thin-plate kernel r^2 log r with a linear polynomial tail on fixed design
// points; inputs are clamped componentwise to the design cube, so every
// interpolant is globally bounded (it represents a C_b function).
class RbfDesign {
  public:
    RbfDesign(const Eigen::MatrixXd& points, double clamp_radius);

    int size() const { return int(pts_.rows()); }
    int dim() const { return int(pts_.cols()); }
    const Eigen::MatrixXd& points() const { return pts_; }
    double clamp_radius() const { return radius_; }

    Eigen::VectorXd clamp(const Eigen::VectorXd& y) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& values) const; // size + 1 + dim coefficients
    double evaluate(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& y) const;

  private:
    Eigen::MatrixXd pts_;
    double radius_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// Tensor grid of points_per_axis^dim nodes over [-radius, radius]^dim.
Eigen::MatrixXd tensor_design(int dim, int points_per_axis, double radius);

struct KolmogorovSolution {
    Eigen::MatrixXd design;    // N x dim
    Eigen::VectorXd values;    // psi at design points
    Eigen::MatrixXd gradients; // N x dim

    std::vector<double> sup_diffs; // per-sweep sup |psi_new - psi_old|
    std::vector<double> ratios;    // consecutive sup_diff ratios
    bool converged = false;
    bool contraction_suspect = false; // stalled with ratio >= 1

    double alpha = 0.0;
    double T_max = 0.0;
    double tail_bound = 0.0;  // bound on the discarded time-integral tail
    double value_se_sup = 0.0; // sup over design points of the MC se of psi
    double grad_sup = 0.0;     // sup design-point gradient norm at exit
    int mc_size_final = 0;

    std::shared_ptr<RbfDesign> rbf;
    Eigen::VectorXd value_coeffs;
    std::vector<Eigen::VectorXd> grad_coeffs;

    double value_at(const Eigen::VectorXd& y) const;
    Eigen::VectorXd gradient_at(const Eigen::VectorXd& y) const;
};

// drift_on = false drops the (drift, D psi) coupling entirely (pure OU
// resolvent, the linear oracle regime). basis.d() must be <= 3.
KolmogorovSolution kolmogorov_fixed_point(const SpectralBasis& basis, const DNLConfig& model,
                                          const OUKolmogorovConfig& kcfg, const OUParams& ou,
                                          const Observable& g, double yosida_lam, bool drift_on,
                                          std::uint64_t seed, int workers);

struct ResolventCheck {
    double psi_value = 0.0;
    double psi_radius = 0.0;
    double mc_value = 0.0;
    double mc_se = 0.0;
    double mc_radius = 0.0;
    double tail_bound = 0.0;
    bool overlap = false;
    long ensemble = 0;
    double T_sim = 0.0;
    double dt = 0.0;
};

// Independent two-sided estimate of the discounted observable: psi(u0) from
// the fixed point versus the trajectory Monte Carlo of
// E int_0^inf e^{-alpha t} g(u(t)) dt with unmollified noise and the same
// yosida_lam. Requires C_f = 0 (the stepper integrates no f term).
ResolventCheck resolvent_identity_check(const SpectralBasis& basis, const DNLConfig& model,
                                        const OUKolmogorovConfig& kcfg,
                                        const KolmogorovSolution& sol, const Observable& g,
                                        double yosida_lam, const SpectralVec& u0, long ensemble,
                                        std::uint64_t seed, int workers);

} // namespace dnl
