#pragma once

// Diagonal spectral calculus for -Laplacian-type operators on (0,1) with
// Dirichlet sine eigenfunctions e_k(xi) = sqrt(2) sin(k pi xi) and
// eigenvalues lambda_k = (k pi)^rho. All state is carried as coefficient
// vectors in the first d modes; grid fields live on N >= 2d interior
// collocation nodes xi_j = j/(N+1) so that the discrete sine transform is an
// exact isometry on band-limited data.

#include <Eigen/Dense>

namespace dnl {

using SpectralVec = Eigen::VectorXd; // d mode coefficients
using GridField = Eigen::VectorXd;   // N collocation values

class SpectralBasis {
public:
    SpectralBasis(int d, double rho, int oversample = 2);

    int d() const { return d_; }
    int grid_size() const { return N_; }
    double rho() const { return rho_; }

    // lambda_k = (k pi)^rho, 1-based k
    double eigenvalue(int k) const;
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    const Eigen::VectorXd& nodes() const { return nodes_; }

    // mode-wise lambda_k^sigma x_k, sigma in [-1, 2]
    SpectralVec apply_frac_power(const SpectralVec& x, double sigma) const;

    // (I + mu L)^{-1} x, mu >= 0
    SpectralVec resolvent(const SpectralVec& x, double mu) const;

    // || L^sigma x ||_H = (sum lambda_k^{2 sigma} x_k^2)^{1/2}
    double norm_V_sigma(const SpectralVec& x, double sigma) const;

    GridField synthesize(const SpectralVec& x) const;
    SpectralVec analyze(const GridField& f) const;

    // discrete L^2(0,1) inner product of grid fields (weight 1/(N+1))
    double grid_inner(const GridField& f, const GridField& g) const;
    double grid_norm(const GridField& f) const;

    SpectralVec zero() const { return SpectralVec::Zero(d_); }
    SpectralVec unit_mode(int k) const;

private:
    int d_;
    int N_;
    double rho_;
    Eigen::VectorXd lambda_;
    Eigen::VectorXd nodes_;
    Eigen::MatrixXd synth_; // N x d, synth_(j,k) = sqrt(2) sin((k+1) pi xi_j)
};

} // namespace dnl
