#include "dnl/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace dnl {

SpectralBasis::SpectralBasis(int d, double rho, int oversample) : d_(d), rho_(rho) {
    if (d < 1) throw std::invalid_argument("SpectralBasis: d must be >= 1");
    if (rho <= 0.0) throw std::invalid_argument("SpectralBasis: rho must be > 0");
    if (oversample < 2) throw std::invalid_argument("SpectralBasis: oversample must be >= 2");
    N_ = oversample * d;

    lambda_.resize(d_);
    for (int k = 0; k < d_; ++k) lambda_[k] = std::pow((k + 1) * M_PI, rho_);

    nodes_.resize(N_);
    for (int j = 0; j < N_; ++j) nodes_[j] = double(j + 1) / double(N_ + 1);

    synth_.resize(N_, d_);
    const double s2 = std::sqrt(2.0);
    for (int j = 0; j < N_; ++j)
        for (int k = 0; k < d_; ++k)
            synth_(j, k) = s2 * std::sin((k + 1) * M_PI * nodes_[j]);
}

double SpectralBasis::eigenvalue(int k) const {
    if (k < 1 || k > d_) throw std::out_of_range("eigenvalue: mode index out of range");
    return lambda_[k - 1];
}

SpectralVec SpectralBasis::apply_frac_power(const SpectralVec& x, double sigma) const {
    if (x.size() != d_) throw std::invalid_argument("apply_frac_power: dimension mismatch");
    if (sigma < -1.0 || sigma > 2.0) throw std::invalid_argument("apply_frac_power: sigma outside [-1, 2]");
    SpectralVec y(d_);
    for (int k = 0; k < d_; ++k) y[k] = std::pow(lambda_[k], sigma) * x[k];
    return y;
}

SpectralVec SpectralBasis::resolvent(const SpectralVec& x, double mu) const {
    if (x.size() != d_) throw std::invalid_argument("resolvent: dimension mismatch");
    if (mu < 0.0) throw std::invalid_argument("resolvent: mu must be >= 0");
    SpectralVec y(d_);
    for (int k = 0; k < d_; ++k) y[k] = x[k] / (1.0 + mu * lambda_[k]);
    return y;
}

double SpectralBasis::norm_V_sigma(const SpectralVec& x, double sigma) const {
    if (x.size() != d_) throw std::invalid_argument("norm_V_sigma: dimension mismatch");
    double s = 0.0;
    for (int k = 0; k < d_; ++k) {
        double w = std::pow(lambda_[k], 2.0 * sigma);
        s += w * x[k] * x[k];
    }
    return std::sqrt(s);
}

GridField SpectralBasis::synthesize(const SpectralVec& x) const {
    if (x.size() != d_) throw std::invalid_argument("synthesize: dimension mismatch");
    return synth_ * x;
}

SpectralVec SpectralBasis::analyze(const GridField& f) const {
    if (f.size() != N_) throw std::invalid_argument("analyze: grid size mismatch");
    return synth_.transpose() * f / double(N_ + 1);
}

double SpectralBasis::grid_inner(const GridField& f, const GridField& g) const {
    if (f.size() != N_ || g.size() != N_) throw std::invalid_argument("grid_inner: grid size mismatch");
    return f.dot(g) / double(N_ + 1);
}

double SpectralBasis::grid_norm(const GridField& f) const { return std::sqrt(grid_inner(f, f)); }

SpectralVec SpectralBasis::unit_mode(int k) const {
    if (k < 1 || k > d_) throw std::out_of_range("unit_mode: mode index out of range");
    SpectralVec x = SpectralVec::Zero(d_);
    x[k - 1] = 1.0;
    return x;
}

} // namespace dnl
