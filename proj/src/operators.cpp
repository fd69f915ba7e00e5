#include "dnl/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dnl {

namespace {
inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
} // namespace

ScalarOps::ScalarOps(const DNLConfig& cfg) : cfg_(cfg) {
    if (cfg.p <= 2.0) throw std::invalid_argument("ScalarOps: p must exceed 2");
    if (cfg.M <= 0.0) throw std::invalid_argument("ScalarOps: M must be positive");
    kA_ = cfg.k_A();
    Mp1_ = std::pow(cfg.M, cfg.p - 1.0);
    outer_a_ = (cfg.p - 1.0) * std::pow(cfg.M, cfg.p - 2.0);
    outer_b_ = (cfg.p - 2.0) * Mp1_;
    inv_exp_ = 1.0 / (cfg.p - 1.0);
    cubic_ = cfg.p == 3.0;
}

double ScalarOps::alpha(double x) const {
    double ax = std::abs(x);
    if (ax <= cfg_.M) {
        if (cubic_) return ax * x;
        return std::pow(ax, cfg_.p - 2.0) * x;
    }
    return outer_a_ * x - outer_b_ * sgn(x);
}

double ScalarOps::alpha_inv(double v) const {
    double av = std::abs(v);
    if (av <= Mp1_) {
        if (cubic_) return sgn(v) * std::sqrt(av);
        return sgn(v) * std::pow(av, inv_exp_);
    }
    return kA_ * (v + outer_b_ * sgn(v));
}

double ScalarOps::ell(double x) const {
    if (std::abs(x) <= cfg_.M) return cfg_.ell_gain * x;
    return cfg_.ell_gain * cfg_.M * sgn(x);
}

double ScalarOps::f(double x) const { return cfg_.C_f == 0.0 ? 0.0 : cfg_.C_f * std::tanh(x); }

double ScalarOps::f_resolvent(double x, double lam) const {
    if (cfg_.C_f == 0.0) return x;
    // y + lam C_f tanh(y) = x; the map is strictly increasing, Newton with
    // bisection safeguard
    double lo = x - lam * cfg_.C_f, hi = x + lam * cfg_.C_f;
    double y = x;
    for (int it = 0; it < 100; ++it) {
        double t = std::tanh(y);
        double g = y + lam * cfg_.C_f * t - x;
        if (std::abs(g) < 1e-14 * (1.0 + std::abs(x))) return y;
        if (g > 0.0) hi = y; else lo = y;
        double dg = 1.0 + lam * cfg_.C_f * (1.0 - t * t);
        double yn = y - g / dg;
        y = (yn > lo && yn < hi) ? yn : 0.5 * (lo + hi);
    }
    return y;
}

double ScalarOps::f_yosida(double x, double lam) const {
    if (cfg_.C_f == 0.0) return 0.0;
    return f(f_resolvent(x, lam));
}

SpectralVec F_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x) {
    GridField X = basis.synthesize(x);
    for (int j = 0; j < X.size(); ++j) X[j] = ops.ell(X[j]);
    return basis.analyze(X);
}

SpectralVec B_apply(const SpectralBasis& basis, const SpectralVec& x) {
    if (x.size() != basis.d()) throw std::invalid_argument("B_apply: dimension mismatch");
    return basis.eigenvalues().cwiseProduct(x);
}

SpectralVec yosida_B(const SpectralBasis& basis, const SpectralVec& x, double lam) {
    if (x.size() != basis.d()) throw std::invalid_argument("yosida_B: dimension mismatch");
    if (lam < 0.0) throw std::invalid_argument("yosida_B: lam must be >= 0");
    SpectralVec y(basis.d());
    const auto& lambda = basis.eigenvalues();
    for (int k = 0; k < basis.d(); ++k) y[k] = lambda[k] / (1.0 + lam * lambda[k]) * x[k];
    return y;
}

namespace {

SpectralVec K_from_w(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& w) {
    GridField W = basis.synthesize(w);
    for (int j = 0; j < W.size(); ++j) W[j] = ops.kappa(W[j]);
    return basis.analyze(W);
}

} // namespace

SpectralVec K_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x) {
    SpectralVec w = F_op(basis, ops, x) - B_apply(basis, x);
    return K_from_w(basis, ops, w);
}

SpectralVec K_lambda_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x,
                        double lam) {
    SpectralVec w = F_op(basis, ops, x) - yosida_B(basis, x, lam);
    return K_from_w(basis, ops, w);
}

SpectralVec f_lambda_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x,
                        double lam) {
    if (ops.cfg().C_f == 0.0) return SpectralVec::Zero(basis.d());
    GridField X = basis.synthesize(x);
    for (int j = 0; j < X.size(); ++j) X[j] = ops.f_yosida(X[j], lam);
    return basis.analyze(X);
}

double holder_exponent_fit(const ScalarOps& ops) {
    const double Mp1 = std::pow(ops.cfg().M, ops.cfg().p - 1.0);
    std::vector<double> logh, logs;
    for (double h = 1e-8; h < 1e-1; h *= 10.0) {
        double sup = 0.0;
        const int n = 2001;
        for (int i = 0; i < n; ++i) {
            double v = -Mp1 + (2.0 * Mp1 - h) * i / (n - 1);
            sup = std::max(sup, std::abs(ops.alpha_inv(v + h) - ops.alpha_inv(v)));
        }
        logh.push_back(std::log(h));
        logs.push_back(std::log(sup));
    }
    double n = double(logh.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < logh.size(); ++i) {
        sx += logh[i];
        sy += logs[i];
        sxx += logh[i] * logh[i];
        sxy += logh[i] * logs[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace dnl
