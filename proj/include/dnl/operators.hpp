#pragma once

// Truncated scalar maps and the induced Nemytskii operators. alpha is the
// truncated power |x|^{p-2}x, continued linearly with slope (p-1)M^{p-2}
// beyond |x| = M so that alpha : R -> R is a bijection with the closed-form
// inverse below. K(x) = alpha_inv(F(x) - B(x)) - k_A (F(x) - B(x)) is the
// bounded drift correction; K_lambda uses the Yosida regularization of B.
// Nemytskii evaluation is pseudo-spectral: synthesize -> pointwise -> analyze.

#include "dnl/config.hpp"
#include "dnl/spectral.hpp"

namespace dnl {

class ScalarOps {
public:
    explicit ScalarOps(const DNLConfig& cfg);

    double alpha(double x) const;
    double alpha_inv(double v) const;
    double ell(double x) const;
    double kappa(double v) const { return alpha_inv(v) - kA_ * v; } // alpha_inv - k_A id
    double f(double x) const;                      // C_f tanh(x)
    double f_resolvent(double x, double lam) const; // y + lam f(y) = x
    double f_yosida(double x, double lam) const;    // f(f_resolvent(x, lam))

    const DNLConfig& cfg() const { return cfg_; }
    double k_A() const { return kA_; }

private:
    DNLConfig cfg_;
    double kA_, Mp1_;   // M^{p-1}
    double outer_a_;    // (p-1) M^{p-2}
    double outer_b_;    // (p-2) M^{p-1}
    double inv_exp_;    // 1/(p-1)
    bool cubic_;        // p == 3 fast path
};

// F(x) = Nemytskii ell, band-limited via the basis quadrature
SpectralVec F_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x);

// B = L (f folded in separately), diagonal
SpectralVec B_apply(const SpectralBasis& basis, const SpectralVec& x);

// B_lambda = L (I + lam L)^{-1}, diagonal multiplier lambda_k/(1 + lam lambda_k)
SpectralVec yosida_B(const SpectralBasis& basis, const SpectralVec& x, double lam);

SpectralVec K_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x);
SpectralVec K_lambda_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x,
                        double lam);

// Nemytskii f_lambda (zero map when C_f == 0)
SpectralVec f_lambda_op(const SpectralBasis& basis, const ScalarOps& ops, const SpectralVec& x,
                        double lam);

// Least-squares fit of the Hoelder exponent of alpha_inv on |v| <= M^{p-1}:
// slope of log sup_v |alpha_inv(v+h) - alpha_inv(v)| against log h.
double holder_exponent_fit(const ScalarOps& ops);

} // namespace dnl
