#pragma once

// Linear reference dynamics du = -diag(rate) u dt + diag(sqrt(q)) dW with
// closed-form Gaussian transition kernel: mean e^{-t rate} x, covariance
// Q_t = q (1 - e^{-2 t rate})/(2 rate). Semigroup averages and their
// integration-by-parts gradients are antithetic Monte Carlo, counter-seeded
// so repeated evaluations are deterministic.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dnl/config.hpp"
#include "dnl/spectral.hpp"

namespace dnl {

struct OUParams {
    SpectralVec rate; // per-mode linear drift rate r_k > 0
    SpectralVec q;    // noise covariance diagonal q_k = g_k^2
    double alpha = 2.0;

    // rate_k = lambda_k: the semigroup generated by L itself
    static OUParams spectral(const SpectralBasis& basis, const SpectralVec& amps, double alpha);
    // rate_k = k_A lambda_k/(1 + lam lambda_k): the exact linear drift of the
    // semi-implicit stepper, so the uniqueness identity matches the
    // simulated dynamics
    static OUParams matched(const SpectralBasis& basis, const DNLConfig& model, double yosida_lam,
                            const SpectralVec& amps, double alpha);
};

SpectralVec Qt_closed(const OUParams& p, double t);
SpectralVec Q_infinity(const OUParams& p);
SpectralVec ou_mean(const OUParams& p, double t, const SpectralVec& x);

struct Observable {
    std::string id;
    std::function<double(const SpectralVec&)> eval;
    double sup_bound = 1.0;
    double holder_const = 0.0; // informational; 0 = unrecorded
};

struct MCStat {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
};

// Antithetic Monte Carlo of E[phi(e^{-t rate} x + Y)], Y ~ N(0, Q_t). Each
// sample is an average of bounded values, so |mean| <= sup|phi| holds per
// realization, not just in expectation. t = 0 returns phi(x) exactly.
MCStat Rt_apply(const OUParams& p, const Observable& phi, double t, const SpectralVec& x,
                int mc_size, std::uint64_t seed);

struct GradientEstimate {
    SpectralVec grad;
    SpectralVec se;
    long n = 0;
};

// Gaussian integration by parts, valid for bounded measurable phi:
//   (D R_t phi)_k = e^{-t r_k} E[phi(m + Y) Y_k / Q_{t,k}].
// Realized with antithetic pairs 1/2(phi(m+Y) - phi(m-Y)) Y_k/Q_{t,k}, which
// keeps the variance of continuous observables bounded as t -> 0.
GradientEstimate Rt_gradient(const OUParams& p, const Observable& phi, double t,
                             const SpectralVec& x, int mc_size, std::uint64_t seed);

// One value + one gradient estimate sharing the same samples.
void Rt_apply_and_gradient(const OUParams& p, const Observable& phi, double t,
                           const SpectralVec& x, int mc_size, std::uint64_t seed, MCStat& value,
                           GradientEstimate& grad);

// Hard sign of each coordinate: the bounded discontinuous family whose
// gradient at 0 has the closed form e^{-t r_k} sqrt(2/pi)/sqrt(Q_{t,k}).
std::vector<Observable> sign_family(int d);

struct FellerProbe {
    std::vector<double> t;
    std::vector<double> sup_grad; // sup over the family of ||DR_t phi|| at x = 0
    std::vector<double> envelope; // C_R_emp t^{-(1/2+delta)}, for plotting
    double slope = 0.0;           // least-squares slope of log sup_grad vs log t
    double C_R_emp = 0.0;         // sup_t t^{1/2+delta} sup_grad / sup|phi|
};

// Probe window defaults to [1/max rate, 1/min rate] when t_lo/t_hi are 0.
FellerProbe feller_exponent_probe(const OUParams& p, const std::vector<Observable>& family,
                                  double delta, int probe_points, int probe_mc,
                                  std::uint64_t seed, double t_lo = 0.0, double t_hi = 0.0);

struct ContractionConstants {
    double C_R_emp = 0.0;
    double delta = 0.0;
    double perturbation = 0.0; // C_F + C'_A + C_f, the coarse drift bound
    double gamma_factor = 0.0; // Gamma(1/2 - delta)
    double alpha_0 = 0.0;      // ratio(alpha_0) = 1

    double ratio(double alpha) const;
    // sup ||D phi|| <= C1(alpha) ||g||_inf from the fixed-point estimate
    double C1(double alpha) const;
};

ContractionConstants contraction_constants(const DNLConfig& model, double C_R_emp);

} // namespace dnl
