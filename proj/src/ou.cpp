#include "dnl/ou.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnl/rng.hpp"

namespace dnl {

OUParams OUParams::spectral(const SpectralBasis& basis, const SpectralVec& amps, double alpha) {
    if (amps.size() != basis.d()) throw std::invalid_argument("OUParams: amplitude size mismatch");
    OUParams p;
    p.rate = basis.eigenvalues();
    p.q = amps.cwiseProduct(amps);
    p.alpha = alpha;
    return p;
}

OUParams OUParams::matched(const SpectralBasis& basis, const DNLConfig& model, double yosida_lam,
                           const SpectralVec& amps, double alpha) {
    if (amps.size() != basis.d()) throw std::invalid_argument("OUParams: amplitude size mismatch");
    OUParams p;
    p.rate.resize(basis.d());
    double kA = model.k_A();
    for (int k = 0; k < basis.d(); ++k) {
        double lk = basis.eigenvalue(k + 1);
        p.rate[k] = kA * lk / (1.0 + yosida_lam * lk);
    }
    p.q = amps.cwiseProduct(amps);
    p.alpha = alpha;
    return p;
}

SpectralVec Qt_closed(const OUParams& p, double t) {
    if (t < 0.0) throw std::invalid_argument("Qt_closed: t must be >= 0");
    SpectralVec Q(p.rate.size());
    for (int k = 0; k < p.rate.size(); ++k)
        Q[k] = p.q[k] * (1.0 - std::exp(-2.0 * t * p.rate[k])) / (2.0 * p.rate[k]);
    return Q;
}

SpectralVec Q_infinity(const OUParams& p) {
    SpectralVec Q(p.rate.size());
    for (int k = 0; k < p.rate.size(); ++k) Q[k] = p.q[k] / (2.0 * p.rate[k]);
    return Q;
}

SpectralVec ou_mean(const OUParams& p, double t, const SpectralVec& x) {
    if (x.size() != p.rate.size()) throw std::invalid_argument("ou_mean: dimension mismatch");
    SpectralVec m(p.rate.size());
    for (int k = 0; k < p.rate.size(); ++k) m[k] = std::exp(-t * p.rate[k]) * x[k];
    return m;
}

namespace {

void draw_gaussian(SpectralVec& xi, std::uint64_t seed, long sample) {
    for (int k = 0; k < xi.size(); ++k) {
        CounterKey key{seed, std::uint64_t(sample), 0, std::uint64_t(k), 0};
        xi[k] = gaussian(key);
    }
}

} // namespace

MCStat Rt_apply(const OUParams& p, const Observable& phi, double t, const SpectralVec& x,
                int mc_size, std::uint64_t seed) {
    MCStat out;
    if (t == 0.0) {
        out.mean = phi.eval(x);
        out.n = 1;
        return out;
    }
    if (t < 0.0) throw std::invalid_argument("Rt_apply: t must be >= 0");
    long pairs = std::max(1L, long(mc_size) / 2);
    SpectralVec m = ou_mean(p, t, x);
    SpectralVec sq = Qt_closed(p, t).cwiseMax(0.0).cwiseSqrt();
    SpectralVec xi(p.rate.size()), y(p.rate.size());
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < pairs; ++i) {
        draw_gaussian(xi, seed, i);
        y = sq.cwiseProduct(xi);
        double a = 0.5 * (phi.eval(m + y) + phi.eval(m - y));
        sum += a;
        sum2 += a * a;
    }
    out.mean = sum / pairs;
    out.n = 2 * pairs;
    if (pairs > 1) {
        double var = (sum2 - sum * sum / pairs) / (pairs - 1);
        out.se = std::sqrt(std::max(0.0, var) / pairs);
    }
    return out;
}

GradientEstimate Rt_gradient(const OUParams& p, const Observable& phi, double t,
                             const SpectralVec& x, int mc_size, std::uint64_t seed) {
    MCStat value;
    GradientEstimate grad;
    Rt_apply_and_gradient(p, phi, t, x, mc_size, seed, value, grad);
    return grad;
}

void Rt_apply_and_gradient(const OUParams& p, const Observable& phi, double t,
                           const SpectralVec& x, int mc_size, std::uint64_t seed, MCStat& value,
                           GradientEstimate& grad) {
    if (t <= 0.0) throw std::invalid_argument("Rt_apply_and_gradient: t must be > 0");
    int d = int(p.rate.size());
    SpectralVec Q = Qt_closed(p, t);
    for (int k = 0; k < d; ++k)
        if (Q[k] < 1e-300) throw std::runtime_error("Rt_gradient: degenerate covariance mode");

    long pairs = std::max(1L, long(mc_size) / 2);
    SpectralVec m = ou_mean(p, t, x);
    SpectralVec sq = Q.cwiseSqrt();
    SpectralVec decay(d);
    for (int k = 0; k < d; ++k) decay[k] = std::exp(-t * p.rate[k]);

    SpectralVec xi(d), y(d);
    SpectralVec gsum = SpectralVec::Zero(d), gsum2 = SpectralVec::Zero(d);
    double vsum = 0.0, vsum2 = 0.0;
    for (long i = 0; i < pairs; ++i) {
        draw_gaussian(xi, seed, i);
        y = sq.cwiseProduct(xi);
        double fp = phi.eval(m + y);
        double fm = phi.eval(m - y);
        double a = 0.5 * (fp + fm);
        double b = 0.5 * (fp - fm);
        vsum += a;
        vsum2 += a * a;
        for (int k = 0; k < d; ++k) {
            double g = decay[k] * b * y[k] / Q[k];
            gsum[k] += g;
            gsum2[k] += g * g;
        }
    }
    value.mean = vsum / pairs;
    value.n = 2 * pairs;
    value.se = 0.0;
    grad.grad = gsum / double(pairs);
    grad.se = SpectralVec::Zero(d);
    grad.n = 2 * pairs;
    if (pairs > 1) {
        double vvar = (vsum2 - vsum * vsum / pairs) / (pairs - 1);
        value.se = std::sqrt(std::max(0.0, vvar) / pairs);
        for (int k = 0; k < d; ++k) {
            double gvar = (gsum2[k] - gsum[k] * gsum[k] / pairs) / (pairs - 1);
            grad.se[k] = std::sqrt(std::max(0.0, gvar) / pairs);
        }
    }
}

std::vector<Observable> sign_family(int d) {
    std::vector<Observable> family;
    family.reserve(d);
    for (int k = 0; k < d; ++k) {
        Observable o;
        o.id = "sign_mode_" + std::to_string(k + 1);
        o.eval = [k](const SpectralVec& x) { return x[k] > 0.0 ? 1.0 : (x[k] < 0.0 ? -1.0 : 0.0); };
        o.sup_bound = 1.0;
        family.push_back(std::move(o));
    }
    return family;
}

FellerProbe feller_exponent_probe(const OUParams& p, const std::vector<Observable>& family,
                                  double delta, int probe_points, int probe_mc,
                                  std::uint64_t seed, double t_lo, double t_hi) {
    if (family.empty()) throw std::invalid_argument("feller_exponent_probe: empty family");
    if (t_lo <= 0.0 || t_hi <= 0.0) {
        t_lo = 1.0 / p.rate.maxCoeff();
        t_hi = 1.0 / p.rate.minCoeff();
    }
    if (!(t_hi > t_lo)) throw std::invalid_argument("feller_exponent_probe: empty window");
    if (probe_points < 2) throw std::invalid_argument("feller_exponent_probe: need >= 2 points");

    double sup_phi = 0.0;
    for (const auto& o : family) sup_phi = std::max(sup_phi, o.sup_bound);

    FellerProbe probe;
    SpectralVec x0 = SpectralVec::Zero(p.rate.size());
    for (int i = 0; i < probe_points; ++i) {
        double lt = std::log(t_lo) + (std::log(t_hi) - std::log(t_lo)) * i / (probe_points - 1);
        double t = std::exp(lt);
        double sup = 0.0;
        for (size_t j = 0; j < family.size(); ++j) {
            GradientEstimate g =
                Rt_gradient(p, family[j], t, x0, probe_mc, mix64(seed ^ (j * 1000003 + i)));
            sup = std::max(sup, g.grad.norm());
        }
        probe.t.push_back(t);
        probe.sup_grad.push_back(sup);
        probe.C_R_emp = std::max(probe.C_R_emp, std::pow(t, 0.5 + delta) * sup / sup_phi);
    }
    for (double t : probe.t)
        probe.envelope.push_back(probe.C_R_emp * sup_phi * std::pow(t, -(0.5 + delta)));

    double n = probe_points, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < probe_points; ++i) {
        double lx = std::log(probe.t[i]), ly = std::log(probe.sup_grad[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    probe.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return probe;
}

double ContractionConstants::ratio(double alpha) const {
    return C_R_emp * std::pow(alpha, delta - 0.5) * gamma_factor * perturbation;
}

double ContractionConstants::C1(double alpha) const {
    double r = ratio(alpha);
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    return C_R_emp * gamma_factor * std::pow(alpha, delta - 0.5) / (1.0 - r);
}

ContractionConstants contraction_constants(const DNLConfig& model, double C_R_emp) {
    ContractionConstants c;
    c.C_R_emp = C_R_emp;
    c.delta = model.delta;
    c.perturbation = model.C_F() + model.C_A_prime_paper() + model.C_f;
    c.gamma_factor = std::tgamma(0.5 - model.delta);
    double beta = 0.5 - model.delta;
    c.alpha_0 = std::pow(C_R_emp * c.gamma_factor * c.perturbation, 1.0 / beta);
    return c;
}

} // namespace dnl
