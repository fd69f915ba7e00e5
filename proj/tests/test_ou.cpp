#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "dnl/ou.hpp"
#include "dnl/sde.hpp"

using namespace dnl;

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double eps) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 60);
}

Observable linear_mode(int k, double c) {
    Observable o;
    o.id = "linear";
    o.eval = [k, c](const SpectralVec& x) { return c * x[k]; };
    o.sup_bound = 1e30;
    return o;
}

} // namespace

TEST_CASE("reference dynamics parameter packs") {
    SpectralBasis basis(8, 2.0);
    SpectralVec amps = base_amplitudes(basis, 0.15);

    OUParams sp = OUParams::spectral(basis, amps, 2.0);
    CHECK(sp.rate.size() == 8);
    for (int k = 0; k < 8; ++k) {
        CHECK(sp.rate[k] == basis.eigenvalue(k + 1));
        CHECK(sp.q[k] == doctest::Approx(amps[k] * amps[k]).epsilon(1e-15));
    }

    DNLConfig model;
    OUParams ma = OUParams::matched(basis, model, 0.1, amps, 2.0);
    for (int k = 0; k < 8; ++k) {
        double lk = basis.eigenvalue(k + 1);
        CHECK(ma.rate[k] == doctest::Approx(0.25 * lk / (1.0 + 0.1 * lk)).epsilon(1e-15));
        CHECK(ma.rate[k] < model.k_A() / 0.1); // rates saturate at k_A / lam
    }
    for (int k = 1; k < 8; ++k) CHECK(ma.rate[k] > ma.rate[k - 1]);

    CHECK_THROWS_AS((void)OUParams::spectral(basis, SpectralVec::Ones(3), 2.0),
                    std::invalid_argument);
}

TEST_CASE("transition covariance closed form") {
    SpectralBasis basis(4, 2.0);
    OUParams p = OUParams::spectral(basis, SpectralVec::Ones(4), 2.0);

    // mode 1: rate pi^2, q = 1, t = 0.1
    SpectralVec Q = Qt_closed(p, 0.1);
    CHECK(Q[0] == doctest::Approx(0.04362327160560544).epsilon(1e-14));
    CHECK(Qt_closed(p, 0.0).norm() == 0.0);
    CHECK_THROWS_AS((void)Qt_closed(p, -0.1), std::invalid_argument);

    SpectralVec Qinf = Q_infinity(p);
    for (int k = 0; k < 4; ++k) {
        CHECK(Qinf[k] == doctest::Approx(1.0 / (2.0 * p.rate[k])).epsilon(1e-15));
        CHECK(Q[k] < Qinf[k]);
    }
    // t -> infinity saturates at the stationary variance
    CHECK((Qt_closed(p, 50.0) - Qinf).lpNorm<Eigen::Infinity>() < 1e-15);

    SUBCASE("agrees with direct quadrature of the variance integral") {
        for (double t : {0.01, 0.1, 1.0}) {
            SpectralVec Qt = Qt_closed(p, t);
            for (int k = 0; k < 4; ++k) {
                double r = p.rate[k];
                double ref = integrate_adaptive(
                    [r](double u) { return std::exp(-2.0 * r * u); }, 0.0, t, 1e-15);
                CHECK(Qt[k] == doctest::Approx(ref).epsilon(1e-10));
            }
        }
    }

    SUBCASE("two-step composition reproduces the kernel") {
        for (double t : {0.03, 0.4}) {
            for (double s : {0.02, 0.7}) {
                SpectralVec lhsQ = Qt_closed(p, t + s);
                SpectralVec rhsQ = Qt_closed(p, s);
                SpectralVec Qt = Qt_closed(p, t);
                SpectralVec x = SpectralVec::LinSpaced(4, 0.5, 2.0);
                SpectralVec m2 = ou_mean(p, s, ou_mean(p, t, x));
                SpectralVec m1 = ou_mean(p, t + s, x);
                for (int k = 0; k < 4; ++k) {
                    double comp = std::exp(-2.0 * s * p.rate[k]) * Qt[k] + rhsQ[k];
                    CHECK(lhsQ[k] == doctest::Approx(comp).epsilon(1e-12));
                    CHECK(m1[k] == doctest::Approx(m2[k]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("semigroup averages are bounded and exact where they should be") {
    SpectralBasis basis(4, 2.0);
    SpectralVec amps = base_amplitudes(basis, 0.15);
    OUParams p = OUParams::spectral(basis, amps, 2.0);
    SpectralVec x0 = SpectralVec::Zero(4);

    SUBCASE("t = 0 evaluates the observable directly") {
        Observable phi = linear_mode(1, 2.5);
        SpectralVec x(4);
        x << 0.3, -0.8, 0.1, 0.0;
        MCStat s = Rt_apply(p, phi, 0.0, x, 1000, 5);
        CHECK(s.mean == phi.eval(x));
        CHECK(s.se == 0.0);
        CHECK(s.n == 1);
        CHECK_THROWS_AS((void)Rt_apply(p, phi, -1.0, x, 1000, 5), std::invalid_argument);
    }

    SUBCASE("antithetic pairing is exact for linear observables") {
        Observable phi = linear_mode(2, 1.7);
        MCStat at0 = Rt_apply(p, phi, 0.2, x0, 2000, 11);
        CHECK(at0.mean == 0.0); // cancellation is exact in floating point
        CHECK(at0.se == 0.0);

        SpectralVec x(4);
        x << 0.4, -1.0, 0.6, 0.2;
        MCStat s = Rt_apply(p, phi, 0.2, x, 2000, 11);
        CHECK(s.mean == doctest::Approx(phi.eval(ou_mean(p, 0.2, x))).epsilon(1e-12));
        CHECK(s.se < 1e-12);
    }

    SUBCASE("averages of bounded observables never leave the bound") {
        auto family = sign_family(4);
        for (double t : {0.001, 0.05, 1.0}) {
            for (const auto& phi : family) {
                MCStat s = Rt_apply(p, phi, t, x0, 500, 23);
                CHECK(std::abs(s.mean) <= phi.sup_bound);
            }
        }
        MCStat a = Rt_apply(p, family[0], 0.05, x0, 500, 23);
        MCStat b = Rt_apply(p, family[0], 0.05, x0, 500, 23);
        CHECK(a.mean == b.mean); // counter-seeded determinism
    }
}

TEST_CASE("integration-by-parts gradient") {
    SpectralBasis basis(4, 2.0);
    SpectralVec amps = base_amplitudes(basis, 0.15);
    OUParams p = OUParams::spectral(basis, amps, 2.0);
    SpectralVec x0 = SpectralVec::Zero(4);

    SUBCASE("hard sign family matches its closed-form gradient at the origin") {
        auto family = sign_family(4);
        double t = 0.1;
        SpectralVec Q = Qt_closed(p, t);
        for (int k = 0; k < 4; ++k) {
            GradientEstimate g = Rt_gradient(p, family[k], t, x0, 200000, 31 + k);
            double closed = std::exp(-t * p.rate[k]) * 0.7978845608028654 / std::sqrt(Q[k]);
            CHECK(std::abs(g.grad[k] - closed) <= 5.0 * g.se[k] + 1e-12);
            // off-diagonal components vanish in expectation
            for (int j = 0; j < 4; ++j)
                if (j != k) CHECK(std::abs(g.grad[j]) <= 5.0 * g.se[j] + 1e-12);
        }
    }

    SUBCASE("matches a common-noise finite difference for a smooth observable") {
        Observable phi;
        phi.id = "tanh_mode_1";
        phi.eval = [](const SpectralVec& x) { return std::tanh(x[0]); };
        phi.sup_bound = 1.0;
        SpectralVec x(4);
        x << 0.3, -0.2, 0.0, 0.1;
        double t = 0.05;
        GradientEstimate g = Rt_gradient(p, phi, t, x, 200000, 47);
        double h = 1e-4;
        SpectralVec xp = x, xm = x;
        xp[0] += h;
        xm[0] -= h;
        double fd = (Rt_apply(p, phi, t, xp, 200000, 47).mean -
                     Rt_apply(p, phi, t, xm, 200000, 47).mean) /
                    (2.0 * h);
        CHECK(g.grad[0] == doctest::Approx(fd).epsilon(0.05));
        CHECK(g.grad[0] > 0.1);
    }

    SUBCASE("joint evaluation shares the sample stream") {
        Observable phi;
        phi.id = "tanh_mode_2";
        phi.eval = [](const SpectralVec& x) { return std::tanh(x[1]); };
        phi.sup_bound = 1.0;
        SpectralVec x(4);
        x << 0.1, 0.5, -0.3, 0.0;
        MCStat val;
        GradientEstimate grad;
        Rt_apply_and_gradient(p, phi, 0.2, x, 4000, 53, val, grad);
        MCStat val2 = Rt_apply(p, phi, 0.2, x, 4000, 53);
        GradientEstimate grad2 = Rt_gradient(p, phi, 0.2, x, 4000, 53);
        CHECK(val.mean == val2.mean);
        CHECK(val.se == val2.se);
        CHECK((grad.grad - grad2.grad).norm() == 0.0);
        CHECK_THROWS_AS(Rt_apply_and_gradient(p, phi, 0.0, x, 100, 1, val, grad),
                        std::invalid_argument);
    }
}

TEST_CASE("regularization exponent probe on the spectral semigroup") {
    SpectralBasis basis(16, 2.0);
    SpectralVec amps = base_amplitudes(basis, 0.15);
    OUParams p = OUParams::spectral(basis, amps, 2.0);
    auto family = sign_family(16);

    FellerProbe probe = feller_exponent_probe(p, family, 0.15, 9, 4000, 61);
    REQUIRE(probe.t.size() == 9);
    CHECK(probe.t.front() == doctest::Approx(1.0 / basis.eigenvalue(16)).epsilon(1e-12));
    CHECK(probe.t.back() == doctest::Approx(1.0 / basis.eigenvalue(1)).epsilon(1e-12));
    // closed-form prediction for this family and window: slope about -0.68
    CHECK(std::abs(probe.slope + 0.65) < 0.2);
    CHECK(probe.C_R_emp > 0.3);
    CHECK(probe.C_R_emp < 1.0);
    for (size_t i = 0; i < probe.t.size(); ++i)
        CHECK(probe.sup_grad[i] <= probe.envelope[i] * (1.0 + 1e-12));

    CHECK_THROWS_AS((void)feller_exponent_probe(p, {}, 0.15, 9, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)feller_exponent_probe(p, family, 0.15, 1, 100, 1),
                    std::invalid_argument);
}

TEST_CASE("fixed-point contraction bookkeeping") {
    DNLConfig model;
    ContractionConstants c = contraction_constants(model, 0.57);
    CHECK(c.delta == 0.15);
    CHECK(c.gamma_factor == doctest::Approx(2.546146977212288).epsilon(1e-14)); // Gamma(0.35)
    CHECK(c.perturbation == doctest::Approx(33.0 + 3.1622776601683795).epsilon(1e-14));
    CHECK(c.ratio(c.alpha_0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.ratio(2.0 * c.alpha_0) == doctest::Approx(std::pow(2.0, -0.35)).epsilon(1e-12));
    CHECK(c.ratio(4.0 * c.alpha_0) < c.ratio(2.0 * c.alpha_0));
    CHECK(std::isinf(c.C1(0.5 * c.alpha_0)));
    double c1 = c.C1(2.0 * c.alpha_0);
    CHECK(c1 > 0.0);
    CHECK(std::isfinite(c1));

    model.C_f = 2.0;
    ContractionConstants cf = contraction_constants(model, 0.57);
    CHECK(cf.perturbation == doctest::Approx(c.perturbation + 2.0).epsilon(1e-14));
    CHECK(cf.alpha_0 > c.alpha_0);
}
