#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dnl/operators.hpp"
#include "dnl/rng.hpp"
#include "dnl/spectral.hpp"

using namespace dnl;

namespace {

DNLConfig default_model() { return DNLConfig{}; }

SpectralVec random_state(const SpectralBasis& basis, std::uint64_t seed, double amp) {
    SpectralVec x(basis.d());
    for (int k = 0; k < basis.d(); ++k)
        x[k] = amp * (2.0 * uniform01(counter_bits(CounterKey{seed, 0, 0,
                                                              static_cast<std::uint64_t>(k), 0})) -
                      1.0) /
               double(k + 1);
    return x;
}

} // namespace

TEST_CASE("truncated power map values on both branches") {
    ScalarOps ops(default_model()); // p = 3, M = 2
    CHECK(ops.alpha(1.0) == doctest::Approx(1.0));
    CHECK(ops.alpha(-1.5) == doctest::Approx(-2.25));
    CHECK(ops.alpha(2.0) == doctest::Approx(4.0));   // inner branch at the knee
    CHECK(ops.alpha(3.0) == doctest::Approx(8.0));   // 4x - 4 beyond the knee
    CHECK(ops.alpha(-3.0) == doctest::Approx(-8.0));
    CHECK(ops.alpha(0.0) == 0.0);

    DNLConfig c4 = default_model();
    c4.p = 4.0;
    ScalarOps ops4(c4);
    CHECK(ops4.alpha(1.5) == doctest::Approx(std::pow(1.5, 3.0)));
    // outer slope (p-1) M^{p-2} and offset (p-2) M^{p-1} keep alpha continuous
    CHECK(ops4.alpha(2.0 + 1e-12) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("alpha and alpha_inv invert each other across the knee") {
    for (double p : {3.0, 2.5, 4.0}) {
        DNLConfig cfg = default_model();
        cfg.p = p;
        ScalarOps ops(cfg);
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            double x = -10.0 * cfg.M + 20.0 * cfg.M * i / (n - 1);
            CHECK(ops.alpha_inv(ops.alpha(x)) == doctest::Approx(x).epsilon(1e-12));
        }
        double v = ops.alpha(cfg.M);
        CHECK(ops.alpha(ops.alpha_inv(v * 0.5)) == doctest::Approx(v * 0.5).epsilon(1e-12));
        CHECK(ops.alpha(ops.alpha_inv(v * 3.0)) == doctest::Approx(v * 3.0).epsilon(1e-12));
    }
}

TEST_CASE("derived constants of the truncated maps") {
    DNLConfig cfg = default_model();
    CHECK(cfg.k_A() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(cfg.s_A() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cfg.C_A() == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(cfg.C_F() == doctest::Approx(33.0).epsilon(1e-15));
    CHECK(cfg.C_A_prime_tight() == doctest::Approx(1.0).epsilon(1e-15));
    // sqrt((M + k_A M^{p-1})^2 + (k_A (p-2) M^{p-1})^2) = sqrt(9 + 1)
    CHECK(cfg.C_A_prime_paper() == doctest::Approx(3.1622776601683795).epsilon(1e-15));
    CHECK(cfg.lambda1() == doctest::Approx(9.869604401089358).epsilon(1e-15));
}

TEST_CASE("scalar drift correction is bounded by the tight constant") {
    ScalarOps ops(default_model());
    double Mp1 = std::pow(2.0, 2.0); // alpha(M) = M^{p-1}
    double sup = 0.0;
    const int n = 200001;
    for (int i = 0; i < n; ++i) {
        double v = -40.0 + 80.0 * i / (n - 1);
        sup = std::max(sup, std::abs(ops.kappa(v)));
    }
    CHECK(sup <= 1.0 + 1e-12);
    CHECK(ops.kappa(Mp1) == doctest::Approx(1.0).epsilon(1e-14)); // attained at v = M^{p-1}
    CHECK(ops.kappa(-Mp1) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("reaction saturates at the truncation level") {
    ScalarOps ops(default_model());
    CHECK(ops.ell(0.1) == doctest::Approx(1.1));
    CHECK(ops.ell(2.0) == doctest::Approx(22.0));
    CHECK(ops.ell(5.0) == doctest::Approx(22.0));
    CHECK(ops.ell(-5.0) == doctest::Approx(-22.0));
}

TEST_CASE("Nemytskii drift correction norm bounds") {
    SpectralBasis basis(32, 2.0);
    ScalarOps ops(default_model());
    for (double lam : {1.0, 0.1, 0.01}) {
        for (std::uint64_t s = 0; s < 200; ++s) {
            SpectralVec x = random_state(basis, 100 + s, 3.0);
            double norm = K_lambda_op(basis, ops, x, lam).norm();
            CHECK(norm <= 3.1622776601683795);
            CHECK(norm <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("Yosida multiplier identity and consistency order") {
    SpectralBasis basis(16, 2.0);
    SpectralVec x = random_state(basis, 17, 1.0);
    double lam = 0.05;
    SpectralVec blam = yosida_B(basis, x, lam);
    for (int k = 1; k <= 16; ++k) {
        double l = basis.eigenvalue(k);
        CHECK(blam[k - 1] == doctest::Approx(l / (1.0 + lam * l) * x[k - 1]).epsilon(1e-14));
    }
    // || B_lam x - B x || = lam || L^2 (I + lam L)^{-1} x ||, exact
    SpectralVec diff = blam - B_apply(basis, x);
    SpectralVec l2r = basis.apply_frac_power(basis.resolvent(x, lam), 2.0);
    CHECK(diff.norm() == doctest::Approx(lam * l2r.norm()).epsilon(1e-12));
    CHECK(diff.norm() <= lam * basis.apply_frac_power(x, 2.0).norm() * (1.0 + 1e-12));
}

TEST_CASE("F_op is the band-limited saturated reaction") {
    SpectralBasis basis(16, 2.0);
    ScalarOps ops(default_model());
    // small state: strictly linear regime, so F = ell_gain x exactly
    SpectralVec x = random_state(basis, 23, 0.01);
    SpectralVec fx = F_op(basis, ops, x);
    CHECK((fx - 11.0 * x).lpNorm<Eigen::Infinity>() < 1e-12);
    // large state: saturation caps the grid values at ell_gain M
    SpectralVec big = 100.0 * basis.unit_mode(1);
    GridField field = basis.synthesize(big);
    for (int j = 0; j < field.size(); ++j) field[j] = ops.ell(field[j]);
    CHECK(field.lpNorm<Eigen::Infinity>() <= 22.0 + 1e-12);
    CHECK((F_op(basis, ops, big) - basis.analyze(field)).norm() == 0.0);
}

TEST_CASE("K_op and K_lambda_op agree as lam tends to zero") {
    SpectralBasis basis(16, 2.0);
    ScalarOps ops(default_model());
    SpectralVec x = random_state(basis, 31, 0.5);
    SpectralVec k0 = K_op(basis, ops, x);
    double prev = 1e300;
    for (double lam : {1e-2, 1e-4, 1e-6}) {
        double gap = (K_lambda_op(basis, ops, x, lam) - k0).norm();
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("optional bounded reaction and its resolvent") {
    DNLConfig cfg = default_model();
    SUBCASE("disabled when C_f = 0") {
        ScalarOps ops(cfg);
        CHECK(ops.f(1.3) == 0.0);
        CHECK(ops.f_yosida(1.3, 0.1) == 0.0);
        SpectralBasis basis(8, 2.0);
        CHECK(f_lambda_op(basis, ops, basis.unit_mode(1), 0.1).norm() == 0.0);
    }
    SUBCASE("resolvent solves the monotone equation") {
        cfg.C_f = 2.0;
        ScalarOps ops(cfg);
        for (double lam : {0.01, 0.3, 2.0}) {
            for (double x : {-4.0, -0.3, 0.0, 0.7, 5.0}) {
                double y = ops.f_resolvent(x, lam);
                CHECK(y + lam * ops.f(y) == doctest::Approx(x).epsilon(1e-12));
            }
        }
        CHECK(std::abs(ops.f_yosida(0.4, 0.1)) <= 2.0);
    }
}

TEST_CASE("regularity exponent of the inverse map") {
    ScalarOps ops(default_model());
    double fit = holder_exponent_fit(ops);
    CHECK(fit == doctest::Approx(0.5).epsilon(0.1)); // within +-0.05 absolute
    CHECK(std::abs(fit - 0.5) <= 0.05);
}
