#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dnl/rng.hpp"
#include "dnl/stability.hpp"

using namespace dnl;

namespace {

Trajectory constant_trajectory(const SpectralVec& state, double T, double dt) {
    Trajectory traj;
    long steps = std::lround(T / dt);
    for (long m = 0; m <= steps; ++m) {
        traj.times.push_back(m * dt);
        traj.states.push_back(state);
    }
    return traj;
}

SpectralVec random_state(int d, std::uint64_t seed, double amp) {
    SpectralVec x(d);
    for (int k = 0; k < d; ++k)
        x[k] = amp * (2.0 * uniform01(counter_bits(CounterKey{seed, 0, 0,
                                                              static_cast<std::uint64_t>(k), 0})) -
                      1.0);
    return x;
}

} // namespace

TEST_CASE("limit coordinate scales") {
    SpectralBasis basis(16, 4.0);
    SpectralVec s = limit_scales(basis, 0.15, 3);
    REQUIRE(s.size() == 3);
    for (int k = 1; k <= 3; ++k) {
        double lam = basis.eigenvalue(k);
        // s_k^2 2 lambda_k = lambda_k^{-2 delta}, the stationary variance identity
        CHECK(s[k - 1] * s[k - 1] * 2.0 * lam ==
              doctest::Approx(std::pow(lam, -0.3)).epsilon(1e-13));
    }
    CHECK(s[1] < s[0]);
    CHECK(s[2] < s[1]);
    CHECK(limit_scales(basis, 0.15, 40).size() == 16); // clamped to the basis
}

TEST_CASE("bounded state observable catalog") {
    SpectralBasis basis(8, 2.0);
    SpectralVec s3 = limit_scales(basis, 0.15, 3);

    auto cat1 = catalog_state_observables(s3.head(1));
    auto cat2 = catalog_state_observables(s3.head(2));
    auto cat3 = catalog_state_observables(s3);
    CHECK(cat1.size() == 3);
    CHECK(cat2.size() == 5);
    CHECK(cat3.size() == 7);

    std::set<std::string> ids;
    for (const auto& o : cat3) ids.insert(o.id);
    CHECK(ids.size() == cat3.size());

    for (const auto& o : cat3) {
        CHECK(o.sup_bound == 1.0);
        CHECK(o.holder_const > 0.0);
        for (std::uint64_t t = 0; t < 60; ++t) {
            SpectralVec x = random_state(8, 300 + t, 5.0);
            CHECK(std::abs(o.eval(x)) <= 1.0);
        }
    }
    // the centered bump peaks at the origin
    CHECK(cat3[0].eval(SpectralVec::Zero(8)) == 1.0);
    CHECK(cat3[0].id == "bump0_m1");
}

TEST_CASE("path functional catalog and its evaluations") {
    SpectralBasis basis(8, 2.0);
    SpectralVec scales = limit_scales(basis, 0.15, 3);
    std::vector<double> times = {0.25, 0.5, 0.75, 1.0};
    auto cat = catalog_functionals(scales, 2.0, times);
    REQUIRE(cat.size() == 12);

    int disc = 0, snap = 0;
    std::set<std::string> ids;
    for (const auto& f : cat) {
        ids.insert(f.id);
        if (f.kind == PathFunctional::Kind::Discounted) disc++;
        else snap++;
    }
    CHECK(disc == 6);
    CHECK(snap == 6);
    CHECK(ids.size() == 12);

    CHECK_THROWS_AS((void)catalog_functionals(scales.head(1), 2.0, times),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)catalog_functionals(scales, 2.0, {}), std::invalid_argument);

    SUBCASE("discounted quadrature of a constant observable") {
        Observable one;
        one.id = "const_one";
        one.eval = [](const SpectralVec&) { return 1.0; };
        one.sup_bound = 1.0;
        Trajectory traj = constant_trajectory(SpectralVec::Zero(8), 2.0, 1.0 / 64.0);
        double tail = -1.0;
        double v = discounted_observable(traj, one, 2.0, &tail);
        double exact = (1.0 - std::exp(-4.0)) / 2.0;
        CHECK(v == doctest::Approx(exact).epsilon(1e-3));
        CHECK(tail == doctest::Approx(std::exp(-4.0) / 2.0).epsilon(1e-13));

        Trajectory stub;
        stub.times = {0.0};
        stub.states = {SpectralVec::Zero(8)};
        CHECK_THROWS_AS((void)discounted_observable(stub, one, 2.0, nullptr),
                        std::invalid_argument);
    }

    SUBCASE("snapshots pick the exact grid index") {
        double dt = 1.0 / 32.0;
        Trajectory traj;
        for (long m = 0; m <= 32; ++m) {
            traj.times.push_back(m * dt);
            SpectralVec x = SpectralVec::Zero(8);
            x[0] = double(m); // strictly increasing marker
            traj.states.push_back(x);
        }
        PathFunctional f;
        f.id = "probe";
        f.kind = PathFunctional::Kind::Snapshot;
        f.g.id = "mode1_raw";
        f.g.eval = [](const SpectralVec& x) { return x[0]; };
        f.g.sup_bound = 64.0;
        f.t_snap = 0.5;
        CHECK(eval_path_functional(f, traj) == 16.0);
        f.t_snap = 9.0; // beyond the horizon: clamps to the final state
        CHECK(eval_path_functional(f, traj) == 32.0);
    }
}

TEST_CASE("energy distance") {
    SUBCASE("two singletons") {
        Eigen::MatrixXd a(1, 3), b(1, 3);
        a << 1.0, 0.0, 2.0;
        b << -1.0, 1.0, 2.0;
        double gap = (a.row(0) - b.row(0)).norm();
        CHECK(energy_distance(a, b) == doctest::Approx(std::sqrt(2.0 * gap)).epsilon(1e-13));
        CHECK(energy_distance(a, a) == 0.0);
    }
    SUBCASE("identical clouds have zero distance") {
        Eigen::MatrixXd a(40, 2);
        for (int i = 0; i < 40; ++i) {
            a(i, 0) = uniform01(counter_bits(CounterKey{8, std::uint64_t(i), 0, 0, 0}));
            a(i, 1) = uniform01(counter_bits(CounterKey{8, std::uint64_t(i), 1, 0, 0}));
        }
        CHECK(energy_distance(a, a) < 1e-6);
        Eigen::MatrixXd b = a;
        b.array() += 2.0;
        CHECK(energy_distance(a, b) > 1.0);
        CHECK_THROWS_AS((void)energy_distance(Eigen::MatrixXd(0, 2), a),
                        std::invalid_argument);
    }
}

TEST_CASE("law distance between feature ensembles") {
    auto make_features = [](double shift, int n, std::uint64_t seed) {
        EnsembleFeatures f;
        f.functional_ids = {"f1", "f2"};
        f.functionals.resize(n, 2);
        f.snapshots.resize(n, 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) {
                double u =
                    uniform01(counter_bits(CounterKey{seed, std::uint64_t(i),
                                                      std::uint64_t(j), 0, 0}));
                f.functionals(i, j) = shift + u;
                f.snapshots(i, j) = shift + u;
            }
        return f;
    };

    EnsembleFeatures a = make_features(0.0, 300, 21);
    LawDistance self = law_distance(a, a, 60, 5);
    CHECK(self.mean_part == 0.0);
    CHECK(self.total < 1e-6);
    CHECK(self.radius >= 0.0);

    EnsembleFeatures b = make_features(3.0, 300, 22);
    LawDistance d = law_distance(a, b, 60, 5);
    CHECK(d.mean_part == doctest::Approx(3.0).epsilon(0.1));
    CHECK(d.energy_part > 1.0);
    CHECK(d.total == d.mean_part + d.energy_part);
    CHECK(d.total > 5.0 * d.radius);

    LawDistance d2 = law_distance(a, b, 60, 5);
    CHECK(d2.total == d.total); // counter-seeded bootstrap determinism
    CHECK(d2.radius == d.radius);
}

TEST_CASE("feature simulation is worker independent and scaled") {
    SpectralBasis basis(8, 4.0);
    DNLConfig model;
    model.rho = 4.0;
    SimConfig sim;
    sim.T = 1.0;
    sim.dt = 1.0 / 32.0;
    sim.ensemble_size = 12;
    sim.seed = 515;
    std::vector<double> times = {0.5, 1.0};
    SpectralVec scales = limit_scales(basis, sim.noise.delta, 3);
    auto cat = catalog_functionals(scales, 2.0, times);

    EnsembleFeatures f1 = simulate_features(basis, model, sim, cat, times, 1);
    EnsembleFeatures f3 = simulate_features(basis, model, sim, cat, times, 3);
    CHECK(f1.n_bad == 0);
    REQUIRE(f1.functionals.rows() == 12);
    CHECK((f1.functionals - f3.functionals).cwiseAbs().maxCoeff() == 0.0);
    CHECK((f1.snapshots - f3.snapshots).cwiseAbs().maxCoeff() == 0.0);
    CHECK(f1.energy.mean_sup_H2 == f3.energy.mean_sup_H2);

    // snapshot columns are the raw mode values divided by the limit scales
    Trajectory t2 = simulate_trajectory(basis, model, sim, 2);
    long idx = std::lround(0.5 / sim.dt);
    for (int k = 0; k < 3; ++k)
        CHECK(f1.snapshots(2, k) ==
              doctest::Approx(t2.states[idx][k] / scales[k]).epsilon(1e-14));

    // discounted functionals respect the discount bound up to trapezoid error
    for (int j = 0; j < 6; ++j)
        CHECK(f1.functionals.col(j).cwiseAbs().maxCoeff() <= 0.5 * (1.0 + 1e-3));
    for (int j = 6; j < 12; ++j)
        CHECK(f1.functionals.col(j).cwiseAbs().maxCoeff() <= 1.0);
    CHECK(f1.sup_plus_int.size() == 12);
    CHECK(f1.energy.mean_sup_H2 > 0.0);
}

TEST_CASE("uniform energy bound dominates realized ensembles") {
    SpectralBasis basis(8, 4.0);
    DNLConfig model;
    model.rho = 4.0;
    SimConfig sim;
    sim.T = 1.0;
    sim.dt = 1.0 / 32.0;
    sim.ensemble_size = 24;
    StabilityConfig stab;
    stab.ladder_lambda = {0.1, 0.05};
    stab.ladder_n = {4, 8};

    double B = energy_bound_uniform(basis, model, sim, stab);
    CHECK(B > 0.0);
    SimConfig longer = sim;
    longer.T = 4.0;
    CHECK(energy_bound_uniform(basis, model, longer, stab) > B);

    std::vector<double> times = {0.5, 1.0};
    SpectralVec scales = limit_scales(basis, sim.noise.delta, 3);
    auto cat = catalog_functionals(scales, stab.alpha, times);
    EnsembleFeatures f = simulate_features(basis, model, sim, cat, times, 2);
    double realized = f.energy.mean_sup_H2 + f.energy.mean_int_V2;
    CHECK(realized < B);
}

TEST_CASE("two-rung ladder experiment shapes") {
    SpectralBasis basis(8, 4.0);
    DNLConfig model;
    model.rho = 4.0;
    SimConfig sim;
    sim.T = 1.0;
    sim.dt = 1.0 / 32.0;
    sim.seed = 99;
    StabilityConfig stab;
    stab.ladder_lambda = {0.1, 0.05};
    stab.ladder_n = {4, 8};
    stab.ensemble = 40;
    stab.bootstrap = 50;
    stab.sample_times = {0.5, 1.0};

    StabilityReport rep = stability_experiment(basis, model, sim, stab, 2);
    REQUIRE(rep.rungs.size() == 2);
    CHECK(rep.rungs[0].yosida_lam == 0.1);
    CHECK(rep.rungs[1].mollifier_n == 8);
    CHECK(rep.functional_ids.size() == 12);
    CHECK(rep.functional_means.rows() == 2);
    CHECK(rep.functional_means.cols() == 12);
    CHECK(rep.distance(0, 0) == 0.0);
    CHECK(rep.distance(0, 1) == rep.distance(1, 0));
    CHECK(rep.distance(0, 1) > 0.0);
    CHECK(rep.radius(0, 1) > 0.0);
    REQUIRE(rep.consecutive.size() == 1);
    CHECK(rep.consecutive[0] == rep.distance(0, 1));
    CHECK(rep.cauchy_verdict); // vacuous with a single consecutive pair
    CHECK(rep.B_unif > 0.0);
    CHECK(rep.rung_bad[0] == 0);
    CHECK(rep.rung_bad[1] == 0);
    CHECK(rep.energy_ok);
    CHECK(rep.rung_mean_sup_plus_int[0] > 0.0);
    CHECK(rep.rung_q99_sup_plus_int[0] >= rep.rung_mean_sup_plus_int[0] * 0.5);

    StabilityConfig badstab = stab;
    badstab.ladder_n = {4};
    CHECK_THROWS_AS((void)stability_experiment(basis, model, sim, badstab, 1),
                    std::invalid_argument);
}

TEST_CASE("deterministic contrast from symmetric seeds") {
    SpectralBasis basis(16, 2.0);
    DNLConfig model; // rho = 2, supercritical gain
    SimConfig sim;
    sim.dt = 1.0 / 64.0;
    sim.seed = 2026;
    StabilityConfig stab;
    stab.bootstrap = 50;
    double T = 1.0;

    SpectralVec v_star = 2.5 * basis.unit_mode(1);
    ContrastReport rep = deterministic_contrast(basis, model, sim, stab, v_star, T, 77, 2);

    // closed form: 2 ||v|| c_p sqrt(T^{2q+1}/(2q+1)), p = 3 gives q = 2
    double expect = 2.0 * 2.5 * 0.25 * std::sqrt(1.0 / 5.0);
    CHECK(rep.branch_separation == doctest::Approx(expect).epsilon(1e-12));
    CHECK(rep.separation_L2 > 0.0);
    CHECK(rep.sep_fraction ==
          doctest::Approx(rep.separation_L2 / rep.branch_separation).epsilon(1e-12));
    CHECK(rep.deterministic_separates == (rep.sep_fraction >= 0.5));
    CHECK(rep.noisy_tolerance ==
          doctest::Approx(3.0 * rep.noisy_radius + 0.01 * rep.branch_separation).epsilon(1e-12));
    CHECK(rep.noisy_within_tol == (rep.noisy_distance <= rep.noisy_tolerance));
    CHECK(rep.ensemble_spread > 0.0);
    CHECK(rep.noisy_distance >= 0.0);

    // odd drift: the minus run is the mirror image, so the terminal gap is
    // twice the plus run's terminal norm
    SimConfig det = sim;
    det.T = T;
    det.noise_on = false;
    det.u0_resolvent_n = 0.0;
    det.ensemble_size = 1;
    SpectralVec up = stab.contrast_eps * v_star;
    det.u0.assign(up.data(), up.data() + up.size());
    Trajectory tp = simulate_trajectory(basis, model, det, 0);
    CHECK(rep.terminal_separation ==
          doctest::Approx(2.0 * tp.states.back().norm()).epsilon(1e-12));

    CHECK_THROWS_AS(
        (void)deterministic_contrast(basis, model, sim, stab, SpectralVec::Ones(3), T, 1, 1),
        std::invalid_argument);
}
