#include "doctest.h"

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "qa/errors.hpp"
#include "qa/gfmc.hpp"
#include "qa/ising.hpp"
#include "qa/rng.hpp"
#include "qa/schedules.hpp"

using qa::GfmcParams;
using qa::GfmcVariant;
using qa::IsingInstance;
using qa::ResolvedGfmc;
using qa::Schedule;
using qa::ScheduleKind;
using qa::SpinConfig;

namespace {

Schedule constant_gamma(double value) {
    return Schedule{ScheduleKind::Constant, {{"value", value}}};
}

}  // namespace

TEST_CASE("g1_hat: matrix elements on the free spin and a bond") {
    const IsingInstance free_spin(1, {});
    const ResolvedGfmc r{0.1, 0.0};
    const Schedule gamma1 = constant_gamma(1.0);

    const SpinConfig up{+1};
    const SpinConfig down{-1};
    CHECK(qa::g1_hat(up, up, 0.0, free_spin, r, gamma1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(qa::g1_hat(down, up, 0.0, free_spin, r, gamma1) ==
          doctest::Approx(0.1).epsilon(1e-15));

    // Two flips away: a strictly single-flip walk, so the element vanishes.
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    CHECK(qa::g1_hat(SpinConfig{-1, -1}, SpinConfig{+1, +1}, 0.0, ferro, r, gamma1) == 0.0);

    // Column sums reproduce the weight on a random 3-spin instance.
    const IsingInstance glass = qa::random_instance(3, qa::CouplingDist::Gaussian, 5);
    const ResolvedGfmc r3{0.05, 0.2};
    for (const SpinConfig& x : qa::enumerate_states(3)) {
        double total = 0.0;
        for (const SpinConfig& y : qa::enumerate_states(3)) {
            total += qa::g1_hat(y, x, 2.0, glass, r3, gamma1);
        }
        CHECK(total ==
              doctest::Approx(qa::weight_w(x, 2.0, glass, r3, gamma1)).epsilon(1e-13));
    }
}

TEST_CASE("g1_hat: a negative diagonal is rejected") {
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    const ResolvedGfmc too_coarse{3.0, 0.0};  // 1 - 3*(E_max - 0) < 0 at E_max = +1
    const Schedule gamma1 = constant_gamma(1.0);
    const SpinConfig high{+1, -1};
    CHECK_THROWS_AS(qa::g1_hat(high, high, 0.0, ferro, too_coarse, gamma1), qa::ConfigError);
}

TEST_CASE("weight_w: frozen example and monotonicity in the energy") {
    const IsingInstance free_spin(1, {});
    const ResolvedGfmc r{0.1, 0.0};
    CHECK(qa::weight_w(SpinConfig{+1}, 0.0, free_spin, r, constant_gamma(1.0)) ==
          doctest::Approx(1.1).epsilon(1e-15));

    // Gamma = 0 and E0 = E_T gives weight exactly 1 (up to the schedule floor).
    const IsingInstance shifted(1, {}, {1.0});  // E0(+1) = -1, E0(-1) = +1
    const ResolvedGfmc re{0.1, -1.0};
    const double frozen = qa::weight_w(SpinConfig{+1}, 0.0, shifted, re, constant_gamma(0.0));
    CHECK(frozen == doctest::Approx(1.0).epsilon(1e-15));
    // The higher-energy state gets the smaller weight.
    CHECK(qa::weight_w(SpinConfig{-1}, 0.0, shifted, re, constant_gamma(0.0)) <
          frozen);
}

TEST_CASE("g1_transition: frozen probabilities, row sums, and the product identity") {
    const IsingInstance free_spin(1, {});
    const ResolvedGfmc r{0.1, 0.0};
    const Schedule gamma1 = constant_gamma(1.0);
    const qa::G1Row row = qa::g1_transition(SpinConfig{+1}, 0.0, free_spin, r, gamma1);
    CHECK(row.move_each == doctest::Approx(0.1 / 1.1).epsilon(1e-13));
    CHECK(row.stay == doctest::Approx(1.0 / 1.1).epsilon(1e-13));
    CHECK(row.stay + 1 * row.move_each == doctest::Approx(1.0).epsilon(1e-15));

    // ghat(y,x) = G1(y,x) * w(x) entrywise on a 3-spin glass.
    const IsingInstance glass = qa::random_instance(3, qa::CouplingDist::PlusMinusJ, 9);
    const ResolvedGfmc r3{0.05, 0.0};
    for (const SpinConfig& x : qa::enumerate_states(3)) {
        const qa::G1Row t_row = qa::g1_transition(x, 1.0, glass, r3, gamma1);
        const double w = qa::weight_w(x, 1.0, glass, r3, gamma1);
        CHECK(t_row.stay + 3 * t_row.move_each == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(t_row.stay * w ==
              doctest::Approx(qa::g1_hat(x, x, 1.0, glass, r3, gamma1)).epsilon(1e-13));
        SpinConfig y = x;
        y[0] = static_cast<std::int8_t>(-y[0]);
        CHECK(t_row.move_each * w ==
              doctest::Approx(qa::g1_hat(y, x, 1.0, glass, r3, gamma1)).epsilon(1e-13));
    }

    // A vanishing transverse field freezes the walk.
    const qa::G1Row frozen =
        qa::g1_transition(SpinConfig{+1}, 0.0, free_spin, r, constant_gamma(0.0));
    CHECK(frozen.move_each < 1e-250);
    CHECK(frozen.stay == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("stationary_q1: closed forms, hand values, and fixed-point residual") {
    const Schedule gamma1 = constant_gamma(1.0);

    // Free spin: symmetric walk, uniform distribution.
    const IsingInstance free_spin(1, {});
    const ResolvedGfmc r1{0.1, 0.0};
    const std::vector<double> q_free = qa::stationary_q1(0.0, free_spin, r1, gamma1);
    REQUIRE(q_free.size() == 2);
    CHECK(q_free[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q_free[1] == doctest::Approx(0.5).epsilon(1e-14));

    // Ferromagnetic bond: w = 1.2 - 0.1 E0, so the aligned states carry
    // 1.3/4.8 = 0.2708333... each.
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    const ResolvedGfmc r2{0.1, 0.0};
    const std::vector<double> q = qa::stationary_q1(0.0, ferro, r2, gamma1);
    REQUIRE(q.size() == 4);
    CHECK(q[0] == doctest::Approx(13.0 / 48.0).epsilon(1e-13));
    CHECK(q[3] == doctest::Approx(13.0 / 48.0).epsilon(1e-13));
    CHECK(q[1] == doctest::Approx(11.0 / 48.0).epsilon(1e-13));
    CHECK(q[2] == doctest::Approx(11.0 / 48.0).epsilon(1e-13));
    CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-13));

    // Independent check: q is a fixed point of the normalized transition
    // matrix at the 1e-12 level, on a frustrated 3-spin instance.
    const IsingInstance glass = qa::random_instance(3, qa::CouplingDist::PlusMinusJ, 3);
    const ResolvedGfmc r3{0.04, 0.0};
    const std::vector<double> q3 = qa::stationary_q1(5.0, glass, r3, gamma1);
    const auto states = qa::enumerate_states(3);
    for (std::size_t yi = 0; yi < states.size(); ++yi) {
        double flow = 0.0;
        for (std::size_t xi = 0; xi < states.size(); ++xi) {
            const qa::G1Row row = qa::g1_transition(states[xi], 5.0, glass, r3, gamma1);
            int delta = 0;
            for (int i = 0; i < 3; ++i) delta += states[xi][i] != states[yi][i];
            if (delta == 0) flow += row.stay * q3[xi];
            if (delta == 1) flow += row.move_each * q3[xi];
        }
        CHECK(std::abs(flow - q3[yi]) < 1e-12);
    }
}

TEST_CASE("g2_entry: frozen values, limits, and row sums") {
    // N = 1, dt*Gamma = 1.
    CHECK(qa::g2_entry(0, 1, 1.0) == doctest::Approx(0.56766764161830635).epsilon(1e-14));
    CHECK(qa::g2_entry(1, 1, 1.0) == doctest::Approx(0.43233235838169365).epsilon(1e-14));

    // Strong-field limit: every entry tends to 2^{-N}.
    for (int n : {1, 2, 3}) {
        for (int delta = 0; delta <= n; ++delta) {
            CHECK(qa::g2_entry(delta, n, 400.0) ==
                  doctest::Approx(std::pow(2.0, -n)).epsilon(1e-12));
        }
    }

    // Rows sum to one: sum over states at distance delta weighted binomially.
    for (int n = 1; n <= 10; ++n) {
        for (double dt_gamma : {0.01, 0.5, 2.0}) {
            double total = 0.0;
            double binom = 1.0;
            for (int delta = 0; delta <= n; ++delta) {
                total += binom * qa::g2_entry(delta, n, dt_gamma);
                binom = binom * (n - delta) / (delta + 1.0);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("g2_transition: symmetry and the uniform fixed point") {
    const Schedule gamma1 = constant_gamma(1.0);
    const ResolvedGfmc r{0.3, 0.0};
    const auto states = qa::enumerate_states(3);
    const double uniform = 1.0 / 8.0;
    for (const SpinConfig& y : states) {
        double flow = 0.0;
        for (const SpinConfig& x : states) {
            CHECK(qa::g2_transition(y, x, 0.0, r, gamma1) ==
                  doctest::Approx(qa::g2_transition(x, y, 0.0, r, gamma1)).epsilon(1e-15));
            flow += qa::g2_transition(y, x, 0.0, r, gamma1) * uniform;
        }
        CHECK(std::abs(flow - uniform) < 1e-12);
    }
}

TEST_CASE("g2_weight: exponential form") {
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    const ResolvedGfmc r{0.2, 0.0};
    const double w = qa::g2_weight(SpinConfig{+1, +1}, 0.0, ferro, r, constant_gamma(0.5));
    CHECK(w == doctest::Approx(std::exp(0.2 * (2 * 0.5 - (-1.0)))).epsilon(1e-14));
}

TEST_CASE("step_population: a frozen chain multiplies weights deterministically") {
    const IsingInstance shifted(1, {}, {1.0});  // E0(+1) = -1
    GfmcParams params;
    params.dt = 0.1;
    params.e_t = 0.0;
    params.n_walkers = 1;
    const Schedule off = constant_gamma(0.0);  // clamped to the 1e-300 floor
    const ResolvedGfmc r = qa::resolve_gfmc(shifted, params, off);

    qa::Rng rng(11);
    qa::WalkerPopulation pop = qa::init_population(shifted, 1, rng);
    pop.walkers[0].config = SpinConfig{+1};
    pop.walkers[0].energy = shifted.energy(pop.walkers[0].config);
    for (int k = 0; k < 3; ++k) {
        qa::step_population(pop, 0.0, shifted, params, r, off, rng);
    }
    REQUIRE(pop.walkers.size() == 1);
    CHECK(pop.walkers[0].config == SpinConfig{+1});
    const double total = pop.walkers[0].weight * std::exp(pop.log_scale);
    CHECK(total == doctest::Approx(std::pow(1.1, 3)).epsilon(1e-12));
}

TEST_CASE("iterate_exact: identity at zero steps and symmetry preservation") {
    const IsingInstance free_spin(1, {});
    GfmcParams params;
    params.dt = 0.1;
    params.e_t = 0.0;
    const Schedule gamma1 = constant_gamma(1.0);
    const ResolvedGfmc r = qa::resolve_gfmc(free_spin, params, gamma1);

    const std::vector<double> psi0{0.25, 0.75};
    CHECK(qa::iterate_exact(psi0, free_spin, params, r, gamma1, 0) == psi0);

    // The symmetric kernel maps the uniform vector to a multiple of itself.
    const std::vector<double> uniform{1.0, 1.0};
    const std::vector<double> psi1 = qa::iterate_exact(uniform, free_spin, params, r, gamma1, 1);
    CHECK(psi1[0] == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(psi1[1] == doctest::Approx(1.1).epsilon(1e-14));
}

TEST_CASE("iterate_exact: the annealed power method concentrates on the ground states") {
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    GfmcParams params;
    // A small time step keeps the unnormalized iteration inside double range
    // over the long anneal; the limiting eigenvector does not depend on dt.
    params.dt = 0.01;
    params.e_t = 0.0;
    const Schedule schedule{ScheduleKind::GfmcPower, {{"b", 1.0}, {"c", 0.5}, {"N", 2.0}}};
    const ResolvedGfmc r = qa::resolve_gfmc(ferro, params, schedule);

    for (GfmcVariant variant : {GfmcVariant::G1, GfmcVariant::G2}) {
        params.variant = variant;
        std::vector<double> psi(4, 1.0);
        psi = qa::iterate_exact(psi, ferro, params, r, schedule, 8000);
        const double total = std::accumulate(psi.begin(), psi.end(), 0.0);
        const double ground_mass = (psi[0] + psi[3]) / total;
        CHECK(ground_mass >= 0.98);
    }
}

TEST_CASE("population control: size bookkeeping and positivity") {
    const IsingInstance glass = qa::random_instance(3, qa::CouplingDist::PlusMinusJ, 21);
    GfmcParams params;
    params.dt = 0.05;
    params.e_t = 0.0;
    params.n_walkers = 200;
    const Schedule gamma1 = constant_gamma(0.8);
    const ResolvedGfmc r = qa::resolve_gfmc(glass, params, gamma1);

    // No control: the population size never changes.
    {
        qa::Rng rng(7);
        qa::WalkerPopulation pop = qa::init_population(glass, 200, rng);
        for (int k = 0; k < 50; ++k) qa::step_population(pop, 0.0, glass, params, r, gamma1, rng);
        CHECK(pop.walkers.size() == 200);
    }

    // Split/kill: size stays positive and bounded, weights stay positive.
    {
        params.control.kind = qa::PopulationControlKind::SplitKill;
        qa::Rng rng(7);
        qa::WalkerPopulation pop = qa::init_population(glass, 200, rng);
        for (int k = 0; k < 50; ++k) qa::step_population(pop, 0.0, glass, params, r, gamma1, rng);
        CHECK(pop.walkers.size() >= 1);
        CHECK(pop.walkers.size() <= 4000);
        for (const auto& w : pop.walkers) CHECK(w.weight > 0.0);
    }
}

TEST_CASE("resolve_gfmc: explicit values pass through, defaults are sane") {
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    const Schedule gamma1 = constant_gamma(1.0);

    GfmcParams explicit_params;
    explicit_params.dt = 0.07;
    explicit_params.e_t = -0.3;
    const ResolvedGfmc re = qa::resolve_gfmc(ferro, explicit_params, gamma1);
    CHECK(re.dt == 0.07);
    CHECK(re.e_t == -0.3);

    GfmcParams defaults;
    const ResolvedGfmc rd = qa::resolve_gfmc(ferro, defaults, gamma1);
    CHECK(rd.dt > 0.0);
    CHECK(std::isfinite(rd.e_t));
    // The default keeps every diagonal entry strictly positive.
    for (const SpinConfig& x : qa::enumerate_states(2)) {
        CHECK(qa::g1_hat(x, x, 0.0, ferro, rd, gamma1) > 0.0);
    }

    CHECK(qa::auto_reference_energy(ferro, /*from_bruteforce=*/true) ==
          doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(qa::auto_time_step(ferro, 1.0, 0.0) > 0.0);
}

TEST_CASE("run_gfmc: horizon validation, determinism, and trace structure") {
    const IsingInstance ferro(2, {{0, 1, 1.0}});
    GfmcParams params;
    params.dt = 0.1;
    params.e_t = 0.0;
    params.n_walkers = 100;
    const Schedule schedule{ScheduleKind::GfmcPower, {{"b", 1.0}, {"c", 0.5}, {"N", 2.0}}};

    CHECK_THROWS_AS(qa::run_gfmc(ferro, params, schedule, 0, 1), std::invalid_argument);

    const qa::GfmcTrace a = qa::run_gfmc(ferro, params, schedule, 400, 42, 50);
    const qa::GfmcTrace b = qa::run_gfmc(ferro, params, schedule, 400, 42, 50);
    std::ostringstream csv_a, csv_b;
    a.write_csv(csv_a);
    b.write_csv(csv_b);
    CHECK(csv_a.str() == csv_b.str());
    CHECK(csv_a.str().rfind("step,gamma,mean_weight,effective_population,best_energy,"
                            "histogram_entropy\n",
                            0) == 0);
    CHECK(a.rows.size() == 8);
    CHECK(a.rows.back().step == 400);
    CHECK(a.steps == 400);

    const qa::GfmcTrace c = qa::run_gfmc(ferro, params, schedule, 400, 43, 50);
    CHECK(csv_a.str() != [&] {
        std::ostringstream s;
        c.write_csv(s);
        return s.str();
    }());

    // The bond ferromagnet is solved exactly; the answer carries the
    // histogram argmax.
    CHECK(a.final_best_energy == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(a.answer.energy == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(a.answer.mass > 0.25);

    params.variant = GfmcVariant::G2;
    const qa::GfmcTrace d = qa::run_gfmc(ferro, params, schedule, 400, 42, 50);
    CHECK(d.final_best_energy == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("weighted_histogram: normalized and deterministic on a small population") {
    const IsingInstance free_spin(1, {});
    GfmcParams params;
    params.dt = 0.1;
    params.e_t = 0.0;
    params.n_walkers = 20000;
    const Schedule gamma1 = constant_gamma(1.0);
    const ResolvedGfmc r = qa::resolve_gfmc(free_spin, params, gamma1);

    qa::Rng rng(3);
    qa::WalkerPopulation pop = qa::init_population(free_spin, 20000, rng);
    for (int k = 0; k < 10; ++k) qa::step_population(pop, 0.0, free_spin, params, r, gamma1, rng);
    const auto hist = qa::weighted_histogram(pop);
    double total = 0.0;
    for (const auto& [config, p] : hist) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // The free spin is symmetric: both states near 1/2 with 2e4 walkers.
    REQUIRE(hist.size() == 2);
    CHECK(hist[0].second == doctest::Approx(0.5).epsilon(0.05));
}
