#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "qa/errors.hpp"
#include "qa/ising.hpp"
#include "qa/rng.hpp"

using qa::IsingInstance;
using qa::SpinConfig;

namespace {

IsingInstance two_spin_ferro() { return IsingInstance(2, {{0, 1, 1.0}}); }

// Independent recursive generator used as the enumeration oracle.
void recursive_states(int n, SpinConfig& partial, std::vector<SpinConfig>& out) {
    if (static_cast<int>(partial.size()) == n) {
        out.push_back(partial);
        return;
    }
    for (std::int8_t s : {std::int8_t{+1}, std::int8_t{-1}}) {
        partial.push_back(s);
        recursive_states(n, partial, out);
        partial.pop_back();
    }
}

}  // namespace

TEST_CASE("energy: hand-evaluated examples") {
    const IsingInstance ferro = two_spin_ferro();
    CHECK(ferro.energy({+1, +1}) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(ferro.energy({+1, -1}) == doctest::Approx(+1.0).epsilon(1e-15));

    const IsingInstance triangle(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
    CHECK(triangle.energy({+1, +1, +1}) == doctest::Approx(-3.0).epsilon(1e-15));
}

TEST_CASE("energy: dimension mismatch rejected") {
    const IsingInstance ferro = two_spin_ferro();
    CHECK_THROWS_AS(ferro.energy({+1}), std::invalid_argument);
    CHECK_THROWS_AS(ferro.energy({+1, +1, +1}), std::invalid_argument);
}

TEST_CASE("energy: global flip invariance without fields") {
    const IsingInstance instance = qa::random_instance(5, qa::CouplingDist::Gaussian, 42);
    for (std::uint64_t k = 0; k < 32; ++k) {
        SpinConfig x = qa::state_from_index(5, k);
        SpinConfig flipped = x;
        for (auto& s : flipped) s = static_cast<std::int8_t>(-s);
        CHECK(instance.energy(x) == doctest::Approx(instance.energy(flipped)).epsilon(1e-15));
    }
}

TEST_CASE("flip_delta: equals the brute-force energy difference") {
    const IsingInstance instance = qa::random_instance(6, qa::CouplingDist::Gaussian, 9);
    qa::Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        SpinConfig x(6);
        for (auto& s : x) s = rng.spin();
        const int i = static_cast<int>(rng.uniform_below(6));
        SpinConfig y = x;
        y[i] = static_cast<std::int8_t>(-y[i]);
        CHECK(instance.flip_delta(x, i) ==
              doctest::Approx(instance.energy(y) - instance.energy(x)).epsilon(1e-12));
        // |dE| <= 2 sum_j |J_ij| + 2|h_i|
        CHECK(std::abs(instance.flip_delta(x, i)) <=
              2.0 * instance.local_coupling_sum(i) + 1e-12);
    }
}

TEST_CASE("neighbors: single-flip sets") {
    qa::MoveSet moves;
    const auto n2 = qa::neighbors({+1, +1}, moves);
    REQUIRE(n2.size() == 2);
    CHECK(((n2[0] == SpinConfig{-1, +1} && n2[1] == SpinConfig{+1, -1}) ||
           (n2[0] == SpinConfig{+1, -1} && n2[1] == SpinConfig{-1, +1})));

    const auto n1 = qa::neighbors({+1}, moves);
    REQUIRE(n1.size() == 1);
    CHECK(n1[0] == SpinConfig{-1});

    CHECK(qa::neighbors({+1, -1, +1}, moves).size() == 3);
}

TEST_CASE("neighbors: relation is symmetric") {
    qa::MoveSet moves;
    for (std::uint64_t k = 0; k < 8; ++k) {
        const SpinConfig x = qa::state_from_index(3, k);
        for (const SpinConfig& y : qa::neighbors(x, moves)) {
            const auto back = qa::neighbors(y, moves);
            CHECK(std::find(back.begin(), back.end(), x) != back.end());
        }
    }
}

TEST_CASE("enumerate_states: canonical order and completeness") {
    const auto one = qa::enumerate_states(1);
    REQUIRE(one.size() == 2);
    CHECK(one[0] == SpinConfig{+1});
    CHECK(one[1] == SpinConfig{-1});

    const auto two = qa::enumerate_states(2);
    REQUIRE(two.size() == 4);
    CHECK(std::set<SpinConfig>(two.begin(), two.end()).size() == 4);

    // Set equality against the independent recursive generator.
    const auto four = qa::enumerate_states(4);
    std::vector<SpinConfig> oracle;
    SpinConfig partial;
    recursive_states(4, partial, oracle);
    CHECK(std::set<SpinConfig>(four.begin(), four.end()) ==
          std::set<SpinConfig>(oracle.begin(), oracle.end()));

    // Index round-trip in canonical (binary counting) order.
    for (std::uint64_t k = 0; k < 16; ++k) {
        CHECK(four[k] == qa::state_from_index(4, k));
        CHECK(qa::index_of_state(four[k]) == k);
    }
}

TEST_CASE("enumerate_states: capacity error names the cap") {
    CHECK_THROWS_AS(qa::enumerate_states(21), qa::CapacityError);
    try {
        qa::enumerate_states(21);
    } catch (const qa::CapacityError& err) {
        CHECK(err.cap() == 20);
        CHECK(std::string(err.what()).find("cap") != std::string::npos);
    }
}

TEST_CASE("ground_states_bruteforce: hand instances") {
    const auto ferro = qa::ground_states_bruteforce(two_spin_ferro());
    CHECK(ferro.e_min == doctest::Approx(-1.0).epsilon(1e-15));
    REQUIRE(ferro.minimizers.size() == 2);
    CHECK(std::set<SpinConfig>(ferro.minimizers.begin(), ferro.minimizers.end()) ==
          std::set<SpinConfig>{{+1, +1}, {-1, -1}});

    const IsingInstance field_only(1, {}, {2.0});
    const auto polarized = qa::ground_states_bruteforce(field_only);
    CHECK(polarized.e_min == doctest::Approx(-2.0).epsilon(1e-15));
    REQUIRE(polarized.minimizers.size() == 1);
    CHECK(polarized.minimizers[0] == SpinConfig{+1});
}

TEST_CASE("ground_states_bruteforce: agrees with an independent scan") {
    const IsingInstance instance = qa::random_instance(4, qa::CouplingDist::PlusMinusJ, 7);
    double oracle_min = std::numeric_limits<double>::infinity();
    std::vector<SpinConfig> oracle_minimizers;
    std::vector<SpinConfig> oracle;
    SpinConfig partial;
    recursive_states(4, partial, oracle);
    for (const SpinConfig& x : oracle) {
        const double e = instance.energy(x);
        if (e < oracle_min - 1e-12) {
            oracle_min = e;
            oracle_minimizers = {x};
        } else if (std::abs(e - oracle_min) <= 1e-12) {
            oracle_minimizers.push_back(x);
        }
    }
    const auto got = qa::ground_states_bruteforce(instance);
    CHECK(got.e_min == doctest::Approx(oracle_min).epsilon(1e-15));
    CHECK(std::set<SpinConfig>(got.minimizers.begin(), got.minimizers.end()) ==
          std::set<SpinConfig>(oracle_minimizers.begin(), oracle_minimizers.end()));
}

TEST_CASE("random_instance: determinism and seed sensitivity") {
    const IsingInstance a = qa::random_instance(4, qa::CouplingDist::PlusMinusJ, 1);
    const IsingInstance b = qa::random_instance(4, qa::CouplingDist::PlusMinusJ, 1);
    CHECK(a == b);

    const IsingInstance c = qa::random_instance(4, qa::CouplingDist::PlusMinusJ, 2);
    CHECK(!(a == c));

    const IsingInstance g = qa::random_instance(3, qa::CouplingDist::Gaussian, 5);
    CHECK(g.couplings().size() == 3);  // complete graph on 3 spins
    for (const auto& coupling : g.couplings()) {
        CHECK(std::isfinite(coupling.value));
        CHECK(coupling.i < coupling.j);
    }
}

TEST_CASE("instance construction: invariants enforced") {
    CHECK_THROWS_AS(IsingInstance(2, {{0, 0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(IsingInstance(2, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(IsingInstance(2, {{0, 5, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(IsingInstance(0, {}), std::invalid_argument);
    // (j, i) input is normalized to i < j storage.
    const IsingInstance swapped(2, {{1, 0, 3.0}});
    CHECK(swapped.couplings()[0].i == 0);
    CHECK(swapped.couplings()[0].j == 1);
}

TEST_CASE("instance JSON round-trip and file I/O") {
    const IsingInstance instance =
        IsingInstance(3, {{0, 1, 0.5}, {1, 2, -1.25}}, {0.0, 2.0, 0.0});
    const IsingInstance parsed = IsingInstance::from_json(instance.to_json());
    CHECK(parsed == instance);

    const std::string path = "test_instance_roundtrip.json";
    instance.save(path);
    const IsingInstance loaded = IsingInstance::load(path);
    CHECK(loaded == instance);
    std::remove(path.c_str());

    CHECK_THROWS_AS(IsingInstance::load("no_such_file.json"), std::invalid_argument);
}

TEST_CASE("move sets: generation probabilities") {
    qa::MoveSet single;
    CHECK(single.generation_probability(4) == doctest::Approx(0.25).epsilon(1e-15));
    qa::MoveSet all{qa::MoveKind::AllToAll};
    CHECK(all.generation_probability(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("energy_bound: envelope contains all enumerated energies") {
    const IsingInstance instance = qa::random_instance(5, qa::CouplingDist::Gaussian, 11);
    for (const SpinConfig& x : qa::enumerate_states(5)) {
        CHECK(std::abs(instance.energy(x)) <= instance.energy_bound() + 1e-12);
    }
}
