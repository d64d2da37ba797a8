#include <cmath>

#include "dmdp/instance_io.hpp"
#include "dmdp/oracles.hpp"
#include "dmdp/policy_eval.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace dmdp;
using namespace dmdp::testing;

TEST_CASE("brute force solves the benchmark chains") {
    const OracleSolution e2 = brute_force_optimal(make_e2());
    CHECK(e2.v_star[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e2.v_star[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e2.policy == std::vector<int>{1, 0});

    const OracleSolution unit = brute_force_optimal(make_unit_chain(0.9));
    CHECK(unit.v_star[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("brute force ties resolve to the lowest policy index") {
    DmdpInstance symmetric = make_e2();
    // Make both actions identical everywhere: every policy has the same value.
    symmetric.transitions = {1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0};
    symmetric.rewards = {0.5, 0.5, 0.5, 0.5};
    const OracleSolution sol = brute_force_optimal(symmetric);
    CHECK(sol.policy == std::vector<int>{0, 0});
}

TEST_CASE("brute force refuses oversized enumerations") {
    const DmdpInstance big = gen_instance(21, 2, 0.9, GenKind::dirichlet, 0.0, 77);
    CHECK(deterministic_policy_count(big, 1'000'000) == -1);
    CHECK_THROWS_AS((void)brute_force_optimal(big), GuardError);
    CHECK_THROWS_AS((void)ergodicity_constants(big, uniform_q(21)), GuardError);
}

TEST_CASE("value iteration reaches the oracle and stops tight") {
    const OracleSolution unit = value_iteration(make_unit_chain(0.9), 1e-8);
    CHECK(std::abs(unit.v_star[0] - 10.0) <= 1e-8);

    const OracleSolution e2 = value_iteration(make_e2(), 1e-8);
    CHECK(std::abs(e2.v_star[0] - 1.0) <= 1e-8);
    CHECK(std::abs(e2.v_star[1] - 2.0) <= 1e-8);
    CHECK_THROWS_AS((void)value_iteration(make_e2(), 0.0), ValidationError);
}

TEST_CASE("policy iteration converges in two rounds on the benchmark chain") {
    const OracleSolution e2 = policy_iteration(make_e2());
    CHECK(e2.policy[0] == 1);
    CHECK(e2.v_star[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e2.v_star[1] == doctest::Approx(2.0).epsilon(1e-12));

    const OracleSolution unit = policy_iteration(make_unit_chain(0.9));
    CHECK(unit.v_star[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("the three oracles agree on random guarded instances") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const int states = 2 + static_cast<int>(seed % 3);
        const double gamma = seed % 2 ? 0.9 : 0.5;
        const DmdpInstance inst =
            gen_instance(states, 3, gamma, GenKind::dirichlet, 0.0, 400 + seed);
        const OracleSolution brute = brute_force_optimal(inst);
        const OracleSolution pi = policy_iteration(inst);
        const OracleSolution vi = value_iteration(inst, 1e-8);
        CHECK(max_abs_diff(brute.v_star, pi.v_star) <= 1e-8);
        CHECK(max_abs_diff(brute.v_star, vi.v_star) <= 1e-6);
    }
}

TEST_CASE("stationary distributions: power iteration, damping, direct solve") {
    // Periodic two-cycle: the direct solve handles it; damped power
    // iteration agrees.
    const std::vector<double> flip{0.0, 1.0, 1.0, 0.0};
    const std::vector<double> nu_direct = stationary_direct_from_matrix(flip, 2);
    CHECK(nu_direct[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(nu_direct[1] == doctest::Approx(0.5).epsilon(1e-12));
    const std::vector<double> nu_power = stationary_from_matrix(flip, 2, 1e-12);
    CHECK(std::abs(nu_power[0] - 0.5) <= 1e-10);

    const std::vector<double> uniform_rows{0.5, 0.5, 0.5, 0.5};
    const std::vector<double> nu_uniform = stationary_from_matrix(uniform_rows, 2, 1e-12);
    CHECK(nu_uniform[0] == doctest::Approx(0.5).epsilon(1e-10));

    const std::vector<double> skewed{0.9, 0.1, 0.5, 0.5};
    const std::vector<double> nu = stationary_from_matrix(skewed, 2, 1e-12);
    CHECK(nu[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
    CHECK(nu[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    const std::vector<double> nu2 = stationary_direct_from_matrix(skewed, 2);
    CHECK(nu2[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("ergodicity constants over enumerated deterministic policies") {
    // All-uniform rows: every policy has the uniform stationary distribution.
    const DmdpInstance flat = gen_instance(4, 3, 0.9, GenKind::ergodic_mixed, 1.0, 5);
    const ErgodicityReport flat_report = ergodicity_constants(flat, uniform_q(4));
    CHECK(flat_report.c1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(flat_report.c2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(flat_report.stationary.size() == 81);
    CHECK(flat_report.scope == "deterministic-policy estimate");

    // Single-action instance: the report reduces to the unique chain.
    const DmdpInstance single = gen_instance(3, 1, 0.9, GenKind::ergodic_mixed, 0.3, 6);
    const ErgodicityReport single_report = ergodicity_constants(single, uniform_q(3));
    CHECK(single_report.stationary.size() == 1);
    CHECK(single_report.c1 <= single_report.c2);
    CHECK(single_report.c1 > 0.0);

    // Two distinct chains with known stationary distributions.
    DmdpInstance two;
    two.num_states = 2;
    two.num_actions = 2;
    two.discount = 0.9;
    two.reward_kind = RewardKind::expected;
    two.rewards = {0.1, 0.2, 0.3, 0.4};
    two.transitions = {
        0.9, 0.1,  // (0,a0)
        0.5, 0.5,  // (0,a1)
        0.5, 0.5,  // (1,a0)
        0.5, 0.5,  // (1,a1)
    };
    const ErgodicityReport report = ergodicity_constants(two, uniform_q(2));
    CHECK(report.c1 == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(report.c2 == doctest::Approx(5.0 / 3.0).epsilon(1e-9));

    // Non-ergodic chains are rejected with the policy named.
    const DmdpInstance transient = gen_instance(4, 2, 0.9, GenKind::transient, 0.0, 7);
    CHECK_THROWS_WITH_AS((void)ergodicity_constants(transient, uniform_q(4)),
                         doctest::Contains("policy"), NumericError);
}

TEST_CASE("oracle dual built from the occupancy measure has zero gap") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const DmdpInstance inst = gen_instance(3, 2, 0.9, GenKind::dirichlet, 0.0, 600 + seed);
        const OracleSolution oracle = brute_force_optimal(inst);
        const SaddleConfig cfg = make_general_config(inst);
        const RandomizedPolicy pol =
            RandomizedPolicy::deterministic(inst.num_actions, oracle.policy);
        const std::vector<double> occupancy = discounted_occupancy(inst, pol, cfg.q);
        DualVariable mu;
        mu.num_states = inst.num_states;
        mu.num_actions = inst.num_actions;
        mu.theta = cfg.theta;
        mu.q = cfg.q;
        mu.entries.assign(static_cast<std::size_t>(inst.num_states) * inst.num_actions, 0.0);
        for (int i = 0; i < inst.num_states; ++i)
            mu.entries[static_cast<std::size_t>(i) * inst.num_actions + oracle.policy[i]] =
                occupancy[i];
        CHECK(check_dual_feasible(mu));
        CHECK(duality_gap(inst, oracle.v_star, mu) <= 1e-8);
    }
}
