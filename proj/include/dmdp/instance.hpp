#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dmdp/errors.hpp"

namespace dmdp {

using ValueVector = std::vector<double>;

enum class RewardKind { expected, full };

/// A discounted Markov decision problem: |S| states, |A| actions per state,
/// a transition row P_a(i,.) per state-action pair, rewards in [0, 1], and a
/// discount factor strictly inside (0, 1).
///
/// Rewards are stored either in expected form (one value r_a(i) per pair,
/// treated as r_ij(a) = r_a(i) for every j) or in full form (one value per
/// transition). Values follow the fixed-point convention v = r + gamma P v,
/// so a unit-reward chain has value 1 / (1 - gamma).
struct DmdpInstance {
    int num_states = 0;
    int num_actions = 0;
    double discount = 0.0;
    RewardKind reward_kind = RewardKind::expected;
    std::vector<double> rewards;      // expected: [i*A + a]; full: [(i*A + a)*S + j]
    std::vector<double> transitions;  // [(i*A + a)*S + j]

    std::size_t pair_index(int i, int a) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(num_actions) +
               static_cast<std::size_t>(a);
    }

    std::span<const double> transition_row(int i, int a) const {
        return {transitions.data() + pair_index(i, a) * static_cast<std::size_t>(num_states),
                static_cast<std::size_t>(num_states)};
    }

    double transition(int i, int a, int j) const {
        return transitions[pair_index(i, a) * static_cast<std::size_t>(num_states) +
                           static_cast<std::size_t>(j)];
    }

    /// r_ij(a); a plain lookup for expected-form instances.
    double reward(int i, int a, int j) const {
        return reward_kind == RewardKind::expected
                   ? rewards[pair_index(i, a)]
                   : rewards[pair_index(i, a) * static_cast<std::size_t>(num_states) +
                             static_cast<std::size_t>(j)];
    }
};

struct RandomizedPolicy {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs;  // [i*A + a]

    double at(int i, int a) const {
        return probs[static_cast<std::size_t>(i) * num_actions + a];
    }
    std::span<const double> row(int i) const {
        return {probs.data() + static_cast<std::size_t>(i) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }

    static RandomizedPolicy uniform(int num_states, int num_actions);
    static RandomizedPolicy deterministic(int num_actions, std::span<const int> actions);
};

/// Dual variable over state-action pairs together with the (theta, q) pair
/// that defines its information set: {e'mu = 1, mu >= 0, sum_a mu_a >= theta q}.
struct DualVariable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> entries;  // [i*A + a]
    double theta = 0.0;
    std::vector<double> q;

    double at(int i, int a) const {
        return entries[static_cast<std::size_t>(i) * num_actions + a];
    }
};

enum class SaddleMode { general, ergodic };

/// Saddle-point parameters: theta in [1-gamma, 1] and a positive distribution
/// q over states. In ergodic mode theta = 1 - gamma + gamma * c1/c2 encodes
/// the ergodicity-constant ratio used by the iteration-count schedule.
struct SaddleConfig {
    double theta = 0.0;
    std::vector<double> q;
    SaddleMode mode = SaddleMode::general;
};

SaddleConfig make_general_config(const DmdpInstance& inst);
SaddleConfig make_ergodic_config(const DmdpInstance& inst, double c1, double c2);

struct InstanceViolation {
    std::string message;
    int state = -1;
    int action = -1;
    int next_state = -1;
    double magnitude = 0.0;
};

struct ValidationReport {
    std::vector<InstanceViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks every instance invariant (row sums within 1e-9, no negative
/// probabilities, rewards in [0, 1], discount strictly inside (0, 1)) and
/// reports all violations with their locations. Never throws.
ValidationReport validate_instance(const DmdpInstance& inst);

/// r_a(i) = sum_j p_ij(a) r_ij(a).
double expected_reward(const DmdpInstance& inst, int i, int a);

struct BellmanBackup {
    ValueVector values;       // (T v)_i
    std::vector<int> greedy;  // argmax action per state, ties to the lowest index
};

/// One max-over-actions backup of v; a gamma-contraction in the max norm.
BellmanBackup bellman_backup(const DmdpInstance& inst, const ValueVector& v);

struct PolicyChain {
    std::vector<double> transition;  // P^pi, row-major S x S
    std::vector<double> reward;      // r^pi
};

/// P^pi_ij = sum_a pi_i(a) p_ij(a) and r^pi_i = sum_a pi_i(a) r_a(i).
PolicyChain policy_transition(const DmdpInstance& inst, const RandomizedPolicy& pol);

/// Complementarity residuals at v: res[i*A+a] = v_i - gamma sum_j p v_j - r_a(i).
/// Nonnegative for every pair exactly when v is the optimal value vector.
std::vector<double> bellman_residuals(const DmdpInstance& inst, const ValueVector& v);

/// Weighted complementarity violation sum_{i,a} mu_{i,a} res_{i,a}(v*).
/// Zero iff mu is supported on residual-zero pairs. A result below -1e-9
/// means v_star is not the optimal value vector and raises NumericError.
double duality_gap(const DmdpInstance& inst, const ValueVector& v_star, const DualVariable& mu);

/// Row-normalizes mu into the corresponding randomized policy.
RandomizedPolicy dual_to_policy(const DualVariable& mu);

/// Membership in {e'mu = 1, mu >= 0, sum_a mu_a >= theta q}, all within 1e-9.
bool check_dual_feasible(const DualVariable& mu);

/// mu_{i,a} = ((1-theta) xi_i + theta q_i) pi_{i,a}; always feasible for the
/// configured (theta, q) when xi is a distribution.
DualVariable assemble_dual(std::span<const double> xi, const RandomizedPolicy& pol,
                           const SaddleConfig& cfg);

}  // namespace dmdp
