#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmdp/instance.hpp"

namespace dmdp {

enum class OracleMethod { enumeration, policy_iteration, value_iteration };

/// Ground truth: the optimal value vector, an optimal deterministic policy,
/// and the method that produced them. v_star always satisfies the Bellman
/// fixed-point equation up to the method tolerance.
struct OracleSolution {
    ValueVector v_star;
    std::vector<int> policy;  // one action index per state
    OracleMethod method = OracleMethod::enumeration;
};

/// Number of deterministic policies |A|^|S|, or -1 on overflow past `cap`.
std::int64_t deterministic_policy_count(const DmdpInstance& inst, std::int64_t cap);

/// Enumerates all |A|^|S| deterministic policies (guard: at most 1e6),
/// solving (I - gamma P^pi) v = r^pi for each; returns the maximizer of
/// q'v with uniform q, ties to the lowest policy index. Asserts the Bellman
/// residual of the winner is at most 1e-9.
OracleSolution brute_force_optimal(const DmdpInstance& inst);

/// Iterates v <- Tv from zero until ||v_{k+1} - v_k||_inf <= tol (1-gamma)/gamma,
/// which guarantees ||v - v*||_inf <= tol; returns the greedy policy of the
/// final iterate.
OracleSolution value_iteration(const DmdpInstance& inst, double tol);

/// Exact policy evaluation alternated with greedy improvement (ties to the
/// lowest action index) until the policy stops changing.
OracleSolution policy_iteration(const DmdpInstance& inst);

/// Stationary distribution of P^pi by damped power iteration on (P^pi)':
/// plain sweeps first, then lazy-chain damping (same fixed point) if the
/// chain looks periodic. Fails with a pointer to the direct linear-solve
/// fallback if the cap is exhausted.
std::vector<double> stationary_distribution(const DmdpInstance& inst, const RandomizedPolicy& pol,
                                            double tol);
std::vector<double> stationary_from_matrix(std::span<const double> transition, int num_states,
                                           double tol);

/// Direct linear-solve fallback: solves (I - P')nu = 0 with the normalization
/// row e'nu = 1. Handles periodic chains.
std::vector<double> stationary_distribution_direct(const DmdpInstance& inst,
                                                   const RandomizedPolicy& pol);
std::vector<double> stationary_direct_from_matrix(std::span<const double> transition,
                                                  int num_states);

/// Discounted state-occupancy of pol from initial distribution q:
/// m = (1-gamma) (I - gamma (P^pi)')^{-1} q. Row masses of any
/// policy-induced dual feasible point.
std::vector<double> discounted_occupancy(const DmdpInstance& inst, const RandomizedPolicy& pol,
                                         std::span<const double> q);

/// Extreme ratios of enumerated deterministic-policy stationary distributions
/// against q. The spread over all randomized policies is not claimed, hence
/// the scope label.
struct ErgodicityReport {
    std::vector<std::vector<double>> stationary;  // per enumerated policy
    double c1 = 0.0;
    double c2 = 0.0;
    std::string scope = "deterministic-policy estimate";
};

ErgodicityReport ergodicity_constants(const DmdpInstance& inst, std::span<const double> q);

}  // namespace dmdp
