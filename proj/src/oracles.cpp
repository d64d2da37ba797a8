#include "dmdp/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dense_solve.hpp"
#include "dmdp/parallel.hpp"

namespace dmdp {

namespace {

constexpr double kSolveResidualTol = 1e-10;
constexpr std::int64_t kEnumerationGuard = 1'000'000;
constexpr std::int64_t kPowerSweepCap = 1'000'000;

std::vector<int> policy_from_index(std::int64_t index, int num_states, int num_actions) {
    std::vector<int> actions(num_states);
    for (int i = 0; i < num_states; ++i) {
        actions[i] = static_cast<int>(index % num_actions);
        index /= num_actions;
    }
    return actions;
}

ValueVector solve_deterministic(const DmdpInstance& inst, const std::vector<int>& actions) {
    const int n = inst.num_states;
    std::vector<double> p(static_cast<std::size_t>(n) * n);
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
        const auto row = inst.transition_row(i, actions[i]);
        std::copy(row.begin(), row.end(), p.begin() + static_cast<std::size_t>(i) * n);
        r[i] = expected_reward(inst, i, actions[i]);
    }
    return detail::discounted_value_solve(p, r, n, inst.discount, kSolveResidualTol);
}

double mean(const ValueVector& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string describe_policy(const std::vector<int>& actions) {
    std::string s = "(";
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(actions[i]);
    }
    return s + ")";
}

}  // namespace

std::int64_t deterministic_policy_count(const DmdpInstance& inst, std::int64_t cap) {
    std::int64_t count = 1;
    for (int i = 0; i < inst.num_states; ++i) {
        count *= inst.num_actions;
        if (count > cap || count <= 0) return -1;
    }
    return count;
}

OracleSolution brute_force_optimal(const DmdpInstance& inst) {
    const std::int64_t count = deterministic_policy_count(inst, kEnumerationGuard);
    if (count < 0)
        throw GuardError("brute_force_optimal: |A|^|S| exceeds the enumeration guard 1e6");

    struct ChunkBest {
        double score = -1.0;
        std::int64_t index = -1;
        ValueVector v;
    };
    // Fixed chunking keeps the reduction deterministic for any thread count.
    const std::int64_t chunks = std::min<std::int64_t>(count, 64);
    std::vector<ChunkBest> best(chunks);
    parallel_for(chunks, [&](std::int64_t c) {
        const std::int64_t lo = c * count / chunks;
        const std::int64_t hi = (c + 1) * count / chunks;
        ChunkBest local;
        for (std::int64_t p = lo; p < hi; ++p) {
            ValueVector v = solve_deterministic(inst, policy_from_index(p, inst.num_states,
                                                                        inst.num_actions));
            const double score = mean(v);
            if (local.index < 0 || score > local.score) {
                local.score = score;
                local.index = p;
                local.v = std::move(v);
            }
        }
        best[c] = std::move(local);
    });

    ChunkBest winner;
    for (const auto& b : best) {
        if (b.index < 0) continue;
        if (winner.index < 0 || b.score > winner.score) winner = b;
    }

    OracleSolution out;
    out.v_star = winner.v;
    out.policy = policy_from_index(winner.index, inst.num_states, inst.num_actions);
    out.method = OracleMethod::enumeration;

    const BellmanBackup check = bellman_backup(inst, out.v_star);
    double residual = 0.0;
    for (int i = 0; i < inst.num_states; ++i)
        residual = std::max(residual, std::abs(out.v_star[i] - check.values[i]));
    if (residual > 1e-9)
        throw NumericError("brute_force_optimal: winning policy has Bellman residual " +
                           std::to_string(residual));
    return out;
}

OracleSolution value_iteration(const DmdpInstance& inst, double tol) {
    if (!(tol > 0.0)) throw ValidationError("value_iteration: tolerance must be positive");
    const double gamma = inst.discount;
    const double stop = tol * (1.0 - gamma) / gamma;
    ValueVector v(inst.num_states, 0.0);
    for (std::int64_t sweep = 0; sweep < kPowerSweepCap; ++sweep) {
        BellmanBackup bb = bellman_backup(inst, v);
        double diff = 0.0;
        for (int i = 0; i < inst.num_states; ++i)
            diff = std::max(diff, std::abs(bb.values[i] - v[i]));
        v = std::move(bb.values);
        if (diff <= stop) break;
    }
    OracleSolution out;
    out.policy = bellman_backup(inst, v).greedy;
    out.v_star = std::move(v);
    out.method = OracleMethod::value_iteration;
    return out;
}

OracleSolution policy_iteration(const DmdpInstance& inst) {
    std::vector<int> policy(inst.num_states, 0);
    std::vector<int> previous;
    ValueVector v;
    for (int round = 0; round < 100000; ++round) {
        v = solve_deterministic(inst, policy);
        std::vector<int> greedy = bellman_backup(inst, v).greedy;
        if (greedy == policy) {
            OracleSolution out;
            out.v_star = std::move(v);
            out.policy = std::move(policy);
            out.method = OracleMethod::policy_iteration;
            return out;
        }
        if (greedy == previous) {
            // 2-cycle under floating-point ties; both policies are optimal
            // to solver precision, keep the current evaluation.
            OracleSolution out;
            out.v_star = std::move(v);
            out.policy = std::move(policy);
            out.method = OracleMethod::policy_iteration;
            return out;
        }
        previous = std::move(policy);
        policy = std::move(greedy);
    }
    throw NumericError("policy_iteration: no convergence within the round cap");
}

std::vector<double> stationary_from_matrix(std::span<const double> transition, int num_states,
                                           double tol) {
    if (!(tol > 0.0)) throw ValidationError("stationary distribution: tolerance must be positive");
    const int n = num_states;
    detail::RowMajorMap p(transition.data(), n, n);
    Eigen::VectorXd nu = Eigen::VectorXd::Constant(n, 1.0 / n);
    // Plain sweeps first; lazy-chain damping (same fixed point) afterwards in
    // case the chain is periodic.
    for (int phase = 0; phase < 2; ++phase) {
        const double damp = phase == 0 ? 1.0 : 0.5;
        for (std::int64_t sweep = 0; sweep < kPowerSweepCap / 2; ++sweep) {
            Eigen::VectorXd pushed = p.transpose() * nu;
            const double residual = (pushed - nu).lpNorm<1>();
            nu = (1.0 - damp) * nu + damp * pushed;
            nu /= nu.sum();
            if (residual <= tol) return std::vector<double>(nu.data(), nu.data() + n);
        }
    }
    throw NumericError(
        "stationary distribution: power iteration did not converge within the sweep cap; "
        "use the direct linear-solve fallback (stationary_distribution_direct)");
}

std::vector<double> stationary_distribution(const DmdpInstance& inst, const RandomizedPolicy& pol,
                                            double tol) {
    return stationary_from_matrix(policy_transition(inst, pol).transition, inst.num_states, tol);
}

std::vector<double> stationary_direct_from_matrix(std::span<const double> transition,
                                                  int num_states) {
    const int n = num_states;
    detail::RowMajorMap p(transition.data(), n, n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - p.transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd nu = a.colPivHouseholderQr().solve(b);
    const double total = nu.sum();
    if (!(std::abs(total - 1.0) <= 1e-6))
        throw NumericError("stationary distribution: direct solve failed to normalize");
    nu /= total;
    const double residual = (p.transpose() * nu - nu).lpNorm<1>();
    if (residual > 1e-9)
        throw NumericError("stationary distribution: direct solve residual " +
                           std::to_string(residual));
    return std::vector<double>(nu.data(), nu.data() + n);
}

std::vector<double> stationary_distribution_direct(const DmdpInstance& inst,
                                                   const RandomizedPolicy& pol) {
    return stationary_direct_from_matrix(policy_transition(inst, pol).transition,
                                         inst.num_states);
}

std::vector<double> discounted_occupancy(const DmdpInstance& inst, const RandomizedPolicy& pol,
                                         std::span<const double> q) {
    const int n = inst.num_states;
    PolicyChain chain = policy_transition(inst, pol);
    detail::RowMajorMap p(chain.transition.data(), n, n);
    Eigen::Map<const Eigen::VectorXd> qv(q.data(), n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - inst.discount * p.transpose();
    Eigen::VectorXd m = a.partialPivLu().solve((1.0 - inst.discount) * qv);
    return std::vector<double>(m.data(), m.data() + n);
}

ErgodicityReport ergodicity_constants(const DmdpInstance& inst, std::span<const double> q) {
    const std::int64_t count = deterministic_policy_count(inst, kEnumerationGuard);
    if (count < 0)
        throw GuardError("ergodicity_constants: |A|^|S| exceeds the enumeration guard 1e6");
    for (int i = 0; i < inst.num_states; ++i)
        if (!(q[i] > 0.0))
            throw ValidationError("ergodicity_constants: q must be elementwise positive");

    const int n = inst.num_states;
    ErgodicityReport report;
    report.stationary.resize(count);
    report.c1 = std::numeric_limits<double>::infinity();
    report.c2 = 0.0;

    for (std::int64_t pidx = 0; pidx < count; ++pidx) {
        const std::vector<int> actions = policy_from_index(pidx, n, inst.num_actions);
        std::vector<double> p(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i) {
            const auto row = inst.transition_row(i, actions[i]);
            std::copy(row.begin(), row.end(), p.begin() + static_cast<std::size_t>(i) * n);
        }
        // A unique, everywhere-positive stationary distribution is required;
        // rank(I - P') < n-1 means several recurrent classes.
        detail::RowMajorMap pm(p.data(), n, n);
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - pm.transpose();
        if (a.colPivHouseholderQr().rank() < n - 1)
            throw NumericError("ergodicity_constants: policy " + describe_policy(actions) +
                               " induces a chain with multiple recurrent classes");
        std::vector<double> nu = stationary_direct_from_matrix(p, n);
        for (int i = 0; i < n; ++i) {
            if (nu[i] <= 1e-12)
                throw NumericError("ergodicity_constants: policy " + describe_policy(actions) +
                                   " has (near-)zero stationary mass at state " +
                                   std::to_string(i));
            const double ratio = nu[i] / q[i];
            report.c1 = std::min(report.c1, ratio);
            report.c2 = std::max(report.c2, ratio);
        }
        report.stationary[pidx] = std::move(nu);
    }
    return report;
}

}  // namespace dmdp
