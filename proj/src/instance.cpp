#include "dmdp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dmdp {

namespace {

constexpr double kFeasTol = 1e-9;

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

RandomizedPolicy RandomizedPolicy::uniform(int num_states, int num_actions) {
    RandomizedPolicy pol;
    pol.num_states = num_states;
    pol.num_actions = num_actions;
    pol.probs.assign(static_cast<std::size_t>(num_states) * num_actions,
                     1.0 / static_cast<double>(num_actions));
    return pol;
}

RandomizedPolicy RandomizedPolicy::deterministic(int num_actions, std::span<const int> actions) {
    RandomizedPolicy pol;
    pol.num_states = static_cast<int>(actions.size());
    pol.num_actions = num_actions;
    pol.probs.assign(actions.size() * static_cast<std::size_t>(num_actions), 0.0);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] < 0 || actions[i] >= num_actions)
            throw ValidationError("deterministic policy: action out of range at state " +
                                  std::to_string(i));
        pol.probs[i * num_actions + static_cast<std::size_t>(actions[i])] = 1.0;
    }
    return pol;
}

SaddleConfig make_general_config(const DmdpInstance& inst) {
    SaddleConfig cfg;
    cfg.theta = 1.0 - inst.discount;
    cfg.q.assign(inst.num_states, 1.0 / static_cast<double>(inst.num_states));
    cfg.mode = SaddleMode::general;
    return cfg;
}

SaddleConfig make_ergodic_config(const DmdpInstance& inst, double c1, double c2) {
    if (!(c1 > 0.0) || !(c2 >= c1))
        throw ValidationError("ergodic config: need 0 < c1 <= c2");
    SaddleConfig cfg;
    cfg.theta = 1.0 - inst.discount + inst.discount * (c1 / c2);
    cfg.q.assign(inst.num_states, 1.0 / static_cast<double>(inst.num_states));
    cfg.mode = SaddleMode::ergodic;
    return cfg;
}

ValidationReport validate_instance(const DmdpInstance& inst) {
    ValidationReport report;
    auto add = [&report](std::string msg, int i, int a, int j, double mag) {
        report.violations.push_back({std::move(msg), i, a, j, mag});
    };

    if (inst.num_states < 1 || inst.num_actions < 1) {
        add("num_states and num_actions must be positive", -1, -1, -1, 0.0);
        return report;
    }
    if (!(inst.discount > 0.0 && inst.discount < 1.0))
        add("discount " + fmt_double(inst.discount) + " not strictly inside (0,1)", -1, -1, -1,
            inst.discount);

    const std::size_t pairs =
        static_cast<std::size_t>(inst.num_states) * static_cast<std::size_t>(inst.num_actions);
    const std::size_t want_rewards =
        inst.reward_kind == RewardKind::expected ? pairs : pairs * inst.num_states;
    if (inst.rewards.size() != want_rewards) {
        add("reward storage has wrong length", -1, -1, -1, 0.0);
        return report;
    }
    if (inst.transitions.size() != pairs * static_cast<std::size_t>(inst.num_states)) {
        add("transition storage has wrong length", -1, -1, -1, 0.0);
        return report;
    }

    for (int i = 0; i < inst.num_states; ++i) {
        for (int a = 0; a < inst.num_actions; ++a) {
            double row_sum = 0.0;
            for (int j = 0; j < inst.num_states; ++j) {
                const double p = inst.transition(i, a, j);
                if (!(p >= 0.0))
                    add("negative transition probability " + fmt_double(p) + " at (" +
                            std::to_string(i) + "," + std::to_string(a) + "," +
                            std::to_string(j) + ")",
                        i, a, j, p);
                row_sum += p;
            }
            if (!(std::abs(row_sum - 1.0) <= kFeasTol))
                add("row sum " + fmt_double(row_sum) + " != 1 at (" + std::to_string(i) + "," +
                        std::to_string(a) + ")",
                    i, a, -1, row_sum - 1.0);
            if (inst.reward_kind == RewardKind::expected) {
                const double r = inst.rewards[inst.pair_index(i, a)];
                if (!(r >= 0.0 && r <= 1.0))
                    add("reward " + fmt_double(r) + " not in [0,1] at (" + std::to_string(i) +
                            "," + std::to_string(a) + ")",
                        i, a, -1, r);
            } else {
                for (int j = 0; j < inst.num_states; ++j) {
                    const double r = inst.reward(i, a, j);
                    if (!(r >= 0.0 && r <= 1.0))
                        add("reward " + fmt_double(r) + " not in [0,1] at (" + std::to_string(i) +
                                "," + std::to_string(a) + "," + std::to_string(j) + ")",
                            i, a, j, r);
                }
            }
        }
    }
    return report;
}

double expected_reward(const DmdpInstance& inst, int i, int a) {
    if (i < 0 || i >= inst.num_states || a < 0 || a >= inst.num_actions)
        throw std::out_of_range("expected_reward: state or action index out of range");
    if (inst.reward_kind == RewardKind::expected) return inst.rewards[inst.pair_index(i, a)];
    double sum = 0.0;
    const auto row = inst.transition_row(i, a);
    for (int j = 0; j < inst.num_states; ++j) sum += row[j] * inst.reward(i, a, j);
    return sum;
}

BellmanBackup bellman_backup(const DmdpInstance& inst, const ValueVector& v) {
    if (static_cast<int>(v.size()) != inst.num_states)
        throw ValidationError("bellman_backup: value vector has wrong length");
    BellmanBackup out;
    out.values.resize(inst.num_states);
    out.greedy.resize(inst.num_states);
    for (int i = 0; i < inst.num_states; ++i) {
        double best = -1.0;
        int best_action = 0;
        for (int a = 0; a < inst.num_actions; ++a) {
            const auto row = inst.transition_row(i, a);
            double dot = 0.0;
            for (int j = 0; j < inst.num_states; ++j) dot += row[j] * v[j];
            const double backed = inst.discount * dot + expected_reward(inst, i, a);
            if (a == 0 || backed > best) {
                best = backed;
                best_action = a;
            }
        }
        out.values[i] = best;
        out.greedy[i] = best_action;
    }
    return out;
}

PolicyChain policy_transition(const DmdpInstance& inst, const RandomizedPolicy& pol) {
    if (pol.num_states != inst.num_states || pol.num_actions != inst.num_actions)
        throw ValidationError("policy_transition: policy dimensions do not match the instance");
    PolicyChain chain;
    chain.transition.assign(static_cast<std::size_t>(inst.num_states) * inst.num_states, 0.0);
    chain.reward.assign(inst.num_states, 0.0);
    for (int i = 0; i < inst.num_states; ++i) {
        double* out_row = chain.transition.data() + static_cast<std::size_t>(i) * inst.num_states;
        for (int a = 0; a < inst.num_actions; ++a) {
            const double w = pol.at(i, a);
            if (w == 0.0) continue;
            const auto row = inst.transition_row(i, a);
            for (int j = 0; j < inst.num_states; ++j) out_row[j] += w * row[j];
            chain.reward[i] += w * expected_reward(inst, i, a);
        }
    }
    return chain;
}

std::vector<double> bellman_residuals(const DmdpInstance& inst, const ValueVector& v) {
    std::vector<double> res(static_cast<std::size_t>(inst.num_states) * inst.num_actions);
    for (int i = 0; i < inst.num_states; ++i) {
        for (int a = 0; a < inst.num_actions; ++a) {
            const auto row = inst.transition_row(i, a);
            double dot = 0.0;
            for (int j = 0; j < inst.num_states; ++j) dot += row[j] * v[j];
            res[inst.pair_index(i, a)] = v[i] - inst.discount * dot - expected_reward(inst, i, a);
        }
    }
    return res;
}

double duality_gap(const DmdpInstance& inst, const ValueVector& v_star, const DualVariable& mu) {
    if (mu.num_states != inst.num_states || mu.num_actions != inst.num_actions)
        throw ValidationError("duality_gap: dual dimensions do not match the instance");
    const std::vector<double> res = bellman_residuals(inst, v_star);
    double gap = 0.0;
    for (std::size_t k = 0; k < res.size(); ++k) gap += mu.entries[k] * res[k];
    if (gap < -kFeasTol)
        throw NumericError("duality_gap: negative gap " + fmt_double(gap) +
                           "; v_star is not the optimal value vector");
    return gap;
}

RandomizedPolicy dual_to_policy(const DualVariable& mu) {
    RandomizedPolicy pol;
    pol.num_states = mu.num_states;
    pol.num_actions = mu.num_actions;
    pol.probs.resize(mu.entries.size());
    for (int i = 0; i < mu.num_states; ++i) {
        double mass = 0.0;
        for (int a = 0; a < mu.num_actions; ++a) mass += mu.at(i, a);
        if (!(mass > 0.0))
            throw NumericError("dual_to_policy: zero row mass at state " + std::to_string(i));
        for (int a = 0; a < mu.num_actions; ++a)
            pol.probs[static_cast<std::size_t>(i) * mu.num_actions + a] = mu.at(i, a) / mass;
    }
    return pol;
}

bool check_dual_feasible(const DualVariable& mu) {
    double total = 0.0;
    for (double e : mu.entries) {
        if (e < -kFeasTol) return false;
        total += e;
    }
    if (std::abs(total - 1.0) > kFeasTol) return false;
    for (int i = 0; i < mu.num_states; ++i) {
        double mass = 0.0;
        for (int a = 0; a < mu.num_actions; ++a) mass += mu.at(i, a);
        if (mass < mu.theta * mu.q[i] - kFeasTol) return false;
    }
    return true;
}

DualVariable assemble_dual(std::span<const double> xi, const RandomizedPolicy& pol,
                           const SaddleConfig& cfg) {
    if (static_cast<int>(xi.size()) != pol.num_states ||
        static_cast<int>(cfg.q.size()) != pol.num_states)
        throw ValidationError("assemble_dual: dimension mismatch");
    DualVariable mu;
    mu.num_states = pol.num_states;
    mu.num_actions = pol.num_actions;
    mu.theta = cfg.theta;
    mu.q = cfg.q;
    mu.entries.resize(pol.probs.size());
    for (int i = 0; i < pol.num_states; ++i) {
        const double mass = (1.0 - cfg.theta) * xi[i] + cfg.theta * cfg.q[i];
        for (int a = 0; a < pol.num_actions; ++a)
            mu.entries[static_cast<std::size_t>(i) * pol.num_actions + a] = mass * pol.at(i, a);
    }
    return mu;
}

}  // namespace dmdp
