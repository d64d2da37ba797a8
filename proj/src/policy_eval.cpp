#include "dmdp/policy_eval.hpp"

#include <cmath>

#include "dense_solve.hpp"
#include "dmdp/parallel.hpp"

namespace dmdp {

namespace {
constexpr std::int64_t kRolloutChunk = 8192;
constexpr int kExactValueGuard = 4096;
}  // namespace

EvalConfig eval_config(double epsilon, double delta, double gamma) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("eval_config: epsilon must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw ValidationError("eval_config: delta must lie in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("eval_config: gamma must lie in (0,1)");
    EvalConfig cfg;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    cfg.horizon = static_cast<std::int64_t>(
        std::ceil(std::log(epsilon * (1.0 - gamma) / 2.0) / std::log(gamma)));
    if (cfg.horizon < 1) cfg.horizon = 1;
    cfg.repeats = static_cast<std::int64_t>(std::ceil(
        8.0 * std::log(2.0 / delta) / (epsilon * epsilon * (1.0 - gamma) * (1.0 - gamma))));
    return cfg;
}

PolicySampler::PolicySampler(const RandomizedPolicy& pol) {
    rows_.reserve(pol.num_states);
    for (int i = 0; i < pol.num_states; ++i) rows_.emplace_back(pol.row(i));
}

double rollout(const DmdpInstance& inst, const TransitionSampler& sampler,
               const PolicySampler& policy, const SumTree& initial, std::int64_t horizon,
               SplitMix64& rng) {
    int state = initial.sample(rng.next_double());
    double total = 0.0;
    double weight = 1.0;
    for (std::int64_t t = 0; t < horizon; ++t) {
        const int action = policy.sample(state, rng.next_double());
        const int next = sampler.sample_next(state, action, rng.next_double());
        total += weight * inst.reward(state, action, next);
        weight *= inst.discount;
        state = next;
    }
    return total;
}

double mc_evaluate(const DmdpInstance& inst, const TransitionSampler& sampler,
                   const RandomizedPolicy& pol, std::span<const double> q, const EvalConfig& cfg,
                   std::uint64_t seed) {
    const PolicySampler policy(pol);
    const SumTree initial{q};
    const std::int64_t repeats = cfg.repeats;
    const std::int64_t chunks = (repeats + kRolloutChunk - 1) / kRolloutChunk;

    // Fixed chunk boundaries and an ordered final reduction keep the result
    // bitwise reproducible for any worker count.
    std::vector<double> chunk_sums(static_cast<std::size_t>(chunks), 0.0);
    parallel_for(chunks, [&](std::int64_t c) {
        const std::int64_t lo = c * kRolloutChunk;
        const std::int64_t hi = std::min(repeats, lo + kRolloutChunk);
        double sum = 0.0;
        for (std::int64_t k = lo; k < hi; ++k) {
            SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(k));
            sum += rollout(inst, sampler, policy, initial, cfg.horizon, rng);
        }
        chunk_sums[static_cast<std::size_t>(c)] = sum;
    });
    double total = 0.0;
    for (double s : chunk_sums) total += s;
    return total / static_cast<double>(repeats);
}

ValueVector exact_value(const DmdpInstance& inst, const RandomizedPolicy& pol) {
    if (inst.num_states > kExactValueGuard)
        throw GuardError("exact_value: dense solve guarded to |S| <= 4096");
    PolicyChain chain = policy_transition(inst, pol);
    return detail::discounted_value_solve(chain.transition, chain.reward, inst.num_states,
                                          inst.discount, 1e-10);
}

}  // namespace dmdp
