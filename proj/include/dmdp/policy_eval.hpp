#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dmdp/instance.hpp"
#include "dmdp/rng.hpp"
#include "dmdp/sampler.hpp"
#include "dmdp/sum_tree.hpp"

namespace dmdp {

/// Monte-Carlo evaluation parameters. The horizon truncates the discounted
/// tail below epsilon/2 and the repeat count gives two-sided Hoeffding error
/// epsilon/2 with failure probability delta over returns in [0, 1/(1-gamma)]:
///   horizon  n = ceil(ln(eps (1-gamma) / 2) / ln gamma)
///   repeats  K = ceil(8 ln(2/delta) / (eps^2 (1-gamma)^2))
struct EvalConfig {
    double epsilon = 0.0;
    double delta = 0.0;
    std::int64_t horizon = 0;
    std::int64_t repeats = 0;
};

EvalConfig eval_config(double epsilon, double delta, double gamma);

/// Per-state action sampling trees for a fixed randomized policy.
class PolicySampler {
  public:
    explicit PolicySampler(const RandomizedPolicy& pol);
    int sample(int state, double u) const { return rows_[state].sample(u); }

  private:
    std::vector<SumTree> rows_;
};

/// One truncated simulation: draws i0 from `initial`, follows the policy for
/// `horizon` transitions, and returns sum_t gamma^t r. The result always lies
/// in [0, (1 - gamma^n) / (1 - gamma)] and underestimates q'v^pi by at most
/// gamma^n / (1 - gamma) in expectation.
double rollout(const DmdpInstance& inst, const TransitionSampler& sampler,
               const PolicySampler& policy, const SumTree& initial, std::int64_t horizon,
               SplitMix64& rng);

/// Mean of cfg.repeats independent rollouts, each on its own PRNG substream
/// of `seed`, combined by a deterministic ordered reduction. Satisfies
/// q'v^pi - eps <= result <= q'v^pi with probability at least 1 - delta.
double mc_evaluate(const DmdpInstance& inst, const TransitionSampler& sampler,
                   const RandomizedPolicy& pol, std::span<const double> q, const EvalConfig& cfg,
                   std::uint64_t seed);

/// Exact evaluation: solves (I - gamma P^pi) v = r^pi by dense LU with a
/// 1e-10 residual contract. Guarded to |S| <= 4096.
ValueVector exact_value(const DmdpInstance& inst, const RandomizedPolicy& pol);

}  // namespace dmdp
