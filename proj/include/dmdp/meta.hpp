#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dmdp/instance.hpp"
#include "dmdp/policy_eval.hpp"
#include "dmdp/sampler.hpp"
#include "dmdp/solver.hpp"

namespace dmdp {

/// Best-of-K meta selection: K independent solver trials at precision eps/2,
/// each candidate evaluated by Monte Carlo at precision eps/2 with failure
/// probability delta/(2K); the empirically best policy is returned.
struct MetaConfig {
    double epsilon = 0.0;
    double delta = 0.0;
    int trials = 0;  // 0 = trial_count(delta)
    std::uint64_t base_seed = 0;
    double ct = 1.0;
    std::optional<std::int64_t> iterations_override;
    std::int64_t metrics_every = 0;  // per-trial metrics records, 0 = none
};

/// Smallest K with (1/3)^K <= delta / 2.
int trial_count(double delta);

struct TrialReport {
    int index = 0;
    std::uint64_t seed = 0;
    std::uint64_t solver_stream = 0;
    std::uint64_t eval_stream = 0;
    double y_bar = 0.0;
    SolverSchedule schedule;
    std::vector<MetricsRecord> metrics;
};

struct TrialOutcome {
    RandomizedPolicy policy;
    double y_bar = 0.0;
    TrialReport report;
};

/// One trial: solver run on stream 2k, Monte-Carlo evaluation on stream 2k+1.
TrialOutcome run_trial(const DmdpInstance& inst,
                       std::shared_ptr<const TransitionSampler> sampler, const MetaConfig& cfg,
                       const SaddleConfig& saddle, int trial_index);

struct MetaResult {
    RandomizedPolicy policy;
    int selected = 0;
    std::vector<TrialReport> trials;  // ordered by trial index
};

/// Runs the trials (concurrently; the report order is by trial index, so the
/// output is deterministic) and returns the argmax-Y policy, ties to the
/// lowest trial index.
MetaResult meta_solve(const DmdpInstance& inst,
                      std::shared_ptr<const TransitionSampler> sampler, const MetaConfig& cfg,
                      const SaddleConfig& saddle);

}  // namespace dmdp
