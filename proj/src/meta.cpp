#include "dmdp/meta.hpp"

#include <cmath>

#include "dmdp/parallel.hpp"

namespace dmdp {

int trial_count(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw ValidationError("trial_count: delta must lie in (0,1)");
    const double target = delta / 2.0;
    int k = 1;
    double power = 1.0 / 3.0;
    while (power > target) {
        ++k;
        power /= 3.0;
        if (k > 128) throw ValidationError("trial_count: delta too small");
    }
    return k;
}

TrialOutcome run_trial(const DmdpInstance& inst,
                       std::shared_ptr<const TransitionSampler> sampler, const MetaConfig& cfg,
                       const SaddleConfig& saddle, int trial_index) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw ValidationError("meta: epsilon must lie in (0,1)");
    const int trials = cfg.trials > 0 ? cfg.trials : trial_count(cfg.delta);
    const SolverSchedule schedule =
        schedule_from(inst, saddle, cfg.epsilon / 2.0, cfg.ct, cfg.iterations_override);

    TrialOutcome out;
    out.report.index = trial_index;
    out.report.seed = cfg.base_seed;
    out.report.solver_stream = 2 * static_cast<std::uint64_t>(trial_index);
    out.report.eval_stream = 2 * static_cast<std::uint64_t>(trial_index) + 1;
    out.report.schedule = schedule;

    RunOptions opts;
    opts.stream_id = out.report.solver_stream;
    opts.metrics_every = cfg.metrics_every;
    RunResult result = run(inst, sampler, schedule, cfg.base_seed, opts);
    out.report.metrics = std::move(result.metrics);

    const EvalConfig eval_cfg =
        eval_config(cfg.epsilon / 2.0, cfg.delta / (2.0 * trials), inst.discount);
    const std::uint64_t eval_seed =
        SplitMix64::derive_seed(cfg.base_seed, out.report.eval_stream);
    out.y_bar = mc_evaluate(inst, *sampler, result.averaged_policy, saddle.q, eval_cfg, eval_seed);
    out.report.y_bar = out.y_bar;
    out.policy = std::move(result.averaged_policy);
    return out;
}

MetaResult meta_solve(const DmdpInstance& inst,
                      std::shared_ptr<const TransitionSampler> sampler, const MetaConfig& cfg,
                      const SaddleConfig& saddle) {
    const int trials = cfg.trials > 0 ? cfg.trials : trial_count(cfg.delta);
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](std::int64_t k) {
        MetaConfig trial_cfg = cfg;
        trial_cfg.trials = trials;
        outcomes[static_cast<std::size_t>(k)] =
            run_trial(inst, sampler, trial_cfg, saddle, static_cast<int>(k));
    });

    int best = 0;
    for (int k = 1; k < trials; ++k)
        if (outcomes[k].y_bar > outcomes[best].y_bar) best = k;

    MetaResult result;
    result.policy = std::move(outcomes[static_cast<std::size_t>(best)].policy);
    result.selected = best;
    result.trials.reserve(outcomes.size());
    for (auto& o : outcomes) result.trials.push_back(std::move(o.report));
    return result;
}

}  // namespace dmdp
