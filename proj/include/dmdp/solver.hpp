#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmdp/instance.hpp"
#include "dmdp/rng.hpp"
#include "dmdp/sampler.hpp"
#include "dmdp/sum_tree.hpp"

namespace dmdp {

/// Step sizes and iteration budget of the randomized primal-dual iteration:
///   beta  = (1-gamma) sqrt(log(|S||A| + 1) / (2 |S||A| T))
///   alpha = |S| / (2 (1-gamma)^2) * beta
///   offset M = 1 / (1-gamma)
/// T comes from the mode-dependent schedule formula scaled by ct, or from an
/// explicit override.
struct SolverSchedule {
    std::int64_t iterations = 0;  // T
    double beta = 0.0;
    double alpha = 0.0;
    double offset = 0.0;  // M
    double theta = 0.0;
    std::vector<double> q;
    double ct = 1.0;
    double rescale_threshold = 1e-100;
};

/// General mode: T = ct * |S|^3 |A| log(|S||A|) / ((1-gamma)^6 eps^2).
/// Ergodic mode: T = ct * (c2/c1)^4 |S||A| log(|S||A|) / ((1-gamma)^4 eps^2),
/// with c2/c1 recovered from cfg.theta = 1 - gamma + gamma c1/c2.
SolverSchedule schedule_from(const DmdpInstance& inst, const SaddleConfig& cfg, double epsilon,
                             double ct = 1.0,
                             std::optional<std::int64_t> iteration_override = std::nullopt);

struct MetricsRecord {
    std::int64_t t = 0;
    bool has_gap = false;
    double gap = 0.0;
    double vmax = 0.0;
    double xi_entropy = 0.0;
    std::int64_t clamps = 0;
};

/// `t=<int> gap=<float|na> vmax=<float> xi_entropy=<float> clamps=<int>`,
/// floats with 17 significant digits.
std::string format_metrics_line(const MetricsRecord& record);
std::string format_metrics_stream(std::span<const MetricsRecord> records);

struct RunResult {
    RandomizedPolicy averaged_policy;
    ValueVector final_v;
    std::vector<MetricsRecord> metrics;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    SolverSchedule schedule;
    std::string generator = kGeneratorName;
};

/// Live state of one solver trial. Confined to a single thread; the
/// transition sampler is immutable and may be shared across trials.
///
/// The running sum of normalized policy rows is kept lazily per state as
/// S_i = g_i * w_i + d_i with w_i the current weight row: touching row i at
/// iteration t first adds (t - t_i)/Z_i to g_i (the row was constant since
/// the last touch), then compensates the single leaf edit through d_i, all
/// O(1) per iteration. Rescaling multiplies a row by a power of two and
/// divides g_i by the same factor, which is exact.
class SolverState {
  public:
    SolverState(const DmdpInstance& inst, std::shared_ptr<const TransitionSampler> sampler,
                const SolverSchedule& schedule, std::uint64_t seed, std::uint64_t stream_id = 0);

    /// One iteration: sample (i, a, j), form the scaled increment
    /// delta = beta (gamma v_j - v_i + r - M) / (((1-theta) xi_i + theta q_i) pi_ia),
    /// apply the two clipped value steps (v_i first, then v_j, also when
    /// j == i), then the multiplicative xi / pi updates. delta <= 0 always;
    /// a violation or non-finite value raises NumericError.
    void step();

    std::int64_t iteration() const { return iter_; }
    std::int64_t clamp_count() const { return clamps_; }
    const ValueVector& values() const { return v_; }

    std::vector<double> state_weights() const;  // normalized xi
    RandomizedPolicy policy() const;            // normalized current pi
    double xi_entropy() const;

    /// Mean of the normalized policy iterates over iterations 1..iteration(),
    /// reconstructed from the lazy ledgers (rows renormalized; the raw sums
    /// are verified to lie within 1e-6 of 1). Non-mutating, so repeated calls
    /// agree and the run can continue afterwards.
    RandomizedPolicy averaged_policy() const;

    /// Gap of the currently assembled dual against precomputed residuals at
    /// the optimal value vector.
    double current_dual_gap(std::span<const double> residuals) const;

    const SumTree& xi_tree() const { return xi_tree_; }
    const SumTree& policy_tree(int state) const { return pi_trees_[state]; }

  private:
    void rescale_row(int state);
    void rescale_xi();

    const DmdpInstance* inst_;
    std::shared_ptr<const TransitionSampler> sampler_owner_;
    const TransitionSampler* sampler_;

    int num_states_;
    int num_actions_;
    double discount_;
    double beta_;
    double alpha_;
    double offset_;
    double theta_;
    double rescale_threshold_;
    std::vector<double> q_;

    SumTree q_tree_;
    ValueVector v_;
    SumTree xi_tree_;
    std::vector<SumTree> pi_trees_;

    std::vector<double> avg_coeff_;          // g_i
    std::vector<double> avg_corr_;           // d_{i,a}
    std::vector<std::int64_t> last_touch_;   // t_i

    std::int64_t iter_ = 0;
    std::int64_t clamps_ = 0;
    SplitMix64 rng_;
};

struct RunOptions {
    std::int64_t metrics_every = 0;  // 0 = no metrics records
    const ValueVector* oracle_values = nullptr;
    std::uint64_t stream_id = 0;
};

/// Executes schedule.iterations steps and returns the averaged policy, the
/// final value vector, and the metrics stream. Identical (instance, schedule,
/// seed, stream) reproduce the result bitwise. T = 0 returns the initial
/// uniform policy and a single t=0 metrics record.
RunResult run(const DmdpInstance& inst, std::shared_ptr<const TransitionSampler> sampler,
              const SolverSchedule& schedule, std::uint64_t seed, const RunOptions& opts = {});

/// Gap of the dual assembled from an averaged policy with state weights q,
/// i.e. mu_{i,a} = q_i * pi_{i,a}.
double averaged_dual_gap(const DmdpInstance& inst, const ValueVector& v_star,
                         const RandomizedPolicy& averaged, const SaddleConfig& cfg);

}  // namespace dmdp
