#include "dmdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dmdp {

namespace {

// exp underflow clamp; exp(-700) is still normal, so a clamped update shrinks
// a weight without wiping it.
constexpr double kLogFloor = -700.0;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

SolverSchedule schedule_from(const DmdpInstance& inst, const SaddleConfig& cfg, double epsilon,
                             double ct, std::optional<std::int64_t> iteration_override) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("schedule_from: epsilon must lie in (0,1)");
    if (!(ct > 0.0)) throw ValidationError("schedule_from: ct must be positive");
    const double gamma = inst.discount;
    const double one_minus = 1.0 - gamma;
    if (cfg.theta < one_minus - 1e-12)
        throw ValidationError("schedule_from: theta must be at least 1-gamma");
    if (static_cast<int>(cfg.q.size()) != inst.num_states)
        throw ValidationError("schedule_from: q has wrong length");

    const double states = inst.num_states;
    const double actions = inst.num_actions;
    const double pairs = states * actions;

    SolverSchedule sched;
    if (iteration_override) {
        if (*iteration_override < 0)
            throw ValidationError("schedule_from: iteration override must be nonnegative");
        sched.iterations = *iteration_override;
    } else {
        const double log_pairs = std::log(pairs);
        double t_real;
        if (cfg.mode == SaddleMode::general) {
            t_real = ct * states * states * states * actions * log_pairs /
                     (std::pow(one_minus, 6) * epsilon * epsilon);
        } else {
            if (!(cfg.theta > one_minus))
                throw ValidationError(
                    "schedule_from: ergodic mode needs theta > 1-gamma (c1, c2 context)");
            const double ratio = gamma / (cfg.theta - one_minus);  // c2 / c1
            t_real = ct * std::pow(ratio, 4) * pairs * log_pairs /
                     (std::pow(one_minus, 4) * epsilon * epsilon);
        }
        if (!(t_real >= 0.0) || t_real > 9.0e18)
            throw GuardError("schedule_from: iteration count does not fit in 64 bits");
        sched.iterations = static_cast<std::int64_t>(std::ceil(t_real));
    }

    if (sched.iterations > 0) {
        sched.beta = one_minus * std::sqrt(std::log(pairs + 1.0) /
                                           (2.0 * pairs * static_cast<double>(sched.iterations)));
        sched.alpha = states / (2.0 * one_minus * one_minus) * sched.beta;
    }
    sched.offset = 1.0 / one_minus;
    sched.theta = cfg.theta;
    sched.q = cfg.q;
    sched.ct = ct;
    return sched;
}

SolverState::SolverState(const DmdpInstance& inst,
                         std::shared_ptr<const TransitionSampler> sampler,
                         const SolverSchedule& schedule, std::uint64_t seed,
                         std::uint64_t stream_id)
    : inst_(&inst),
      sampler_owner_(std::move(sampler)),
      num_states_(inst.num_states),
      num_actions_(inst.num_actions),
      discount_(inst.discount),
      beta_(schedule.beta),
      alpha_(schedule.alpha),
      offset_(schedule.offset),
      theta_(schedule.theta),
      rescale_threshold_(schedule.rescale_threshold),
      q_(schedule.q),
      rng_(SplitMix64::stream(seed, stream_id)) {
    if (!sampler_owner_)
        sampler_owner_ = std::make_shared<TransitionSampler>(TransitionSampler::build(inst));
    sampler_ = sampler_owner_.get();
    if (sampler_->num_states() != num_states_ || sampler_->num_actions() != num_actions_)
        throw ValidationError("SolverState: sampler dimensions do not match the instance");
    if (static_cast<int>(q_.size()) != num_states_)
        throw ValidationError("SolverState: q has wrong length");
    for (double qi : q_)
        if (!(qi > 0.0)) throw ValidationError("SolverState: q must be elementwise positive");
    if (!(theta_ >= 0.0 && theta_ <= 1.0))
        throw ValidationError("SolverState: theta must lie in [0, 1]");

    q_tree_ = SumTree(q_);
    v_.assign(num_states_, 0.0);
    xi_tree_ = SumTree(std::vector<double>(num_states_, 1.0 / num_states_));
    pi_trees_.reserve(num_states_);
    const std::vector<double> uniform_row(num_actions_, 1.0 / num_actions_);
    for (int i = 0; i < num_states_; ++i) pi_trees_.emplace_back(uniform_row);
    avg_coeff_.assign(num_states_, 0.0);
    avg_corr_.assign(static_cast<std::size_t>(num_states_) * num_actions_, 0.0);
    last_touch_.assign(num_states_, 0);
}

void SolverState::step() {
    const double u1 = rng_.next_double();
    const double u2 = rng_.next_double();
    const int i = mixture_sample(xi_tree_, q_tree_, theta_, u1, u2);
    SumTree& row = pi_trees_[i];
    const double row_total = row.total();
    const int a = row.sample(rng_.next_double());
    const int j = sampler_->sample_next(i, a, rng_.next_double());
    const double r = inst_->reward(i, a, j);

    const double xi_weight = xi_tree_.get(i);
    const double xi_i = xi_weight / xi_tree_.total();
    const double pi_weight = row.get(a);
    const double pi_ia = pi_weight / row_total;
    const double mix_i = (1.0 - theta_) * xi_i + theta_ * q_[i];

    // Each term is nonpositive in floating point (v_j <= M, r <= 1, v_i >= 0),
    // so delta <= 0 holds exactly; anything else is a hard fault.
    const double numer = discount_ * (v_[j] - offset_) + (r - 1.0) - v_[i];
    double delta = beta_ * numer / (mix_i * pi_ia);
    if (!(delta <= 0.0))
        throw NumericError("solver step " + std::to_string(iter_ + 1) +
                           ": invalid increment delta=" + fmt17(delta) + " at (" +
                           std::to_string(i) + "," + std::to_string(a) + ")");
    if (delta < kLogFloor) {
        delta = kLogFloor;
        ++clamps_;
    }

    // Clipped value steps, v_i then v_j; with j == i both hit the same
    // coordinate in this order.
    const double direction_i = (1.0 - discount_) * q_[i] / mix_i - 1.0;
    v_[i] = std::clamp(v_[i] - alpha_ * direction_i, 0.0, offset_);
    v_[j] = std::clamp(v_[j] - alpha_ * discount_, 0.0, offset_);

    // Lazy-average touch of row i, then the multiplicative dual updates.
    const std::int64_t t = iter_ + 1;
    avg_coeff_[i] += static_cast<double>(t - last_touch_[i]) / row_total;
    last_touch_[i] = t;

    const double growth = std::exp(delta);
    const double pi_weight_new = pi_weight * growth;
    avg_corr_[static_cast<std::size_t>(i) * num_actions_ + a] +=
        avg_coeff_[i] * (pi_weight - pi_weight_new);
    row.update(a, pi_weight_new);
    xi_tree_.update(i, xi_weight * (1.0 + pi_ia * (growth - 1.0)));

    if (row.total() < rescale_threshold_) rescale_row(i);
    if (xi_tree_.total() < rescale_threshold_) rescale_xi();

    iter_ = t;
}

void SolverState::rescale_row(int state) {
    SumTree& row = pi_trees_[state];
    const double root = row.total();
    if (!(root > 0.0))
        throw NumericError("solver: policy row " + std::to_string(state) + " underflowed to 0");
    const double factor = std::exp2(static_cast<double>(-std::ilogb(root)));
    row.scale_all(factor);
    avg_coeff_[state] /= factor;
}

void SolverState::rescale_xi() {
    const double root = xi_tree_.total();
    if (!(root > 0.0)) throw NumericError("solver: state-weight tree underflowed to 0");
    xi_tree_.scale_all(std::exp2(static_cast<double>(-std::ilogb(root))));
}

std::vector<double> SolverState::state_weights() const {
    const double total = xi_tree_.total();
    const auto leaves = xi_tree_.leaves();
    std::vector<double> xi(num_states_);
    for (int i = 0; i < num_states_; ++i) xi[i] = leaves[i] / total;
    return xi;
}

RandomizedPolicy SolverState::policy() const {
    RandomizedPolicy pol;
    pol.num_states = num_states_;
    pol.num_actions = num_actions_;
    pol.probs.resize(static_cast<std::size_t>(num_states_) * num_actions_);
    for (int i = 0; i < num_states_; ++i) {
        const auto leaves = pi_trees_[i].leaves();
        const double total = pi_trees_[i].total();
        for (int a = 0; a < num_actions_; ++a)
            pol.probs[static_cast<std::size_t>(i) * num_actions_ + a] = leaves[a] / total;
    }
    return pol;
}

double SolverState::xi_entropy() const {
    const double total = xi_tree_.total();
    const auto leaves = xi_tree_.leaves();
    double entropy = 0.0;
    for (int i = 0; i < num_states_; ++i) {
        const double p = leaves[i] / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return entropy;
}

RandomizedPolicy SolverState::averaged_policy() const {
    if (iter_ < 1) throw ValidationError("averaged_policy: no iterations have run");
    RandomizedPolicy pol;
    pol.num_states = num_states_;
    pol.num_actions = num_actions_;
    pol.probs.resize(static_cast<std::size_t>(num_states_) * num_actions_);
    const double horizon = static_cast<double>(iter_);
    for (int i = 0; i < num_states_; ++i) {
        const auto leaves = pi_trees_[i].leaves();
        const double flushed =
            avg_coeff_[i] + static_cast<double>(iter_ - last_touch_[i]) / pi_trees_[i].total();
        double row_sum = 0.0;
        for (int a = 0; a < num_actions_; ++a) {
            const double s =
                flushed * leaves[a] + avg_corr_[static_cast<std::size_t>(i) * num_actions_ + a];
            pol.probs[static_cast<std::size_t>(i) * num_actions_ + a] = s;
            row_sum += s;
        }
        if (std::abs(row_sum / horizon - 1.0) > 1e-6)
            throw NumericError("averaged_policy: ledger row " + std::to_string(i) +
                               " sums to " + fmt17(row_sum / horizon));
        for (int a = 0; a < num_actions_; ++a)
            pol.probs[static_cast<std::size_t>(i) * num_actions_ + a] /= row_sum;
    }
    return pol;
}

double SolverState::current_dual_gap(std::span<const double> residuals) const {
    const double xi_total = xi_tree_.total();
    const auto xi_leaves = xi_tree_.leaves();
    double gap = 0.0;
    for (int i = 0; i < num_states_; ++i) {
        const double mix = (1.0 - theta_) * (xi_leaves[i] / xi_total) + theta_ * q_[i];
        const auto row = pi_trees_[i].leaves();
        const double row_total = pi_trees_[i].total();
        double dot = 0.0;
        for (int a = 0; a < num_actions_; ++a)
            dot += row[a] * residuals[static_cast<std::size_t>(i) * num_actions_ + a];
        gap += mix * dot / row_total;
    }
    return gap;
}

std::string format_metrics_line(const MetricsRecord& record) {
    std::string line = "t=" + std::to_string(record.t);
    line += " gap=";
    line += record.has_gap ? fmt17(record.gap) : "na";
    line += " vmax=" + fmt17(record.vmax);
    line += " xi_entropy=" + fmt17(record.xi_entropy);
    line += " clamps=" + std::to_string(record.clamps);
    return line;
}

std::string format_metrics_stream(std::span<const MetricsRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += format_metrics_line(r);
        out += '\n';
    }
    return out;
}

RunResult run(const DmdpInstance& inst, std::shared_ptr<const TransitionSampler> sampler,
              const SolverSchedule& schedule, std::uint64_t seed, const RunOptions& opts) {
    RunResult out;
    out.seed = seed;
    out.stream_id = opts.stream_id;
    out.schedule = schedule;

    SolverState state(inst, std::move(sampler), schedule, seed, opts.stream_id);
    std::vector<double> residuals;
    const bool has_gap = opts.oracle_values != nullptr;
    if (has_gap) residuals = bellman_residuals(inst, *opts.oracle_values);

    auto record = [&](std::int64_t t) {
        MetricsRecord m;
        m.t = t;
        m.has_gap = has_gap;
        if (has_gap) m.gap = state.current_dual_gap(residuals);
        m.vmax = *std::max_element(state.values().begin(), state.values().end());
        m.xi_entropy = state.xi_entropy();
        m.clamps = state.clamp_count();
        out.metrics.push_back(m);
    };

    const std::int64_t horizon = schedule.iterations;
    if (horizon == 0) {
        // Empty average: fall back to the initial uniform iterate and flag
        // the empty run with a t=0 record.
        record(0);
        out.averaged_policy = RandomizedPolicy::uniform(inst.num_states, inst.num_actions);
        out.final_v = state.values();
        return out;
    }
    for (std::int64_t t = 1; t <= horizon; ++t) {
        state.step();
        if (opts.metrics_every > 0 && (t % opts.metrics_every == 0 || t == horizon)) record(t);
    }
    out.averaged_policy = state.averaged_policy();
    out.final_v = state.values();
    return out;
}

double averaged_dual_gap(const DmdpInstance& inst, const ValueVector& v_star,
                         const RandomizedPolicy& averaged, const SaddleConfig& cfg) {
    return duality_gap(inst, v_star, assemble_dual(cfg.q, averaged, cfg));
}

}  // namespace dmdp
