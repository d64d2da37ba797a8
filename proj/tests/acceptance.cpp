// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. `--only N` runs a single criterion, `--list` names them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dmdp/instance_io.hpp"
#include "dmdp/meta.hpp"
#include "dmdp/oracles.hpp"
#include "dmdp/parallel.hpp"
#include "dmdp/policy_eval.hpp"
#include "dmdp/rng.hpp"
#include "dmdp/solver.hpp"

using namespace dmdp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

std::vector<double> uniform_q(int n) { return std::vector<double>(n, 1.0 / n); }

DmdpInstance make_e2() {
    DmdpInstance inst;
    inst.num_states = 2;
    inst.num_actions = 2;
    inst.discount = 0.5;
    inst.reward_kind = RewardKind::expected;
    inst.rewards = {0.0, 0.0, 1.0, 1.0};
    inst.transitions = {1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
    return inst;
}

RandomizedPolicy random_policy(int states, int actions, SplitMix64& rng) {
    RandomizedPolicy pol;
    pol.num_states = states;
    pol.num_actions = actions;
    pol.probs.resize(static_cast<std::size_t>(states) * actions);
    for (int i = 0; i < states; ++i) {
        double sum = 0.0;
        for (int a = 0; a < actions; ++a) {
            const double w = -std::log(1.0 - rng.next_double());
            pol.probs[static_cast<std::size_t>(i) * actions + a] = w;
            sum += w;
        }
        for (int a = 0; a < actions; ++a)
            pol.probs[static_cast<std::size_t>(i) * actions + a] /= sum;
    }
    return pol;
}

std::vector<double> random_distribution(int n, SplitMix64& rng) {
    std::vector<double> d(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& x : d) {
        x = -std::log(1.0 - rng.next_double());
        sum += x;
    }
    for (auto& x : d) x /= sum;
    return d;
}

// 1. Brute-force enumeration, policy iteration and value iteration agree on
//    v* within 1e-6 over 50 seeded small instances.
Outcome criterion_oracle_agreement() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const int states = 2 + static_cast<int>(seed % 3);
        const int actions = 2 + static_cast<int>(seed % 2);
        const double gamma = seed % 2 ? 0.9 : 0.5;
        const DmdpInstance inst =
            gen_instance(states, actions, gamma, GenKind::dirichlet, 0.0, 10'000 + seed);
        const OracleSolution brute = brute_force_optimal(inst);
        const OracleSolution pi = policy_iteration(inst);
        const OracleSolution vi = value_iteration(inst, 1e-8);
        worst = std::max(worst, max_abs_diff(brute.v_star, pi.v_star));
        worst = std::max(worst, max_abs_diff(brute.v_star, vi.v_star));
    }
    return {worst <= 1e-6, "50 instances, max |v*| deviation " + fmt(worst)};
}

// 2. Closed-form values: unit chain evaluates to 1/(1-gamma) to 1e-12 and
//    the two-state benchmark enumerates to v* = [1, 2].
Outcome criterion_closed_form() {
    double worst = 0.0;
    for (double gamma : {0.5, 0.9}) {
        DmdpInstance unit;
        unit.num_states = 1;
        unit.num_actions = 1;
        unit.discount = gamma;
        unit.reward_kind = RewardKind::expected;
        unit.rewards = {1.0};
        unit.transitions = {1.0};
        const ValueVector v = exact_value(unit, RandomizedPolicy::uniform(1, 1));
        worst = std::max(worst, std::abs(v[0] - 1.0 / (1.0 - gamma)));
    }
    const OracleSolution e2 = brute_force_optimal(make_e2());
    worst = std::max(worst, std::abs(e2.v_star[0] - 1.0));
    worst = std::max(worst, std::abs(e2.v_star[1] - 2.0));
    const bool policy_ok = e2.policy == std::vector<int>{1, 0};
    return {worst <= 1e-12 && policy_ok, "max closed-form deviation " + fmt(worst)};
}

// 3. Sampler statistics: 4-sigma multinomial agreement over 1e6 draws, no
//    zero-weight leaf on a 1e5-point u-grid, node visits within the bound.
Outcome criterion_sampler_statistics() {
    const std::vector<double> weights{1, 2, 3, 4};
    const SumTree tree{weights};
    SplitMix64 rng = SplitMix64::stream(2024, 0);
    std::vector<std::int64_t> counts(4, 0);
    const int draws = 1'000'000;
    for (int k = 0; k < draws; ++k)
        ++counts[static_cast<std::size_t>(tree.sample(rng.next_double()))];
    double worst_sigma = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double p = weights[static_cast<std::size_t>(i)] / 10.0;
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        worst_sigma = std::max(worst_sigma, std::abs(counts[i] - draws * p) / sigma);
    }
    if (worst_sigma > 4.0) return {false, "frequency deviation " + fmt(worst_sigma) + " sigma"};

    const std::vector<double> adversarial{0.0, 1.0, 0.0, 1.0};
    const SumTree sparse{adversarial};
    for (int k = 0; k < 100'000; ++k) {
        const int leaf = sparse.sample(k / 100'000.0);
        if (adversarial[static_cast<std::size_t>(leaf)] == 0.0)
            return {false, "zero-weight leaf sampled at u=" + fmt(k / 100'000.0)};
    }

    SumTree counted{weights};
    const std::size_t bound = 2 * 2 + 1;  // L = 4
    for (int k = 0; k < 1000; ++k) {
        std::size_t visits = 0;
        (void)counted.sample_counted(k / 1000.0, visits);
        if (visits > bound) return {false, "sample visited " + std::to_string(visits) + " nodes"};
        visits = 0;
        counted.update_counted(k % 4, weights[static_cast<std::size_t>(k % 4)], visits);
        if (visits > bound) return {false, "update visited " + std::to_string(visits) + " nodes"};
    }
    return {true, "max frequency deviation " + fmt(worst_sigma) + " sigma, visit bound " +
                      std::to_string(bound) + " held"};
}

// 4. Solver invariants over a full run plus lazy-average correctness.
Outcome criterion_solver_invariants() {
    const DmdpInstance inst = gen_instance(10, 5, 0.9, GenKind::ergodic_mixed, 0.1, 11);
    const SaddleConfig cfg = make_general_config(inst);
    const SolverSchedule sched = schedule_from(inst, cfg, 0.1, 1.0, 100'000);
    SolverState state(inst, std::make_shared<TransitionSampler>(TransitionSampler::build(inst)),
                      sched, 31);
    const double cap = 1.0 / (1.0 - inst.discount);
    for (int t = 1; t <= 100'000; ++t) {
        state.step();  // delta <= 0 is enforced inside every step
        for (double v : state.values())
            if (!(v >= 0.0 && v <= cap)) return {false, "value left [0, 1/(1-gamma)] at t=" +
                                                            std::to_string(t)};
        if (t % 1000 == 0 &&
            !check_dual_feasible(assemble_dual(state.state_weights(), state.policy(), cfg)))
            return {false, "assembled dual infeasible at t=" + std::to_string(t)};
    }

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const DmdpInstance small =
            gen_instance(3, 2, 0.9, GenKind::ergodic_mixed, 0.2, 300 + seed);
        const SaddleConfig small_cfg = make_general_config(small);
        const SolverSchedule small_sched = schedule_from(small, small_cfg, 0.1, 1.0, 10'000);
        SolverState st(small,
                       std::make_shared<TransitionSampler>(TransitionSampler::build(small)),
                       small_sched, seed);
        std::vector<double> dense(6, 0.0);
        for (int t = 0; t < 10'000; ++t) {
            const RandomizedPolicy current = st.policy();
            for (std::size_t k = 0; k < dense.size(); ++k) dense[k] += current.probs[k];
            st.step();
        }
        for (auto& d : dense) d /= 10'000.0;
        for (int i = 0; i < 3; ++i) {
            const double row = dense[2 * i] + dense[2 * i + 1];
            dense[2 * i] /= row;
            dense[2 * i + 1] /= row;
        }
        worst = std::max(worst, max_abs_diff(st.averaged_policy().probs, dense));
    }
    if (worst > 1e-8) return {false, "lazy average off the dense reference by " + fmt(worst)};
    return {true, "invariants held for T=1e5; lazy-vs-dense max deviation " + fmt(worst)};
}

// 5. Mean averaged-dual gap is non-increasing over T in {1e4, 4e4, 16e4} and
//    shrinks by at least 40% overall. The fixture uses seeded ergodic
//    transitions with clearly separated action rewards: near-tied actions
//    keep this T ladder on the slow preasymptotic plateau, while separated
//    residuals let the 1/sqrt(T) regime show up within the ladder.
Outcome criterion_gap_decay() {
    DmdpInstance inst = gen_instance(10, 5, 0.9, GenKind::ergodic_mixed, 0.1, 5);
    for (int i = 0; i < 10; ++i)
        for (int a = 0; a < 5; ++a) inst.rewards[i * 5 + a] = a == i % 5 ? 0.9 : 0.1;
    const SaddleConfig cfg = make_general_config(inst);
    const OracleSolution oracle = policy_iteration(inst);
    const auto sampler = std::make_shared<TransitionSampler>(TransitionSampler::build(inst));
    std::vector<double> means;
    for (std::int64_t horizon : {10'000, 40'000, 160'000}) {
        const SolverSchedule sched = schedule_from(inst, cfg, 0.1, 1.0, horizon);
        std::vector<double> gaps(10);
        parallel_for(10, [&](std::int64_t seed) {
            const RunResult result =
                run(inst, sampler, sched, static_cast<std::uint64_t>(seed));
            gaps[static_cast<std::size_t>(seed)] =
                averaged_dual_gap(inst, oracle.v_star, result.averaged_policy, cfg);
        });
        double mean = 0.0;
        for (double g : gaps) mean += g / 10.0;
        means.push_back(mean);
    }
    const bool monotone = means[0] >= means[1] && means[1] >= means[2];
    const bool shrunk = means[2] <= 0.6 * means[0];
    return {monotone && shrunk, "mean gaps " + fmt(means[0]) + " -> " + fmt(means[1]) + " -> " +
                                    fmt(means[2])};
}

// 6. Gap-to-policy inequalities for 100 random feasible duals per mode.
Outcome criterion_gap_to_policy() {
    const DmdpInstance inst = gen_instance(3, 2, 0.9, GenKind::ergodic_mixed, 0.5, 3);
    const OracleSolution oracle = brute_force_optimal(inst);
    const std::vector<double> q = uniform_q(3);
    SplitMix64 rng = SplitMix64::stream(6, 0);
    double worst_slack = 1e9;

    const SaddleConfig general = make_general_config(inst);
    const double general_factor = 3.0 / ((1.0 - inst.discount) * (1.0 - inst.discount));
    for (int k = 0; k < 100; ++k) {
        const DualVariable mu =
            assemble_dual(random_distribution(3, rng), random_policy(3, 2, rng), general);
        const double gap = duality_gap(inst, oracle.v_star, mu);
        const ValueVector v_pi = exact_value(inst, dual_to_policy(mu));
        worst_slack =
            std::min(worst_slack, general_factor * gap - max_abs_diff(oracle.v_star, v_pi));
    }

    const ErgodicityReport erg = ergodicity_constants(inst, q);
    const SaddleConfig ergodic = make_ergodic_config(inst, erg.c1, erg.c2);
    const double ergodic_factor =
        erg.c2 * erg.c2 / ((1.0 - inst.discount) * erg.c1 * erg.c1);
    for (int k = 0; k < 100; ++k) {
        const DualVariable mu =
            assemble_dual(random_distribution(3, rng), random_policy(3, 2, rng), ergodic);
        const double gap = duality_gap(inst, oracle.v_star, mu);
        const ValueVector v_pi = exact_value(inst, dual_to_policy(mu));
        worst_slack = std::min(worst_slack,
                               ergodic_factor * gap - (dot(q, oracle.v_star) - dot(q, v_pi)));
    }
    return {worst_slack >= -1e-6,
            "200 duals, worst inequality slack " + fmt(worst_slack) + " (c1=" + fmt(erg.c1) +
                ", c2=" + fmt(erg.c2) + ")"};
}

// 7. End-to-end epsilon-optimality of the meta solver on 20 seeded ergodic
//    instances (eta = 1, so c1 = c2 = 1 exactly by construction).
Outcome criterion_end_to_end() {
    const int instances = 20;
    std::vector<int> success(instances, 0);
    std::vector<double> regrets(instances, 0.0);
    parallel_for(instances, [&](std::int64_t k) {
        const DmdpInstance inst = gen_instance(10, 5, 0.9, GenKind::ergodic_mixed, 1.0,
                                               100 + static_cast<std::uint64_t>(k));
        const auto sampler =
            std::make_shared<TransitionSampler>(TransitionSampler::build(inst));
        const SaddleConfig saddle = make_ergodic_config(inst, 1.0, 1.0);
        const OracleSolution oracle = policy_iteration(inst);
        MetaConfig cfg;
        cfg.epsilon = 0.1;
        cfg.delta = 0.1;
        cfg.ct = 1.0;
        cfg.base_seed = 1000 + static_cast<std::uint64_t>(k);
        const MetaResult result = meta_solve(inst, sampler, cfg, saddle);
        const ValueVector v_pi = exact_value(inst, result.policy);
        const std::vector<double> q = uniform_q(10);
        const double regret = dot(q, oracle.v_star) - dot(q, v_pi);
        regrets[static_cast<std::size_t>(k)] = regret;
        success[static_cast<std::size_t>(k)] = regret <= 0.1 ? 1 : 0;
    });
    int wins = 0;
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        wins += success[static_cast<std::size_t>(k)];
        worst = std::max(worst, regrets[static_cast<std::size_t>(k)]);
    }
    return {wins >= 18, std::to_string(wins) + "/20 runs within epsilon, worst regret " +
                            fmt(worst)};
}

// 8. Monte-Carlo evaluation honors its one-sided band on 200 seeded calls.
Outcome criterion_eval_contract() {
    const DmdpInstance e2 = make_e2();
    const TransitionSampler sampler = TransitionSampler::build(e2);
    const RandomizedPolicy uniform = RandomizedPolicy::uniform(2, 2);
    const EvalConfig cfg = eval_config(0.2, 0.05, e2.discount);
    const double truth = 4.0 / 3.0;  // q'v for the uniform policy, uniform q
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const double y = mc_evaluate(e2, sampler, uniform, uniform_q(2), cfg, 5000 + seed);
        if (y < truth - 0.2 || y > truth) ++violations;
    }
    return {violations <= 13,
            std::to_string(violations) + "/200 calls outside [q'v - eps, q'v]"};
}

// 9. The three encodings parse to bit-identical instances, produce
//    byte-identical solver metrics streams, and round-trip exactly.
Outcome criterion_encoding_equivalence() {
    const DmdpInstance inst = gen_instance(6, 3, 0.9, GenKind::dirichlet, 0.0, 17);
    const SaddleConfig cfg = make_general_config(inst);
    const OracleSolution oracle = policy_iteration(inst);
    std::string reference;
    for (Encoding enc : {Encoding::raw, Encoding::cumulative, Encoding::tree}) {
        const std::string text = serialize_instance(inst, enc);
        ParsedInstance parsed = parse_instance(text);
        if (parsed.instance.transitions != inst.transitions ||
            parsed.instance.rewards != inst.rewards)
            return {false, std::string("parsed instance differs for encoding ") +
                               encoding_name(enc)};
        if (serialize_instance(parsed.instance, enc) != text)
            return {false, std::string("round trip not exact for encoding ") +
                               encoding_name(enc)};
        auto sampler = std::make_shared<TransitionSampler>(
            enc == Encoding::tree
                ? TransitionSampler::from_trees(6, 3, std::move(parsed.trees))
                : TransitionSampler::build(parsed.instance));
        const SolverSchedule sched = schedule_from(parsed.instance, cfg, 0.1, 1.0, 5000);
        RunOptions opts;
        opts.metrics_every = 1000;
        opts.oracle_values = &oracle.v_star;
        const std::string stream =
            format_metrics_stream(run(parsed.instance, sampler, sched, 7, opts).metrics);
        if (reference.empty())
            reference = stream;
        else if (stream != reference)
            return {false, std::string("metrics stream differs for encoding ") +
                               encoding_name(enc)};
    }
    return {true, "raw/cumulative/tree streams byte-identical, round trips exact"};
}

// 10. Repeating seeded components reproduces their outputs byte-for-byte.
Outcome criterion_determinism() {
    const DmdpInstance inst = gen_instance(8, 3, 0.9, GenKind::ergodic_mixed, 0.2, 29);
    const SaddleConfig cfg = make_general_config(inst);
    const OracleSolution oracle = policy_iteration(inst);
    const auto sampler = std::make_shared<TransitionSampler>(TransitionSampler::build(inst));
    const SolverSchedule sched = schedule_from(inst, cfg, 0.1, 1.0, 5000);
    RunOptions opts;
    opts.metrics_every = 500;
    opts.oracle_values = &oracle.v_star;
    const RunResult run_a = run(inst, sampler, sched, 13, opts);
    const RunResult run_b = run(inst, sampler, sched, 13, opts);
    if (format_metrics_stream(run_a.metrics) != format_metrics_stream(run_b.metrics))
        return {false, "solver metrics differ between repeats"};
    if (run_a.final_v != run_b.final_v ||
        run_a.averaged_policy.probs != run_b.averaged_policy.probs)
        return {false, "solver outputs differ between repeats"};

    const EvalConfig eval_cfg = eval_config(0.1, 0.1, inst.discount);
    const double eval_a =
        mc_evaluate(inst, *sampler, run_a.averaged_policy, cfg.q, eval_cfg, 99);
    const double eval_b =
        mc_evaluate(inst, *sampler, run_a.averaged_policy, cfg.q, eval_cfg, 99);
    if (eval_a != eval_b) return {false, "mc_evaluate differs between repeats"};

    MetaConfig meta_cfg;
    meta_cfg.epsilon = 0.2;
    meta_cfg.delta = 0.2;
    meta_cfg.base_seed = 55;
    meta_cfg.iterations_override = 3000;
    const MetaResult meta_a = meta_solve(inst, sampler, meta_cfg, cfg);
    const MetaResult meta_b = meta_solve(inst, sampler, meta_cfg, cfg);
    if (meta_a.selected != meta_b.selected ||
        meta_a.policy.probs != meta_b.policy.probs)
        return {false, "meta_solve differs between repeats"};
    for (std::size_t k = 0; k < meta_a.trials.size(); ++k)
        if (meta_a.trials[k].y_bar != meta_b.trials[k].y_bar)
            return {false, "meta trial evaluations differ between repeats"};

    const std::string gen_a =
        serialize_instance(gen_instance(5, 2, 0.8, GenKind::transient, 0.0, 31), Encoding::tree);
    const std::string gen_b =
        serialize_instance(gen_instance(5, 2, 0.8, GenKind::transient, 0.0, 31), Encoding::tree);
    if (gen_a != gen_b) return {false, "generator output differs between repeats"};
    return {true, "solver, evaluator, meta and generator all reproduce byte-for-byte"};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
};

const Criterion kCriteria[] = {
    {1, "oracle agreement", criterion_oracle_agreement},
    {2, "closed-form values", criterion_closed_form},
    {3, "sampler statistics", criterion_sampler_statistics},
    {4, "solver invariants", criterion_solver_invariants},
    {5, "gap decay", criterion_gap_decay},
    {6, "gap-to-policy inequalities", criterion_gap_to_policy},
    {7, "end-to-end epsilon-optimality", criterion_end_to_end},
    {8, "policy-evaluation contract", criterion_eval_contract},
    {9, "encoding equivalence", criterion_encoding_equivalence},
    {10, "determinism", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int k = 1; k < argc; ++k) {
        if (std::strcmp(argv[k], "--only") == 0 && k + 1 < argc) only = std::atoi(argv[k + 1]);
        if (std::strcmp(argv[k], "--list") == 0) {
            for (const auto& c : kCriteria) std::printf("%2d %s\n", c.id, c.name);
            return 0;
        }
    }
    int failures = 0;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        std::printf("%s criterion %2d (%s): %s [%.1fs]\n", outcome.pass ? "PASS" : "FAIL",
                    criterion.id, criterion.name, outcome.detail.c_str(), elapsed.count());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    return failures;
}
