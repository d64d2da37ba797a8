#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dmdp/instance_io.hpp"
#include "dmdp/meta.hpp"
#include "dmdp/oracles.hpp"
#include "dmdp/policy_eval.hpp"
#include "dmdp/solver.hpp"

namespace {

using namespace dmdp;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

struct LoadedInstance {
    DmdpInstance instance;
    std::shared_ptr<const TransitionSampler> sampler;
};

LoadedInstance load_instance(const std::string& path, bool trust_input) {
    ParsedInstance parsed = parse_instance(read_file(path), trust_input);
    LoadedInstance loaded;
    loaded.instance = std::move(parsed.instance);
    if (parsed.encoding == Encoding::tree)
        loaded.sampler = std::make_shared<TransitionSampler>(TransitionSampler::from_trees(
            loaded.instance.num_states, loaded.instance.num_actions, std::move(parsed.trees)));
    else
        loaded.sampler =
            std::make_shared<TransitionSampler>(TransitionSampler::build(loaded.instance));
    return loaded;
}

int run_gen(int states, int actions, double gamma, const std::string& kind, double eta,
            std::uint64_t seed, const std::string& encoding, const std::string& out_path) {
    const DmdpInstance inst =
        gen_instance(states, actions, gamma, gen_kind_from_name(kind), eta, seed);
    write_file(out_path, serialize_instance(inst, encoding_from_name(encoding)));
    return 0;
}

int run_solve(const std::string& file, double epsilon, double delta, const std::string& mode,
              std::uint64_t seed, std::int64_t iters, double ct, std::int64_t metrics_every,
              bool trust_input, const std::string& out_path) {
    LoadedInstance loaded = load_instance(file, trust_input);
    const DmdpInstance& inst = loaded.instance;

    SaddleConfig saddle;
    if (mode == "general") {
        saddle = make_general_config(inst);
    } else if (mode == "ergodic") {
        std::vector<double> q(inst.num_states, 1.0 / inst.num_states);
        const ErgodicityReport report = ergodicity_constants(inst, q);
        // Heuristic schedule: the constants only range over deterministic
        // policies, not all randomized ones.
        std::cerr << "# ergodic constants (" << report.scope << "): c1=" << fmt17(report.c1)
                  << " c2=" << fmt17(report.c2) << "\n";
        saddle = make_ergodic_config(inst, report.c1, report.c2);
    } else {
        throw ValidationError("solve: unknown mode '" + mode + "'");
    }

    MetaConfig cfg;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    cfg.base_seed = seed;
    cfg.ct = ct;
    cfg.metrics_every = metrics_every;
    if (iters >= 0) cfg.iterations_override = iters;

    const MetaResult result = meta_solve(inst, loaded.sampler, cfg, saddle);
    for (const auto& trial : result.trials) {
        for (const auto& record : trial.metrics)
            std::cout << format_metrics_line(record) << "\n";
        std::cout << "trial=" << trial.index << " ybar=" << fmt17(trial.y_bar)
                  << " solver_stream=" << trial.solver_stream
                  << " eval_stream=" << trial.eval_stream << " T=" << trial.schedule.iterations
                  << " beta=" << fmt17(trial.schedule.beta)
                  << " theta=" << fmt17(trial.schedule.theta) << "\n";
    }
    std::cout << "selected=" << result.selected << "\n";
    write_file(out_path, serialize_policy(result.policy));
    return 0;
}

int run_eval(const std::string& file, const std::string& policy_file, double epsilon, double delta,
             std::uint64_t seed) {
    LoadedInstance loaded = load_instance(file, false);
    const RandomizedPolicy pol = parse_policy(read_file(policy_file));
    if (pol.num_states != loaded.instance.num_states ||
        pol.num_actions != loaded.instance.num_actions)
        throw ValidationError("eval: policy dimensions do not match the instance");
    const EvalConfig cfg = eval_config(epsilon, delta, loaded.instance.discount);
    const std::vector<double> q(loaded.instance.num_states, 1.0 / loaded.instance.num_states);
    const double value = mc_evaluate(loaded.instance, *loaded.sampler, pol, q, cfg, seed);
    std::cout << "value=" << fmt17(value) << "\n";
    return 0;
}

int run_oracle(const std::string& file, const std::string& method, double tol) {
    LoadedInstance loaded = load_instance(file, false);
    OracleSolution solution;
    if (method == "enum")
        solution = brute_force_optimal(loaded.instance);
    else if (method == "vi")
        solution = value_iteration(loaded.instance, tol);
    else if (method == "pi")
        solution = policy_iteration(loaded.instance);
    else
        throw ValidationError("oracle: unknown method '" + method + "'");
    std::cout << "vstar=";
    for (int i = 0; i < loaded.instance.num_states; ++i)
        std::cout << (i ? " " : "") << fmt17(solution.v_star[i]);
    std::cout << "\npolicy=";
    for (int i = 0; i < loaded.instance.num_states; ++i)
        std::cout << (i ? " " : "") << solution.policy[i];
    std::cout << "\n";
    return 0;
}

int run_bench(const std::string& file, const std::string& suite) {
    LoadedInstance loaded = load_instance(file, false);
    const DmdpInstance& inst = loaded.instance;
    const SaddleConfig saddle = make_general_config(inst);

    if (suite == "gapdecay") {
        const OracleSolution oracle = policy_iteration(inst);
        for (std::int64_t horizon : {10000, 40000, 160000}) {
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                const SolverSchedule schedule = schedule_from(inst, saddle, 0.5, 1.0, horizon);
                RunOptions opts;
                opts.metrics_every = horizon;
                opts.oracle_values = &oracle.v_star;
                RunResult result = run(inst, loaded.sampler, schedule, seed, opts);
                MetricsRecord record = result.metrics.back();
                // Report the gap of the averaged-policy dual, the quantity
                // whose O(1/sqrt(T)) decay the suite tracks.
                record.gap =
                    averaged_dual_gap(inst, oracle.v_star, result.averaged_policy, saddle);
                std::cout << format_metrics_line(record) << "\n";
            }
        }
        return 0;
    }
    if (suite == "scaling") {
        for (std::int64_t horizon : {10000, 40000, 160000, 640000}) {
            const SolverSchedule schedule = schedule_from(inst, saddle, 0.5, 1.0, horizon);
            RunOptions opts;
            opts.metrics_every = horizon;
            const auto start = std::chrono::steady_clock::now();
            RunResult result = run(inst, loaded.sampler, schedule, 0, opts);
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - start;
            std::cout << format_metrics_line(result.metrics.back()) << "\n";
            std::cerr << "# S=" << inst.num_states << " A=" << inst.num_actions
                      << " T=" << horizon << " seconds=" << fmt17(elapsed.count())
                      << " ns_per_iter=" << fmt17(elapsed.count() * 1e9 / horizon) << "\n";
        }
        return 0;
    }
    throw ValidationError("bench: unknown suite '" + suite + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized primal-dual solver for discounted Markov decision problems"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a seeded random instance");
    int gen_states = 2, gen_actions = 2;
    double gen_gamma = 0.9, gen_eta = 0.1;
    std::string gen_kind = "dirichlet", gen_encoding = "raw", gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--states", gen_states)->required();
    gen->add_option("--actions", gen_actions)->required();
    gen->add_option("--gamma", gen_gamma)->required();
    gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"dirichlet", "ergodic_mixed", "transient"}));
    gen->add_option("--eta", gen_eta);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--encoding", gen_encoding)->check(CLI::IsMember({"raw", "cumulative", "tree"}));
    gen->add_option("--out", gen_out)->required();

    auto* solve = app.add_subcommand("solve", "Best-of-K randomized primal-dual solve");
    std::string solve_file, solve_mode = "general", solve_out;
    double solve_epsilon = 0.1, solve_delta = 0.1, solve_ct = 1.0;
    std::uint64_t solve_seed = 0;
    std::int64_t solve_iters = -1, solve_metrics_every = 0;
    bool solve_trust = false;
    solve->add_option("file", solve_file)->required();
    solve->add_option("--epsilon", solve_epsilon)->required();
    solve->add_option("--delta", solve_delta)->required();
    solve->add_option("--mode", solve_mode)->check(CLI::IsMember({"general", "ergodic"}));
    solve->add_option("--seed", solve_seed);
    solve->add_option("--iters", solve_iters);
    solve->add_option("--ct", solve_ct);
    solve->add_option("--metrics-every", solve_metrics_every);
    solve->add_flag("--trust-input", solve_trust);
    solve->add_option("--out", solve_out)->required();

    auto* eval = app.add_subcommand("eval", "Monte-Carlo policy evaluation");
    std::string eval_file, eval_policy;
    double eval_epsilon = 0.1, eval_delta = 0.05;
    std::uint64_t eval_seed = 0;
    eval->add_option("file", eval_file)->required();
    eval->add_option("policyfile", eval_policy)->required();
    eval->add_option("--epsilon", eval_epsilon)->required();
    eval->add_option("--delta", eval_delta)->required();
    eval->add_option("--seed", eval_seed);

    auto* oracle = app.add_subcommand("oracle", "Exact solve by enumeration / VI / PI");
    std::string oracle_file, oracle_method = "pi";
    double oracle_tol = 1e-8;
    oracle->add_option("file", oracle_file)->required();
    oracle->add_option("--method", oracle_method)->check(CLI::IsMember({"enum", "vi", "pi"}));
    oracle->add_option("--tol", oracle_tol);

    auto* bench = app.add_subcommand("bench", "Benchmark suites emitting metrics lines");
    std::string bench_file, bench_suite = "gapdecay";
    bench->add_option("file", bench_file)->required();
    bench->add_option("--suite", bench_suite)->check(CLI::IsMember({"gapdecay", "scaling"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return run_gen(gen_states, gen_actions, gen_gamma, gen_kind, gen_eta, gen_seed,
                           gen_encoding, gen_out);
        if (solve->parsed())
            return run_solve(solve_file, solve_epsilon, solve_delta, solve_mode, solve_seed,
                             solve_iters, solve_ct, solve_metrics_every, solve_trust, solve_out);
        if (eval->parsed())
            return run_eval(eval_file, eval_policy, eval_epsilon, eval_delta, eval_seed);
        if (oracle->parsed()) return run_oracle(oracle_file, oracle_method, oracle_tol);
        if (bench->parsed()) return run_bench(bench_file, bench_suite);
    } catch (const GuardError& e) {
        std::cerr << "guard exceeded: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
