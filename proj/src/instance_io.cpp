#include "dmdp/instance_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>

#include "dmdp/rng.hpp"

namespace dmdp {

namespace {

constexpr double kMassTol = 1e-9;
constexpr double kNodeTol = 1e-9;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string pair_tag(int i, int a) {
    return "(" + std::to_string(i) + "," + std::to_string(a) + ")";
}

/// Whitespace tokenizer tracking the 1-based line and the 0-based token
/// offset within the line for diagnostics.
class Tokenizer {
  public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    std::optional<std::string_view> next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') {
                ++line_;
                line_tokens_ = 0;
            }
            ++pos_;
        }
        if (pos_ >= text_.size()) return std::nullopt;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        token_line_ = line_;
        token_offset_ = line_tokens_++;
        return text_.substr(start, pos_ - start);
    }

    std::string_view next_word(const std::string& what) {
        auto tok = next();
        if (!tok) throw ParseError("unexpected end of input, expected " + what, line_, 0);
        return *tok;
    }

    double next_double(const std::string& what) {
        const std::string_view tok = next_word(what);
        char buf[64];
        if (tok.size() >= sizeof(buf)) fail("oversized number for " + what);
        std::memcpy(buf, tok.data(), tok.size());
        buf[tok.size()] = '\0';
        char* end = nullptr;
        const double value = std::strtod(buf, &end);
        if (end != buf + tok.size() || !std::isfinite(value))
            fail("expected a finite number for " + what + ", got '" + std::string(tok) + "'");
        return value;
    }

    long long next_int(const std::string& what) {
        const std::string_view tok = next_word(what);
        char buf[32];
        if (tok.size() >= sizeof(buf)) fail("oversized integer for " + what);
        std::memcpy(buf, tok.data(), tok.size());
        buf[tok.size()] = '\0';
        char* end = nullptr;
        const long long value = std::strtoll(buf, &end, 10);
        if (end != buf + tok.size())
            fail("expected an integer for " + what + ", got '" + std::string(tok) + "'");
        return value;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, token_line_, token_offset_);
    }

    int line() const { return token_line_; }
    int offset() const { return token_offset_; }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int line_tokens_ = 0;
    int token_line_ = 1;
    int token_offset_ = 0;
};

void append_row(std::string& out, std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        out += fmt17(values[k]);
        out += k + 1 == values.size() ? '\n' : ' ';
    }
}

/// Applies prefix-sum-then-difference until the row is a fixpoint of the
/// transform. Rows in this form recover bit-identically from the cumulative
/// encoding; a couple of passes always suffice in practice.
std::vector<double> canonicalize_row(std::vector<double> row) {
    for (int pass = 0; pass < 16; ++pass) {
        std::vector<double> diffs(row.size());
        double running = 0.0;
        double previous = 0.0;
        bool unchanged = true;
        for (std::size_t j = 0; j < row.size(); ++j) {
            running += row[j];
            diffs[j] = running - previous;
            previous = running;
            if (diffs[j] != row[j]) unchanged = false;
        }
        if (unchanged) return row;
        row = std::move(diffs);
    }
    throw NumericError("gen_instance: probability row failed to reach a prefix-sum fixpoint");
}

}  // namespace

const char* encoding_name(Encoding encoding) {
    switch (encoding) {
        case Encoding::raw: return "raw";
        case Encoding::cumulative: return "cumulative";
        case Encoding::tree: return "tree";
    }
    return "raw";
}

Encoding encoding_from_name(std::string_view name) {
    if (name == "raw") return Encoding::raw;
    if (name == "cumulative") return Encoding::cumulative;
    if (name == "tree") return Encoding::tree;
    throw ValidationError("unknown encoding '" + std::string(name) + "'");
}

const char* gen_kind_name(GenKind kind) {
    switch (kind) {
        case GenKind::dirichlet: return "dirichlet";
        case GenKind::ergodic_mixed: return "ergodic_mixed";
        case GenKind::transient: return "transient";
    }
    return "dirichlet";
}

GenKind gen_kind_from_name(std::string_view name) {
    if (name == "dirichlet") return GenKind::dirichlet;
    if (name == "ergodic_mixed") return GenKind::ergodic_mixed;
    if (name == "transient") return GenKind::transient;
    throw ValidationError("unknown generator kind '" + std::string(name) + "'");
}

std::string serialize_instance(const DmdpInstance& inst, Encoding encoding) {
    std::string out = "dmdp 1 " + std::to_string(inst.num_states) + " " +
                      std::to_string(inst.num_actions) + " " + fmt17(inst.discount) + " " +
                      (inst.reward_kind == RewardKind::expected ? "expected" : "full") + " " +
                      encoding_name(encoding) + "\n";

    if (inst.reward_kind == RewardKind::expected) {
        // a-major blocks of r_a(i).
        std::vector<double> block(inst.num_states);
        for (int a = 0; a < inst.num_actions; ++a) {
            for (int i = 0; i < inst.num_states; ++i)
                block[i] = inst.rewards[inst.pair_index(i, a)];
            append_row(out, block);
        }
    } else {
        for (int i = 0; i < inst.num_states; ++i)
            for (int a = 0; a < inst.num_actions; ++a)
                append_row(out,
                           {inst.rewards.data() +
                                inst.pair_index(i, a) * static_cast<std::size_t>(inst.num_states),
                            static_cast<std::size_t>(inst.num_states)});
    }

    std::vector<double> scratch;
    for (int i = 0; i < inst.num_states; ++i) {
        for (int a = 0; a < inst.num_actions; ++a) {
            const auto row = inst.transition_row(i, a);
            switch (encoding) {
                case Encoding::raw:
                    append_row(out, row);
                    break;
                case Encoding::cumulative: {
                    scratch.resize(row.size());
                    double running = 0.0;
                    for (std::size_t j = 0; j < row.size(); ++j) {
                        running += row[j];
                        scratch[j] = running;
                    }
                    append_row(out, scratch);
                    break;
                }
                case Encoding::tree: {
                    const SumTree tree{row};
                    append_row(out, tree.nodes());
                    break;
                }
            }
        }
    }
    return out;
}

ParsedInstance parse_instance(std::string_view text, bool trust_input) {
    Tokenizer tok(text);

    const std::string_view magic = tok.next_word("format magic");
    if (magic != "dmdp") tok.fail("expected format magic 'dmdp', got '" + std::string(magic) + "'");
    const long long version = tok.next_int("format version");
    if (version != 1) tok.fail("unsupported format version " + std::to_string(version));
    const long long states = tok.next_int("state count");
    const long long actions = tok.next_int("action count");
    if (states < 1 || actions < 1) tok.fail("state and action counts must be positive");
    if (states > (1 << 20) || actions > (1 << 20) || states * actions * states > (1LL << 33))
        tok.fail("instance dimensions too large");
    const double gamma = tok.next_double("discount factor");
    if (!trust_input && !(gamma > 0.0 && gamma < 1.0))
        tok.fail("discount " + fmt17(gamma) + " not strictly inside (0,1)");
    const std::string_view kind_word = tok.next_word("reward kind");
    RewardKind reward_kind;
    if (kind_word == "expected")
        reward_kind = RewardKind::expected;
    else if (kind_word == "full")
        reward_kind = RewardKind::full;
    else
        tok.fail("unknown reward kind '" + std::string(kind_word) + "'");
    const std::string_view enc_word = tok.next_word("encoding");
    Encoding encoding;
    if (enc_word == "raw")
        encoding = Encoding::raw;
    else if (enc_word == "cumulative")
        encoding = Encoding::cumulative;
    else if (enc_word == "tree")
        encoding = Encoding::tree;
    else
        tok.fail("unknown encoding '" + std::string(enc_word) + "'");

    ParsedInstance out;
    out.encoding = encoding;
    DmdpInstance& inst = out.instance;
    inst.num_states = static_cast<int>(states);
    inst.num_actions = static_cast<int>(actions);
    inst.discount = gamma;
    inst.reward_kind = reward_kind;

    const std::size_t pairs = static_cast<std::size_t>(states) * static_cast<std::size_t>(actions);
    auto read_reward = [&](const std::string& what) {
        const double r = tok.next_double(what);
        if (!trust_input && !(r >= 0.0 && r <= 1.0))
            tok.fail("reward " + fmt17(r) + " not in [0,1] (" + what + ")");
        return r;
    };

    if (reward_kind == RewardKind::expected) {
        inst.rewards.resize(pairs);
        for (int a = 0; a < inst.num_actions; ++a)
            for (int i = 0; i < inst.num_states; ++i)
                inst.rewards[inst.pair_index(i, a)] =
                    read_reward("reward r_a(i) at " + pair_tag(i, a));
    } else {
        inst.rewards.resize(pairs * static_cast<std::size_t>(states));
        for (int i = 0; i < inst.num_states; ++i)
            for (int a = 0; a < inst.num_actions; ++a)
                for (int j = 0; j < inst.num_states; ++j)
                    inst.rewards[inst.pair_index(i, a) * static_cast<std::size_t>(states) + j] =
                        read_reward("reward r_ij(a) at " + pair_tag(i, a) + " j=" +
                                    std::to_string(j));
    }

    inst.transitions.resize(pairs * static_cast<std::size_t>(states));
    const int leaf_count = static_cast<int>(std::bit_ceil(static_cast<std::size_t>(states)));
    std::vector<double> nodes;
    for (int i = 0; i < inst.num_states; ++i) {
        for (int a = 0; a < inst.num_actions; ++a) {
            double* row = inst.transitions.data() +
                          inst.pair_index(i, a) * static_cast<std::size_t>(states);
            switch (encoding) {
                case Encoding::raw: {
                    double sum = 0.0;
                    for (int j = 0; j < inst.num_states; ++j) {
                        const double p =
                            tok.next_double("probability at " + pair_tag(i, a));
                        if (!trust_input && !(p >= 0.0))
                            tok.fail("negative probability " + fmt17(p) + " at " + pair_tag(i, a) +
                                     " column " + std::to_string(j));
                        row[j] = p;
                        sum += p;
                    }
                    if (!trust_input && !(std::abs(sum - 1.0) <= kMassTol))
                        tok.fail("row sum " + fmt17(sum) + " != 1 at " + pair_tag(i, a));
                    break;
                }
                case Encoding::cumulative: {
                    double previous = 0.0;
                    double last = 0.0;
                    for (int j = 0; j < inst.num_states; ++j) {
                        const double c =
                            tok.next_double("cumulative probability at " + pair_tag(i, a));
                        if (!trust_input && c < previous)
                            tok.fail("cumulative row non-monotone at column " + std::to_string(j) +
                                     " at " + pair_tag(i, a));
                        row[j] = c - previous;
                        previous = c;
                        last = c;
                    }
                    if (!trust_input && !(std::abs(last - 1.0) <= kMassTol))
                        tok.fail("cumulative row ends at " + fmt17(last) + " != 1 at " +
                                 pair_tag(i, a));
                    break;
                }
                case Encoding::tree: {
                    nodes.resize(2 * static_cast<std::size_t>(leaf_count) - 1);
                    for (std::size_t k = 0; k < nodes.size(); ++k)
                        nodes[k] = tok.next_double("tree node at " + pair_tag(i, a));
                    if (!trust_input) {
                        for (std::size_t k = 0; k + 1 < static_cast<std::size_t>(leaf_count); ++k) {
                            const double children = nodes[2 * k + 1] + nodes[2 * k + 2];
                            if (!(std::abs(nodes[k] - children) <= kNodeTol))
                                tok.fail("node/children mismatch at node " + std::to_string(k) +
                                         " at " + pair_tag(i, a) + ": " + fmt17(nodes[k]) +
                                         " vs " + fmt17(children));
                        }
                        for (int j = 0; j < inst.num_states; ++j)
                            if (!(nodes[leaf_count - 1 + j] >= 0.0))
                                tok.fail("negative leaf at " + pair_tag(i, a) + " column " +
                                         std::to_string(j));
                        for (int j = inst.num_states; j < leaf_count; ++j)
                            if (nodes[leaf_count - 1 + j] != 0.0)
                                tok.fail("nonzero padding leaf at " + pair_tag(i, a) + " column " +
                                         std::to_string(j));
                        if (!(std::abs(nodes[0] - 1.0) <= kMassTol))
                            tok.fail("tree root " + fmt17(nodes[0]) + " != 1 at " + pair_tag(i, a));
                    }
                    for (int j = 0; j < inst.num_states; ++j) row[j] = nodes[leaf_count - 1 + j];
                    if (trust_input)
                        out.trees.push_back(
                            SumTree::from_node_array(inst.num_states, nodes));
                    else
                        out.trees.push_back(SumTree{{row, static_cast<std::size_t>(states)}});
                    break;
                }
            }
        }
    }
    if (tok.next()) tok.fail("unexpected trailing content");
    return out;
}

std::string serialize_policy(const RandomizedPolicy& pol) {
    std::string out = "policy 1 " + std::to_string(pol.num_states) + " " +
                      std::to_string(pol.num_actions) + "\n";
    for (int i = 0; i < pol.num_states; ++i) append_row(out, pol.row(i));
    return out;
}

RandomizedPolicy parse_policy(std::string_view text) {
    Tokenizer tok(text);
    const std::string_view magic = tok.next_word("policy magic");
    if (magic != "policy")
        tok.fail("expected policy magic 'policy', got '" + std::string(magic) + "'");
    const long long version = tok.next_int("policy version");
    if (version != 1) tok.fail("unsupported policy version " + std::to_string(version));
    const long long states = tok.next_int("state count");
    const long long actions = tok.next_int("action count");
    if (states < 1 || actions < 1 || states * actions > (1LL << 28))
        tok.fail("policy dimensions invalid");

    RandomizedPolicy pol;
    pol.num_states = static_cast<int>(states);
    pol.num_actions = static_cast<int>(actions);
    pol.probs.resize(static_cast<std::size_t>(states) * static_cast<std::size_t>(actions));
    for (int i = 0; i < pol.num_states; ++i) {
        double sum = 0.0;
        for (int a = 0; a < pol.num_actions; ++a) {
            const double p = tok.next_double("policy probability at state " + std::to_string(i));
            if (!(p >= 0.0))
                tok.fail("negative policy probability at state " + std::to_string(i));
            pol.probs[static_cast<std::size_t>(i) * pol.num_actions + a] = p;
            sum += p;
        }
        if (!(std::abs(sum - 1.0) <= kMassTol))
            tok.fail("policy row " + std::to_string(i) + " sums to " + fmt17(sum));
    }
    if (tok.next()) tok.fail("unexpected trailing content");
    return pol;
}

DmdpInstance gen_instance(int num_states, int num_actions, double gamma, GenKind kind, double eta,
                          std::uint64_t seed) {
    if (num_states < 1 || num_actions < 1)
        throw ValidationError("gen_instance: state and action counts must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("gen_instance: gamma must lie in (0,1)");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("gen_instance: eta must lie in [0,1]");

    SplitMix64 rng = SplitMix64::stream(seed, 0);
    DmdpInstance inst;
    inst.num_states = num_states;
    inst.num_actions = num_actions;
    inst.discount = gamma;
    inst.reward_kind = RewardKind::expected;
    inst.transitions.resize(static_cast<std::size_t>(num_states) * num_actions * num_states);
    inst.rewards.resize(static_cast<std::size_t>(num_states) * num_actions);

    // Dirichlet(1) over the index set `support`, written into a zeroed row.
    auto dirichlet_row = [&](std::vector<double>& row, int support_begin, int support_end) {
        std::fill(row.begin(), row.end(), 0.0);
        double total = 0.0;
        for (int j = support_begin; j < support_end; ++j) {
            const double g = -std::log(1.0 - rng.next_double());
            row[j] = g;
            total += g;
        }
        if (!(total > 0.0)) {
            row[support_begin] = 1.0;
            return;
        }
        for (int j = support_begin; j < support_end; ++j) row[j] /= total;
    };

    // transient kind: an absorbing block at the top of the state space, a
    // core block that never reaches it, and (for |S| >= 3) leaky states that
    // may fall into either.
    const int absorbing = std::max(1, num_states / 4);
    const int leaky = num_states >= 3 ? std::max(1, num_states / 4) : 0;
    const int core = num_states - absorbing - leaky;

    std::vector<double> row(num_states);
    for (int i = 0; i < num_states; ++i) {
        for (int a = 0; a < num_actions; ++a) {
            if (num_states == 1) {
                row[0] = 1.0;
            } else {
                switch (kind) {
                    case GenKind::dirichlet:
                        dirichlet_row(row, 0, num_states);
                        break;
                    case GenKind::ergodic_mixed: {
                        if (eta == 1.0) {
                            std::fill(row.begin(), row.end(), 1.0 / num_states);
                        } else {
                            dirichlet_row(row, 0, num_states);
                            const double floor = eta / num_states;
                            for (int j = 0; j < num_states; ++j)
                                row[j] = (1.0 - eta) * row[j] + floor;
                        }
                        break;
                    }
                    case GenKind::transient: {
                        if (i < core)
                            dirichlet_row(row, 0, core);
                        else if (i < core + leaky)
                            dirichlet_row(row, 0, num_states);
                        else
                            dirichlet_row(row, core + leaky, num_states);
                        break;
                    }
                }
            }
            // eta = 1 rows stay exactly uniform; they are the one case where
            // the prefix-sum fixpoint would perturb the advertised values.
            const bool keep_verbatim =
                num_states == 1 || (kind == GenKind::ergodic_mixed && eta == 1.0);
            std::vector<double> canonical = keep_verbatim ? row : canonicalize_row(row);
            std::copy(canonical.begin(), canonical.end(),
                      inst.transitions.begin() +
                          inst.pair_index(i, a) * static_cast<std::size_t>(num_states));
        }
    }
    for (int i = 0; i < num_states; ++i)
        for (int a = 0; a < num_actions; ++a) inst.rewards[inst.pair_index(i, a)] = rng.next_double();
    return inst;
}

}  // namespace dmdp
