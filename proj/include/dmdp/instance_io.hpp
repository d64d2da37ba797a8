#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dmdp/instance.hpp"
#include "dmdp/sum_tree.hpp"

namespace dmdp {

/// The three probability encodings of the "dmdp v1" text format:
///   raw        - each row P_a(i,.) as |S| probabilities
///   cumulative - running prefix sums ending at 1
///   tree       - the 2L-1 breadth-first sum-tree node values per row
enum class Encoding { raw, cumulative, tree };

const char* encoding_name(Encoding encoding);
Encoding encoding_from_name(std::string_view name);

enum class GenKind { dirichlet, ergodic_mixed, transient };

const char* gen_kind_name(GenKind kind);
GenKind gen_kind_from_name(std::string_view name);

/// Parse failure with the 1-based source line and the 0-based token offset
/// within that line.
struct ParseError : ValidationError {
    ParseError(const std::string& message, int line_number, int token_offset)
        : ValidationError("line " + std::to_string(line_number) + ", token " +
                          std::to_string(token_offset) + ": " + message),
          line(line_number),
          offset(token_offset) {}
    int line;
    int offset;
};

struct ParsedInstance {
    DmdpInstance instance;
    Encoding encoding = Encoding::raw;
    /// Per-(i,a) trees, filled only for tree-encoded inputs so the solver can
    /// skip preprocessing; verbatim node arrays under trust_input, otherwise
    /// rebuilt exactly from the validated leaves.
    std::vector<SumTree> trees;
};

/// Emits the "dmdp v1" text format. All values are printed with 17
/// significant digits, which round-trips binary64 exactly.
std::string serialize_instance(const DmdpInstance& inst, Encoding encoding);

/// Parses any of the three encodings into the canonical in-memory instance.
/// Every violation (malformed header, reward range, row sums, non-monotone
/// cumulative rows, node/child mismatches) raises ParseError with its
/// location; trust_input skips all content validation.
ParsedInstance parse_instance(std::string_view text, bool trust_input = false);

std::string serialize_policy(const RandomizedPolicy& pol);
RandomizedPolicy parse_policy(std::string_view text);

/// Seeded instance generator.
///   dirichlet     - every row drawn from a symmetric Dirichlet(1)
///   ergodic_mixed - (1-eta) * dirichlet + eta * uniform; every transition
///                   probability is at least eta/|S|, so the chain is ergodic
///                   under every policy
///   transient     - an absorbing block that part of the state space cannot
///                   reach
/// Rewards are expected-form, uniform on [0,1). Probability rows are
/// canonicalized to a prefix-sum fixpoint so all three encodings recover
/// bit-identical instances.
DmdpInstance gen_instance(int num_states, int num_actions, double gamma, GenKind kind, double eta,
                          std::uint64_t seed);

}  // namespace dmdp
