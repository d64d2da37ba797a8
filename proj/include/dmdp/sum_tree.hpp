#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmdp/errors.hpp"

namespace dmdp {

/// Binary sum tree over n nonnegative weights, padded with zero leaves to the
/// next power of two L. Nodes are stored breadth-first (root at index 0), so
/// node k has children 2k+1 and 2k+2 and the L leaves occupy the last level.
///
/// Sampling descends from the root comparing the target against the left
/// child sum with a strict `<`, which makes zero-weight leaves (padding
/// included) unreachable. Updates rewrite the leaf and recompute every
/// ancestor as the exact sum of its two stored children, so internal nodes
/// never drift from their subtrees.
class SumTree {
  public:
    SumTree() = default;

    explicit SumTree(std::span<const double> weights) {
        if (weights.empty())
            throw ValidationError("SumTree: cannot build from an empty weight list");
        logical_size_ = static_cast<int>(weights.size());
        leaf_count_ = static_cast<int>(std::bit_ceil(weights.size()));
        nodes_.assign(2 * static_cast<std::size_t>(leaf_count_) - 1, 0.0);
        const std::size_t first = first_leaf();
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!(weights[i] >= 0.0))
                throw ValidationError("SumTree: negative weight at index " + std::to_string(i));
            nodes_[first + i] = weights[i];
        }
        rebuild_internal();
    }

    /// Adopts a breadth-first node array verbatim (no consistency checks);
    /// used when the input data are already in tree form and trusted.
    static SumTree from_node_array(int logical_size, std::vector<double> nodes) {
        SumTree t;
        t.logical_size_ = logical_size;
        t.leaf_count_ = static_cast<int>(std::bit_ceil(static_cast<std::size_t>(logical_size)));
        if (nodes.size() != 2 * static_cast<std::size_t>(t.leaf_count_) - 1)
            throw ValidationError("SumTree: node array has wrong length " +
                                  std::to_string(nodes.size()));
        t.nodes_ = std::move(nodes);
        return t;
    }

    int size() const { return logical_size_; }
    int leaf_count() const { return leaf_count_; }
    double total() const { return nodes_[0]; }

    double get(int index) const {
        check_index(index);
        return nodes_[first_leaf() + static_cast<std::size_t>(index)];
    }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> leaves() const {
        return {nodes_.data() + first_leaf(), static_cast<std::size_t>(leaf_count_)};
    }

    void update(int index, double weight) {
        check_index(index);
        if (!(weight >= 0.0))
            throw ValidationError("SumTree: negative weight at index " + std::to_string(index));
        std::size_t k = first_leaf() + static_cast<std::size_t>(index);
        nodes_[k] = weight;
        while (k > 0) {
            k = (k - 1) / 2;
            nodes_[k] = nodes_[2 * k + 1] + nodes_[2 * k + 2];
        }
    }

    /// Multiplies every leaf by `factor` and recomputes the internal nodes.
    /// For power-of-two factors this is exact, so the sampling law is
    /// preserved for every u; the solver relies on that for rescaling.
    void scale_all(double factor) {
        if (!(factor > 0.0))
            throw ValidationError("SumTree: scale factor must be positive");
        const std::size_t first = first_leaf();
        for (std::size_t k = first; k < nodes_.size(); ++k) nodes_[k] *= factor;
        rebuild_internal();
    }

    /// Weighted draw: leaf i is returned with probability weight_i / total
    /// when u is uniform on [0, 1). Requires a positive total.
    int sample(double u) const {
        assert(u >= 0.0 && u < 1.0);
        const double total_weight = nodes_[0];
        if (!(total_weight > 0.0))
            throw NumericError("SumTree: sample from a tree with nonpositive total");
        double target = u * total_weight;
        std::size_t k = 0;
        const std::size_t first = first_leaf();
        while (k < first) {
            const std::size_t left = 2 * k + 1;
            const double left_sum = nodes_[left];
            if (target < left_sum) {
                k = left;
            } else {
                target -= left_sum;
                k = left + 1;
            }
        }
        return static_cast<int>(k - first);
    }

    /// Same as sample(), counting the distinct nodes touched.
    int sample_counted(double u, std::size_t& visits) const {
        const double total_weight = nodes_[0];
        if (!(total_weight > 0.0))
            throw NumericError("SumTree: sample from a tree with nonpositive total");
        visits += 1;  // root
        double target = u * total_weight;
        std::size_t k = 0;
        const std::size_t first = first_leaf();
        while (k < first) {
            const std::size_t left = 2 * k + 1;
            const double left_sum = nodes_[left];
            if (target < left_sum) {
                visits += 1;  // left child, on path
                k = left;
            } else {
                visits += 2;  // left child read, right child entered
                target -= left_sum;
                k = left + 1;
            }
        }
        return static_cast<int>(k - first);
    }

    /// Same as update(), counting the distinct nodes touched
    /// (leaf + ancestors + one sibling per level).
    void update_counted(int index, double weight, std::size_t& visits) {
        check_index(index);
        if (!(weight >= 0.0))
            throw ValidationError("SumTree: negative weight at index " + std::to_string(index));
        std::size_t k = first_leaf() + static_cast<std::size_t>(index);
        nodes_[k] = weight;
        visits += 1;
        while (k > 0) {
            k = (k - 1) / 2;
            nodes_[k] = nodes_[2 * k + 1] + nodes_[2 * k + 2];
            visits += 2;
        }
    }

    /// Full consistency pass: parents equal exact child sums, padding leaves
    /// are zero, all weights nonnegative.
    bool consistent() const {
        const std::size_t first = first_leaf();
        for (std::size_t k = 0; k < first; ++k)
            if (nodes_[k] != nodes_[2 * k + 1] + nodes_[2 * k + 2]) return false;
        for (std::size_t k = first; k < nodes_.size(); ++k)
            if (!(nodes_[k] >= 0.0)) return false;
        for (std::size_t k = first + static_cast<std::size_t>(logical_size_); k < nodes_.size(); ++k)
            if (nodes_[k] != 0.0) return false;
        return true;
    }

  private:
    std::size_t first_leaf() const { return static_cast<std::size_t>(leaf_count_) - 1; }

    void check_index(int index) const {
        if (index < 0 || index >= logical_size_)
            throw ValidationError("SumTree: leaf index " + std::to_string(index) +
                                  " out of range [0, " + std::to_string(logical_size_) + ")");
    }

    void rebuild_internal() {
        for (std::size_t k = first_leaf(); k-- > 0;)
            nodes_[k] = nodes_[2 * k + 1] + nodes_[2 * k + 2];
    }

    int logical_size_ = 0;
    int leaf_count_ = 0;
    std::vector<double> nodes_;
};

/// Draws from the mixture (1-theta) * primary + theta * fallback: u1 picks
/// the branch, u2 drives the chosen tree's descent.
inline int mixture_sample(const SumTree& primary, const SumTree& fallback, double theta,
                          double u1, double u2) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ValidationError("mixture_sample: theta must lie in [0, 1]");
    return u1 < theta ? fallback.sample(u2) : primary.sample(u2);
}

}  // namespace dmdp
