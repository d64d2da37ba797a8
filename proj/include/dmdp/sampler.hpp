#pragma once

#include <memory>
#include <vector>

#include "dmdp/instance.hpp"
#include "dmdp/sum_tree.hpp"

namespace dmdp {

/// The preprocessed transition data: one sum tree per state-action pair over
/// next states, enabling O(log |S|) transition sampling. Immutable once
/// built, so a single sampler is shared across concurrent solver trials.
class TransitionSampler {
  public:
    static TransitionSampler build(const DmdpInstance& inst);

    /// Adopts per-pair trees directly (i-major, a-minor order), e.g. from a
    /// tree-encoded instance file.
    static TransitionSampler from_trees(int num_states, int num_actions,
                                        std::vector<SumTree> trees);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    const SumTree& tree(int i, int a) const {
        return trees_[static_cast<std::size_t>(i) * num_actions_ + a];
    }

    int sample_next(int i, int a, double u) const { return tree(i, a).sample(u); }

  private:
    int num_states_ = 0;
    int num_actions_ = 0;
    std::vector<SumTree> trees_;
};

}  // namespace dmdp
