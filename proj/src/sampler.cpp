#include "dmdp/sampler.hpp"

namespace dmdp {

TransitionSampler TransitionSampler::build(const DmdpInstance& inst) {
    TransitionSampler sampler;
    sampler.num_states_ = inst.num_states;
    sampler.num_actions_ = inst.num_actions;
    sampler.trees_.reserve(static_cast<std::size_t>(inst.num_states) * inst.num_actions);
    for (int i = 0; i < inst.num_states; ++i)
        for (int a = 0; a < inst.num_actions; ++a)
            sampler.trees_.emplace_back(inst.transition_row(i, a));
    return sampler;
}

TransitionSampler TransitionSampler::from_trees(int num_states, int num_actions,
                                                std::vector<SumTree> trees) {
    if (trees.size() != static_cast<std::size_t>(num_states) * num_actions)
        throw ValidationError("TransitionSampler: wrong number of trees");
    TransitionSampler sampler;
    sampler.num_states_ = num_states;
    sampler.num_actions_ = num_actions;
    sampler.trees_ = std::move(trees);
    return sampler;
}

}  // namespace dmdp
