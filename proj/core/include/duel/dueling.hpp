#pragma once

#include "duel/aggregate.hpp"
#include "duel/net.hpp"

#include <cstddef>
#include <cstdint>

namespace duel {

/// Hidden widths of the corridor networks.
inline constexpr std::size_t kCorridorHidden = 50;
inline constexpr std::size_t kCorridorStreamHidden = 25;

/// input -> 50 -> 50 -> n_actions, rectifiers between layers.
DenseNet build_single_stream(std::size_t input_dim, std::size_t n_actions, std::uint64_t seed);

/// input -> 50 shared, then value 50 -> 25 -> 1 and advantage 50 -> 25 -> n_actions.
DenseNet build_dueling(std::size_t input_dim, std::size_t n_actions, std::uint64_t seed,
                       AggregatorKind aggregator = AggregatorKind::Mean);

struct DuelingOutputs {
    double v = 0.0;
    Eigen::VectorXd adv;
    Eigen::VectorXd q;
};

DuelingOutputs dueling_outputs(const DenseNet& net, const Eigen::VectorXd& input);

struct Saliency {
    Eigen::VectorXd value;      // |d v / d input|
    Eigen::VectorXd advantage;  // |d adv[best_action] / d input|
    Eigen::Index best_action = 0;
};

/// Absolute input Jacobians of the value stream and of the advantage stream at its argmax.
Saliency saliency(const DenseNet& net, const Eigen::VectorXd& state_input);

}  // namespace duel
