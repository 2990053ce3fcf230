#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace duel {

/// How the value and advantage streams are folded into Q-values.
///  - Mean:  q_a = v + adv_a - mean(adv)
///  - Max:   q_a = v + adv_a - max(adv)
///  - Naive: q_a = v + adv_a  (not identifiable; kept to demonstrate the failure)
enum class AggregatorKind { Mean, Max, Naive };

std::string_view to_string(AggregatorKind kind);
AggregatorKind parse_aggregator(std::string_view name);

/// Lowest index among the maximal entries.
Eigen::Index argmax_lowest(const Eigen::VectorXd& values);

Eigen::VectorXd aggregate(AggregatorKind kind, double v, const Eigen::VectorXd& adv);

struct AggregateGrad {
    double d_value = 0.0;
    Eigen::VectorXd d_advantage;
};

/// Derivative of `aggregate` pulled back through dL/dq. The max variant needs the advantage
/// vector to locate its argmax; the subgradient goes entirely to the lowest maximal index.
AggregateGrad aggregate_backward(AggregatorKind kind, const Eigen::VectorXd& adv,
                                 const Eigen::VectorXd& d_q);

/// Scales the gradient flowing into the shared trunk by 1/sqrt(2).
Eigen::VectorXd junction_rescale(const Eigen::VectorXd& shared_grad);

}  // namespace duel
