#include "duel/dueling.hpp"

#include "duel/error.hpp"

#include <cmath>

namespace duel {

std::string_view to_string(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::Mean: return "mean";
        case AggregatorKind::Max: return "max";
        case AggregatorKind::Naive: return "naive";
    }
    return "mean";
}

AggregatorKind parse_aggregator(std::string_view name) {
    if (name == "mean") return AggregatorKind::Mean;
    if (name == "max") return AggregatorKind::Max;
    if (name == "naive") return AggregatorKind::Naive;
    throw InvalidSpec("unknown aggregator '" + std::string(name) + "'");
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw DomainError("argmax of an empty vector");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
        if (values(i) > values(best)) best = i;
    return best;
}

Eigen::VectorXd aggregate(AggregatorKind kind, double v, const Eigen::VectorXd& adv) {
    if (adv.size() == 0) throw DomainError("aggregate needs at least one advantage");
    switch (kind) {
        case AggregatorKind::Mean: return (adv.array() - adv.mean() + v).matrix();
        case AggregatorKind::Max: return (adv.array() - adv(argmax_lowest(adv)) + v).matrix();
        case AggregatorKind::Naive: return (adv.array() + v).matrix();
    }
    throw DomainError("unknown aggregator");
}

AggregateGrad aggregate_backward(AggregatorKind kind, const Eigen::VectorXd& adv,
                                 const Eigen::VectorXd& d_q) {
    if (adv.size() != d_q.size()) throw_shape("aggregate_backward", adv.size(), d_q.size());
    AggregateGrad g;
    g.d_value = d_q.sum();
    switch (kind) {
        case AggregatorKind::Mean:
            g.d_advantage = (d_q.array() - d_q.mean()).matrix();
            break;
        case AggregatorKind::Max:
            g.d_advantage = d_q;
            g.d_advantage(argmax_lowest(adv)) -= d_q.sum();
            break;
        case AggregatorKind::Naive:
            g.d_advantage = d_q;
            break;
    }
    return g;
}

Eigen::VectorXd junction_rescale(const Eigen::VectorXd& shared_grad) {
    return shared_grad * M_SQRT1_2;
}

namespace {

void check_dims(std::size_t input_dim, std::size_t n_actions) {
    if (input_dim == 0) throw InvalidSpec("input dimension must be at least 1");
    if (n_actions == 0) throw InvalidSpec("action count must be at least 1");
}

}  // namespace

DenseNet build_single_stream(std::size_t input_dim, std::size_t n_actions, std::uint64_t seed) {
    check_dims(input_dim, n_actions);
    NetShape shape;
    shape.topology = Topology::SingleStream;
    shape.trunk = {input_dim, kCorridorHidden, kCorridorHidden, n_actions};
    return init_net(shape, seed);
}

DenseNet build_dueling(std::size_t input_dim, std::size_t n_actions, std::uint64_t seed,
                       AggregatorKind aggregator) {
    check_dims(input_dim, n_actions);
    NetShape shape;
    shape.topology = Topology::Dueling;
    shape.trunk = {input_dim, kCorridorHidden};
    shape.value_hidden = {kCorridorStreamHidden};
    shape.advantage_hidden = {kCorridorStreamHidden};
    shape.n_actions = n_actions;
    shape.aggregator = aggregator;
    return init_net(shape, seed);
}

DuelingOutputs dueling_outputs(const DenseNet& net, const Eigen::VectorXd& input) {
    if (net.topology != Topology::Dueling)
        throw UnsupportedTopology("stream outputs require a dueling network");
    ForwardResult fr = forward(net, input);
    return {fr.trace.v, std::move(fr.trace.adv), std::move(fr.output)};
}

Saliency saliency(const DenseNet& net, const Eigen::VectorXd& state_input) {
    if (net.topology != Topology::Dueling)
        throw UnsupportedTopology("saliency requires a dueling network");
    const ForwardResult fr = forward(net, state_input);
    const Eigen::Index n = fr.trace.adv.size();

    Saliency out;
    const BackwardResult value_pass =
        backward_streams(net, fr.trace, 1.0, Eigen::VectorXd::Zero(n), JunctionGrad::Exact);
    out.value = value_pass.input_grad.cwiseAbs();

    out.best_action = argmax_lowest(fr.trace.adv);
    Eigen::VectorXd pick = Eigen::VectorXd::Zero(n);
    pick(out.best_action) = 1.0;
    const BackwardResult adv_pass = backward_streams(net, fr.trace, 0.0, pick, JunctionGrad::Exact);
    out.advantage = adv_pass.input_grad.cwiseAbs();
    return out;
}

}  // namespace duel
