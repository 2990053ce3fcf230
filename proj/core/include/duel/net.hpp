#pragma once

#include "duel/aggregate.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace duel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { Rectifier, Identity };
enum class Topology { SingleStream, Dueling };

std::string_view to_string(Activation act);
std::string_view to_string(Topology topology);

struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
    Activation activation = Activation::Rectifier;

    std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Feed-forward network with either one stream, or a shared trunk feeding separate value and
/// advantage streams that are recombined by an aggregator.
///
/// For a single-stream net only `shared` is populated and its last layer produces Q directly.
struct DenseNet {
    Topology topology = Topology::SingleStream;
    AggregatorKind aggregator = AggregatorKind::Mean;
    std::vector<Layer> shared;
    std::vector<Layer> value;
    std::vector<Layer> advantage;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    /// Throws ShapeError if layer dimensions do not chain, NumericError on non-finite parameters.
    void validate() const;

    /// Bitwise equality of every parameter and of the topology.
    bool operator==(const DenseNet& other) const;
};

struct LayerGrad {
    Matrix weight;
    Vector bias;
};

/// One real per parameter of the net it was produced from.
struct GradientSet {
    std::vector<LayerGrad> shared;
    std::vector<LayerGrad> value;
    std::vector<LayerGrad> advantage;

    static GradientSet zeros_like(const DenseNet& net);

    double squared_norm() const;
    double norm() const;
    bool congruent_with(const DenseNet& net) const;

    GradientSet& operator+=(const GradientSet& other);
    GradientSet& operator*=(double factor);
};

/// Architecture description consumed by `init_net`.
struct NetShape {
    Topology topology = Topology::SingleStream;
    /// Single stream: full chain [in, h1, ..., out]. Dueling: trunk [in, h1, ..., hk], all rectified.
    std::vector<std::size_t> trunk;
    /// Dueling only: hidden widths of each stream; the value stream ends in 1 unit and the
    /// advantage stream in `n_actions`.
    std::vector<std::size_t> value_hidden;
    std::vector<std::size_t> advantage_hidden;
    std::size_t n_actions = 0;
    AggregatorKind aggregator = AggregatorKind::Mean;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero. Deterministic in `seed`.
DenseNet init_net(const NetShape& shape, std::uint64_t seed);
/// Single-stream shortcut: rectifiers between layers, identity output.
DenseNet init_net(std::span<const std::size_t> layer_spec, std::uint64_t seed);

/// Per-layer inputs and pre-activations of one stack of layers.
struct StackTrace {
    std::vector<Vector> inputs;
    std::vector<Vector> pre;
};

struct ForwardTrace {
    StackTrace shared;
    StackTrace value;
    StackTrace advantage;
    double v = 0.0;   // dueling only
    Vector adv;       // dueling only
};

struct ForwardResult {
    Vector output;
    ForwardTrace trace;
};

ForwardResult forward(const DenseNet& net, const Vector& input);
/// Forward pass without keeping the trace.
Vector predict(const DenseNet& net, const Vector& input);

/// Whether the gradient entering the shared trunk from both streams gets the 1/sqrt(2) factor.
enum class JunctionGrad { Exact, Rescaled };

struct BackwardResult {
    GradientSet params;
    Vector input_grad;
    int junction_rescales = 0;
};

/// Reverse-mode derivatives of dot(output_grad, output). `JunctionGrad::Exact` gives the true
/// gradient; `Rescaled` multiplies the trunk's incoming gradient by 1/sqrt(2) (dueling only).
BackwardResult backward(const DenseNet& net, const ForwardTrace& trace, const Vector& output_grad,
                        JunctionGrad junction = JunctionGrad::Exact);

/// Dueling only: backward from explicit stream-output gradients, bypassing the aggregator.
BackwardResult backward_streams(const DenseNet& net, const ForwardTrace& trace, double d_value,
                                const Vector& d_advantage, JunctionGrad junction);

/// p <- p - lr * g. Throws NumericError naming the first layer holding a non-finite gradient.
DenseNet sgd_step(DenseNet net, const GradientSet& grads, double lr);
void sgd_step_inplace(DenseNet& net, const GradientSet& grads, double lr);

/// Uniformly rescales `grads` so that the global L2 norm does not exceed `max_norm`.
GradientSet clip_grad_norm(GradientSet grads, double max_norm);

inline constexpr double kFiniteDiffStep = 1e-6;

/// Central-difference estimate of d loss(forward(net, input)) / d parameter.
GradientSet finite_diff_grad(const DenseNet& net, const Vector& input,
                             const std::function<double(const Vector&)>& loss,
                             double step = kFiniteDiffStep);

struct TrainConfig {
    double learning_rate = 1e-3;
    double clip_norm = 10.0;
    std::size_t sync_period = 500;
    std::uint64_t seed = 1;
    std::size_t updates = 100000;
    std::size_t minibatch = 32;

    void validate() const;
};

}  // namespace duel
