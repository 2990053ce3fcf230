#include "duel/net.hpp"

#include "duel/error.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace duel {

std::string_view to_string(Activation act) {
    return act == Activation::Rectifier ? "rectifier" : "identity";
}

std::string_view to_string(Topology topology) {
    return topology == Topology::SingleStream ? "single" : "dueling";
}

namespace {

constexpr std::string_view kStreamNames[] = {"shared", "value", "advantage"};

template <typename Fn>
void for_each_stream(const DenseNet& net, Fn&& fn) {
    fn(kStreamNames[0], net.shared);
    if (net.topology == Topology::Dueling) {
        fn(kStreamNames[1], net.value);
        fn(kStreamNames[2], net.advantage);
    }
}

std::string layer_name(std::string_view stream, std::size_t k) {
    return std::string(stream) + "[" + std::to_string(k) + "]";
}

void check_chain(std::string_view stream, const std::vector<Layer>& layers, std::size_t in) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const Layer& layer = layers[k];
        if (layer.in_dim() != in) throw_shape(layer_name(stream, k) + " input", in, layer.in_dim());
        if (static_cast<std::size_t>(layer.bias.size()) != layer.out_dim())
            throw_shape(layer_name(stream, k) + " bias", layer.out_dim(), layer.bias.size());
        if (!layer.weight.allFinite() || !layer.bias.allFinite())
            throw NumericError(layer_name(stream, k) + " holds a non-finite parameter");
        in = layer.out_dim();
    }
}

bool same_layers(const std::vector<Layer>& a, const std::vector<Layer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].activation != b[k].activation) return false;
        if (a[k].weight.rows() != b[k].weight.rows() || a[k].weight.cols() != b[k].weight.cols())
            return false;
        if (a[k].bias.size() != b[k].bias.size()) return false;
        // Exact comparison is intended: checkpoints and target syncs must be bitwise copies.
        if (!(a[k].weight.array() == b[k].weight.array()).all()) return false;
        if (!(a[k].bias.array() == b[k].bias.array()).all()) return false;
    }
    return true;
}

Layer make_layer(std::size_t in, std::size_t out, Activation act, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(out));
    layer.activation = act;
    return layer;
}

std::vector<Layer> make_stack(std::size_t in, const std::vector<std::size_t>& widths,
                              bool identity_last, std::mt19937_64& rng) {
    std::vector<Layer> layers;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const bool last = k + 1 == widths.size();
        const auto act = (last && identity_last) ? Activation::Identity : Activation::Rectifier;
        layers.push_back(make_layer(in, widths[k], act, rng));
        in = widths[k];
    }
    return layers;
}

void require_positive(const std::vector<std::size_t>& dims, std::string_view what) {
    for (std::size_t d : dims)
        if (d == 0) throw InvalidSpec(std::string(what) + " contains a zero dimension");
}

Vector stack_forward(const std::vector<Layer>& layers, Vector x, StackTrace* trace) {
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
        trace->inputs.reserve(layers.size());
        trace->pre.reserve(layers.size());
    }
    for (const Layer& layer : layers) {
        Vector pre = layer.weight * x + layer.bias;
        if (trace) {
            trace->inputs.push_back(std::move(x));
            trace->pre.push_back(pre);
        }
        x = layer.activation == Activation::Rectifier ? Vector(pre.cwiseMax(0.0)) : pre;
    }
    return x;
}

void check_trace(std::string_view stream, const std::vector<Layer>& layers,
                 const StackTrace& trace) {
    if (trace.inputs.size() != layers.size() || trace.pre.size() != layers.size())
        throw ShapeError(std::string(stream) + ": trace does not match network depth");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (static_cast<std::size_t>(trace.inputs[k].size()) != layers[k].in_dim() ||
            static_cast<std::size_t>(trace.pre[k].size()) != layers[k].out_dim())
            throw ShapeError(layer_name(stream, k) + ": trace does not match layer shape");
    }
}

/// Pulls `grad` (w.r.t. the stack output) back to the stack input, filling `grads`.
Vector stack_backward(const std::vector<Layer>& layers, const StackTrace& trace, Vector grad,
                      std::vector<LayerGrad>& grads) {
    grads.resize(layers.size());
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& layer = layers[k];
        if (layer.activation == Activation::Rectifier)
            grad = (trace.pre[k].array() > 0.0).select(grad, 0.0);
        grads[k].weight = grad * trace.inputs[k].transpose();
        grads[k].bias = grad;
        grad = layer.weight.transpose() * grad;
    }
    return grad;
}

std::vector<LayerGrad> zeros_for(const std::vector<Layer>& layers) {
    std::vector<LayerGrad> grads;
    grads.reserve(layers.size());
    for (const Layer& layer : layers)
        grads.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                         Vector::Zero(layer.bias.size())});
    return grads;
}

bool congruent(const std::vector<Layer>& layers, const std::vector<LayerGrad>& grads) {
    if (layers.size() != grads.size()) return false;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (grads[k].weight.rows() != layers[k].weight.rows() ||
            grads[k].weight.cols() != layers[k].weight.cols() ||
            grads[k].bias.size() != layers[k].bias.size())
            return false;
    }
    return true;
}

void apply_sgd(std::string_view stream, std::vector<Layer>& layers,
               const std::vector<LayerGrad>& grads, double lr) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (!grads[k].weight.allFinite() || !grads[k].bias.allFinite())
            throw NumericError("non-finite gradient in layer " + layer_name(stream, k));
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weight -= lr * grads[k].weight;
        layers[k].bias -= lr * grads[k].bias;
        if (!layers[k].weight.allFinite() || !layers[k].bias.allFinite())
            throw NumericError("SGD step produced a non-finite parameter in layer " +
                               layer_name(stream, k));
    }
}

template <typename Fn>
void for_each_grad(GradientSet& g, Fn&& fn) {
    for (auto* stream : {&g.shared, &g.value, &g.advantage})
        for (LayerGrad& lg : *stream) fn(lg);
}

template <typename Fn>
void for_each_grad(const GradientSet& g, Fn&& fn) {
    for (const auto* stream : {&g.shared, &g.value, &g.advantage})
        for (const LayerGrad& lg : *stream) fn(lg);
}

}  // namespace

std::size_t DenseNet::input_dim() const {
    if (shared.empty()) throw InvalidSpec("network has no layers");
    return shared.front().in_dim();
}

std::size_t DenseNet::output_dim() const {
    if (topology == Topology::Dueling) {
        if (advantage.empty()) throw InvalidSpec("dueling network has no advantage stream");
        return advantage.back().out_dim();
    }
    if (shared.empty()) throw InvalidSpec("network has no layers");
    return shared.back().out_dim();
}

std::size_t DenseNet::parameter_count() const {
    std::size_t count = 0;
    for_each_stream(*this, [&](std::string_view, const std::vector<Layer>& layers) {
        for (const Layer& layer : layers)
            count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    });
    return count;
}

void DenseNet::validate() const {
    if (shared.empty()) throw InvalidSpec("network has no layers");
    check_chain(kStreamNames[0], shared, shared.front().in_dim());
    if (topology == Topology::Dueling) {
        if (value.empty() || advantage.empty())
            throw InvalidSpec("dueling network needs value and advantage streams");
        const std::size_t junction = shared.back().out_dim();
        check_chain(kStreamNames[1], value, junction);
        check_chain(kStreamNames[2], advantage, junction);
        if (value.back().out_dim() != 1) throw_shape("value stream output", 1, value.back().out_dim());
    }
}

bool DenseNet::operator==(const DenseNet& other) const {
    return topology == other.topology && aggregator == other.aggregator &&
           same_layers(shared, other.shared) && same_layers(value, other.value) &&
           same_layers(advantage, other.advantage);
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
    GradientSet g;
    g.shared = zeros_for(net.shared);
    if (net.topology == Topology::Dueling) {
        g.value = zeros_for(net.value);
        g.advantage = zeros_for(net.advantage);
    }
    return g;
}

double GradientSet::squared_norm() const {
    double total = 0.0;
    for_each_grad(*this, [&](const LayerGrad& lg) {
        total += lg.weight.squaredNorm() + lg.bias.squaredNorm();
    });
    return total;
}

double GradientSet::norm() const { return std::sqrt(squared_norm()); }

bool GradientSet::congruent_with(const DenseNet& net) const {
    if (!congruent(net.shared, shared)) return false;
    if (net.topology == Topology::Dueling)
        return congruent(net.value, value) && congruent(net.advantage, advantage);
    return value.empty() && advantage.empty();
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
    auto add = [](std::vector<LayerGrad>& a, const std::vector<LayerGrad>& b) {
        if (a.size() != b.size()) throw ShapeError("gradient sets are not congruent");
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k].weight.rows() != b[k].weight.rows() || a[k].weight.cols() != b[k].weight.cols())
                throw ShapeError("gradient sets are not congruent");
            a[k].weight += b[k].weight;
            a[k].bias += b[k].bias;
        }
    };
    add(shared, other.shared);
    add(value, other.value);
    add(advantage, other.advantage);
    return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
    for_each_grad(*this, [&](LayerGrad& lg) {
        lg.weight *= factor;
        lg.bias *= factor;
    });
    return *this;
}

DenseNet init_net(const NetShape& shape, std::uint64_t seed) {
    if (shape.trunk.empty()) throw InvalidSpec("empty layer specification");
    require_positive(shape.trunk, "layer specification");
    std::mt19937_64 rng(seed);
    DenseNet net;
    net.topology = shape.topology;
    net.aggregator = shape.aggregator;
    const std::vector<std::size_t> widths(shape.trunk.begin() + 1, shape.trunk.end());

    if (shape.topology == Topology::SingleStream) {
        if (widths.empty()) throw InvalidSpec("layer specification needs at least two dimensions");
        net.shared = make_stack(shape.trunk.front(), widths, true, rng);
        return net;
    }

    if (shape.n_actions == 0) throw InvalidSpec("dueling network needs at least one action");
    if (widths.empty()) throw InvalidSpec("dueling network needs at least one shared layer");
    require_positive(shape.value_hidden, "value stream");
    require_positive(shape.advantage_hidden, "advantage stream");
    net.shared = make_stack(shape.trunk.front(), widths, false, rng);
    const std::size_t junction = shape.trunk.back();
    std::vector<std::size_t> value_widths = shape.value_hidden;
    value_widths.push_back(1);
    std::vector<std::size_t> adv_widths = shape.advantage_hidden;
    adv_widths.push_back(shape.n_actions);
    net.value = make_stack(junction, value_widths, true, rng);
    net.advantage = make_stack(junction, adv_widths, true, rng);
    return net;
}

DenseNet init_net(std::span<const std::size_t> layer_spec, std::uint64_t seed) {
    NetShape shape;
    shape.trunk.assign(layer_spec.begin(), layer_spec.end());
    return init_net(shape, seed);
}

ForwardResult forward(const DenseNet& net, const Vector& input) {
    if (static_cast<std::size_t>(input.size()) != net.input_dim())
        throw_shape("forward input", net.input_dim(), input.size());
    ForwardResult result;
    Vector h = stack_forward(net.shared, input, &result.trace.shared);
    if (net.topology == Topology::SingleStream) {
        result.output = std::move(h);
        return result;
    }
    const Vector v = stack_forward(net.value, h, &result.trace.value);
    result.trace.adv = stack_forward(net.advantage, h, &result.trace.advantage);
    result.trace.v = v(0);
    result.output = aggregate(net.aggregator, result.trace.v, result.trace.adv);
    return result;
}

Vector predict(const DenseNet& net, const Vector& input) {
    if (static_cast<std::size_t>(input.size()) != net.input_dim())
        throw_shape("predict input", net.input_dim(), input.size());
    Vector h = stack_forward(net.shared, input, nullptr);
    if (net.topology == Topology::SingleStream) return h;
    const Vector v = stack_forward(net.value, h, nullptr);
    const Vector adv = stack_forward(net.advantage, h, nullptr);
    return aggregate(net.aggregator, v(0), adv);
}

BackwardResult backward_streams(const DenseNet& net, const ForwardTrace& trace, double d_value,
                                const Vector& d_advantage, JunctionGrad junction) {
    if (net.topology != Topology::Dueling)
        throw UnsupportedTopology("stream backward requires a dueling network");
    check_trace(kStreamNames[0], net.shared, trace.shared);
    check_trace(kStreamNames[1], net.value, trace.value);
    check_trace(kStreamNames[2], net.advantage, trace.advantage);
    if (static_cast<std::size_t>(d_advantage.size()) != net.output_dim())
        throw_shape("advantage gradient", net.output_dim(), d_advantage.size());

    BackwardResult result;
    Vector dv(1);
    dv(0) = d_value;
    Vector into_trunk = stack_backward(net.value, trace.value, dv, result.params.value);
    into_trunk += stack_backward(net.advantage, trace.advantage, d_advantage, result.params.advantage);
    if (junction == JunctionGrad::Rescaled) {
        into_trunk = junction_rescale(into_trunk);
        ++result.junction_rescales;
    }
    result.input_grad = stack_backward(net.shared, trace.shared, into_trunk, result.params.shared);
    return result;
}

BackwardResult backward(const DenseNet& net, const ForwardTrace& trace, const Vector& output_grad,
                        JunctionGrad junction) {
    if (static_cast<std::size_t>(output_grad.size()) != net.output_dim())
        throw_shape("output gradient", net.output_dim(), output_grad.size());
    if (net.topology == Topology::SingleStream) {
        check_trace(kStreamNames[0], net.shared, trace.shared);
        BackwardResult result;
        result.input_grad = stack_backward(net.shared, trace.shared, output_grad, result.params.shared);
        return result;
    }
    if (static_cast<std::size_t>(trace.adv.size()) != net.output_dim())
        throw ShapeError("trace does not carry the advantage stream output");
    const AggregateGrad agg = aggregate_backward(net.aggregator, trace.adv, output_grad);
    return backward_streams(net, trace, agg.d_value, agg.d_advantage, junction);
}

void sgd_step_inplace(DenseNet& net, const GradientSet& grads, double lr) {
    if (!grads.congruent_with(net)) throw ShapeError("gradient set does not match network shape");
    if (!std::isfinite(lr)) throw NumericError("non-finite learning rate");
    apply_sgd(kStreamNames[0], net.shared, grads.shared, lr);
    if (net.topology == Topology::Dueling) {
        apply_sgd(kStreamNames[1], net.value, grads.value, lr);
        apply_sgd(kStreamNames[2], net.advantage, grads.advantage, lr);
    }
}

DenseNet sgd_step(DenseNet net, const GradientSet& grads, double lr) {
    sgd_step_inplace(net, grads, lr);
    return net;
}

GradientSet clip_grad_norm(GradientSet grads, double max_norm) {
    if (!(max_norm > 0.0)) throw DomainError("clip norm must be positive");
    const double norm = grads.norm();
    // A few ulps of slack keep a second clip of an already-clipped set from rescaling again.
    if (norm > max_norm * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()))
        grads *= max_norm / norm;
    return grads;
}

GradientSet finite_diff_grad(const DenseNet& net, const Vector& input,
                             const std::function<double(const Vector&)>& loss, double step) {
    DenseNet probe = net;
    GradientSet grads = GradientSet::zeros_like(net);
    auto eval = [&] { return loss(predict(probe, input)); };
    auto perturb = [&](double& param, double& slot) {
        const double saved = param;
        param = saved + step;
        const double up = eval();
        param = saved - step;
        const double down = eval();
        param = saved;
        slot = (up - down) / (2.0 * step);
    };
    auto run = [&](std::vector<Layer>& layers, std::vector<LayerGrad>& out) {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            for (Eigen::Index r = 0; r < layers[k].weight.rows(); ++r)
                for (Eigen::Index c = 0; c < layers[k].weight.cols(); ++c)
                    perturb(layers[k].weight(r, c), out[k].weight(r, c));
            for (Eigen::Index r = 0; r < layers[k].bias.size(); ++r)
                perturb(layers[k].bias(r), out[k].bias(r));
        }
    };
    run(probe.shared, grads.shared);
    if (net.topology == Topology::Dueling) {
        run(probe.value, grads.value);
        run(probe.advantage, grads.advantage);
    }
    return grads;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidSpec("learning rate must be finite and non-negative");
    if (!(clip_norm > 0.0)) throw InvalidSpec("gradient clip norm must be positive");
    if (sync_period == 0) throw InvalidSpec("target sync period must be positive");
    if (minibatch == 0) throw InvalidSpec("minibatch size must be positive");
}

}  // namespace duel
