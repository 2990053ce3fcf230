#include "duel/agents.hpp"

#include "duel/aggregate.hpp"
#include "duel/error.hpp"

#include <cmath>
#include <sstream>

namespace duel {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser, so neighbouring seeds give unrelated generator states.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Transition make_transition(StateId s, ActionId a, const StepResult& r) {
    return {s, a, r.reward, r.done ? kTerminalState : r.next, r.done};
}

void check_net(const DenseNet& net, const CorridorSpec& spec) {
    if (net.input_dim() != spec.cell_count())
        throw_shape("network input", spec.cell_count(), net.input_dim());
    if (net.output_dim() != spec.n_actions)
        throw_shape("network output", spec.n_actions, net.output_dim());
}

}  // namespace

double expected_sarsa_target(double r, bool done, const Vector& policy_row, const Vector& q_next,
                             double gamma) {
    if (done) return r;
    if (policy_row.size() != q_next.size())
        throw_shape("expected_sarsa_target policy row", q_next.size(), policy_row.size());
    return r + gamma * policy_row.dot(q_next);
}

double dqn_target(double r, bool done, const Vector& target_q_next, double gamma) {
    if (done) return r;
    return r + gamma * target_q_next.maxCoeff();
}

double ddqn_target(double r, bool done, const Vector& online_q_next, const Vector& target_q_next,
                   double gamma) {
    if (done) return r;
    if (online_q_next.size() != target_q_next.size())
        throw_shape("ddqn_target", online_q_next.size(), target_q_next.size());
    return r + gamma * target_q_next(argmax_lowest(online_q_next));
}

double expected_sarsa_target(const Transition& t, const PolicyTable& policy, const DenseNet& net,
                             const CorridorSpec& spec) {
    if (t.done) return t.r;
    const Vector row = policy.probs.row(static_cast<Eigen::Index>(t.s_next)).transpose();
    return expected_sarsa_target(t.r, false, row, predict(net, encode_state(spec, t.s_next)), spec.gamma);
}

double dqn_target(const Transition& t, const DenseNet& target_net, const CorridorSpec& spec) {
    if (t.done) return t.r;
    return dqn_target(t.r, false, predict(target_net, encode_state(spec, t.s_next)), spec.gamma);
}

double ddqn_target(const Transition& t, const DenseNet& online_net, const DenseNet& target_net,
                   const CorridorSpec& spec) {
    if (t.done) return t.r;
    const Vector x = encode_state(spec, t.s_next);
    return ddqn_target(t.r, false, predict(online_net, x), predict(target_net, x), spec.gamma);
}

TdGradient td_gradient(const DenseNet& net, const Vector& input, std::size_t action, double target,
                       JunctionGrad junction) {
    const ForwardResult fr = forward(net, input);
    if (action >= static_cast<std::size_t>(fr.output.size()))
        throw ContractError("action " + std::to_string(action) + " out of range");
    const auto a = static_cast<Eigen::Index>(action);
    TdGradient out;
    out.td_error = target - fr.output(a);
    Vector d_out = Vector::Zero(fr.output.size());
    d_out(a) = -out.td_error;
    out.grads = backward(net, fr.trace, d_out, junction).params;
    return out;
}

JunctionGrad training_junction(const DenseNet& net) {
    return net.topology == Topology::Dueling ? JunctionGrad::Rescaled : JunctionGrad::Exact;
}

void ControlConfig::validate() const {
    train.validate();
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw InvalidSpec("exploration rates must lie in [0, 1]");
    if (!(epsilon_fraction >= 0.0 && epsilon_fraction <= 1.0))
        throw InvalidSpec("exploration fraction must lie in [0, 1]");
    if (max_episode_steps == 0) throw InvalidSpec("episode step limit must be positive");
    if (replay_capacity == 0) throw InvalidSpec("replay capacity must be positive");
    if (!(priority_alpha >= 0.0)) throw InvalidSpec("priority exponent must be non-negative");
}

double exploration_epsilon(const ControlConfig& config, std::size_t step) {
    const double horizon = config.epsilon_fraction * static_cast<double>(config.train.updates);
    if (horizon <= 0.0 || static_cast<double>(step) >= horizon) return config.epsilon_end;
    const double frac = static_cast<double>(step) / horizon;
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

AgentState make_agent(DenseNet net, const ControlConfig& config) {
    config.validate();
    net.validate();
    AgentState agent;
    agent.target = net;
    agent.online = std::move(net);
    agent.config = config.train;
    if (config.replay == ReplayKind::Uniform)
        agent.replay.emplace<UniformBuffer>(config.replay_capacity);
    else
        agent.replay.emplace<PrioritizedBuffer>(config.replay_capacity, config.priority_alpha);
    return agent;
}

void sync_target(AgentState& agent) {
    agent.target = agent.online;
    ++agent.syncs;
}

std::string SECurve::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "update,se,arch,n_actions,seed\n";
    for (const SEPoint& p : points)
        out << p.update << ',' << p.se << ',' << arch << ',' << n_actions << ',' << seed << '\n';
    return out.str();
}

std::vector<std::size_t> se_log_schedule(std::size_t total) {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u <= std::min<std::size_t>(total, 100); ++u) out.push_back(u);
    double next = 100.0;
    while (true) {
        next *= 1.25;
        const auto u = static_cast<std::size_t>(std::ceil(next));
        if (u >= total) break;
        if (u > out.back()) out.push_back(u);
    }
    if (out.back() != total) out.push_back(total);
    return out;
}

std::string arch_label(const DenseNet& net) {
    return net.topology == Topology::Dueling ? "duel" : "single";
}

SECurve train_policy_eval(const CorridorSpec& spec, const PolicyTable& policy, DenseNet& net,
                          const TrainConfig& config, const ExactQ& q_pi) {
    config.validate();
    check_net(net, spec);
    if (policy.probs.rows() != static_cast<Eigen::Index>(spec.cell_count()) ||
        policy.n_actions() != spec.n_actions)
        throw ShapeError("policy table does not match the corridor");

    SECurve curve;
    curve.arch = arch_label(net);
    curve.n_actions = spec.n_actions;
    curve.seed = config.seed;

    std::mt19937_64 rng(stream_seed(config.seed, 1));
    std::uniform_int_distribution<StateId> pick_cell(0, spec.cell_count() - 1);
    std::uniform_int_distribution<ActionId> pick_action(0, spec.n_actions - 1);
    const JunctionGrad junction = training_junction(net);
    const std::vector<std::size_t> schedule = se_log_schedule(config.updates);
    std::size_t next_log = 0;

    for (std::size_t update = 0;; ++update) {
        if (next_log < schedule.size() && schedule[next_log] == update) {
            curve.points.push_back({update, se_metric(net, spec, q_pi)});
            ++next_log;
        }
        if (update == config.updates) break;

        const StateId s = pick_cell(rng);
        const ActionId a = pick_action(rng);
        const StepResult r = step(spec, s, a);
        const double y = expected_sarsa_target(make_transition(s, a, r), policy, net, spec);
        TdGradient g = td_gradient(net, encode_state(spec, s), a, y, junction);
        sgd_step_inplace(net, clip_grad_norm(std::move(g.grads), config.clip_norm), config.learning_rate);
    }
    return curve;
}

AgentState train_ddqn(const CorridorSpec& spec, const ControlConfig& config, AgentState agent) {
    config.validate();
    check_net(agent.online, spec);
    if (!(agent.online.topology == agent.target.topology))
        throw ShapeError("online and target networks differ in topology");

    std::mt19937_64 rng(stream_seed(config.train.seed, 2));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<ActionId> random_action(0, spec.n_actions - 1);
    const JunctionGrad junction = training_junction(agent.online);
    const std::size_t budget = config.train.updates;

    StateId s = spec.start;
    std::size_t episode_steps = 0;
    for (std::size_t t = 0; t < budget; ++t) {
        const Vector x = encode_state(spec, s);
        const ActionId a = unit(rng) < exploration_epsilon(config, t)
                               ? random_action(rng)
                               : static_cast<ActionId>(argmax_lowest(predict(agent.online, x)));
        const StepResult r = step(spec, s, a);
        const Transition tr = make_transition(s, a, r);
        std::visit(
            [&](auto& buf) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(buf)>, std::monostate>) buf.push(tr);
            },
            agent.replay);
        ++agent.steps;
        ++episode_steps;
        if (r.done || episode_steps >= config.max_episode_steps) {
            s = spec.start;
            episode_steps = 0;
            ++agent.episodes;
        } else {
            s = r.next;
        }

        if (t + 1 >= config.learning_starts) {
            const std::size_t batch = config.train.minibatch;
            GradientSet total = GradientSet::zeros_like(agent.online);
            auto accumulate = [&](const Transition& sample, double weight) {
                const double y = ddqn_target(sample, agent.online, agent.target, spec);
                TdGradient g = td_gradient(agent.online, encode_state(spec, sample.s), sample.a, y, junction);
                g.grads *= weight / static_cast<double>(batch);
                total += g.grads;
                return std::abs(g.td_error);
            };
            if (auto* uniform = std::get_if<UniformBuffer>(&agent.replay)) {
                for (const SampledTransition& st : uniform->sample(batch, rng)) accumulate(st.transition, 1.0);
            } else if (auto* prio = std::get_if<PrioritizedBuffer>(&agent.replay)) {
                const auto samples = prio->sample(batch, anneal_beta(t, budget), rng);
                std::vector<std::size_t> indices;
                std::vector<double> td;
                for (const WeightedTransition& wt : samples) {
                    indices.push_back(wt.index);
                    td.push_back(accumulate(wt.transition, wt.weight));
                }
                prio->update_priorities(indices, td);
            } else {
                throw ContractError("control training needs a replay buffer");
            }
            sgd_step_inplace(agent.online, clip_grad_norm(std::move(total), config.train.clip_norm),
                             config.train.learning_rate);
            ++agent.updates;
        }

        if ((t + 1) % config.train.sync_period == 0) sync_target(agent);
    }
    return agent;
}

OverestimationTrial overestimation_trial(std::size_t n_actions, std::size_t samples_per_action,
                                         std::mt19937_64& rng) {
    if (n_actions == 0 || samples_per_action == 0)
        throw DomainError("overestimation trial needs actions and samples");
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(n_actions);
    Vector online = Vector::Zero(n);
    Vector target = Vector::Zero(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (std::size_t k = 0; k < samples_per_action; ++k) online(a) += noise(rng);
        for (std::size_t k = 0; k < samples_per_action; ++k) target(a) += noise(rng);
    }
    online /= static_cast<double>(samples_per_action);
    target /= static_cast<double>(samples_per_action);
    // Single state with gamma = 1 and zero immediate reward: the target is the bootstrapped value.
    return {dqn_target(0.0, false, target, 1.0), ddqn_target(0.0, false, online, target, 1.0)};
}

}  // namespace duel
