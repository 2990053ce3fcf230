#pragma once

#include "duel/corridor.hpp"
#include "duel/net.hpp"
#include "duel/replay.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace duel {

// Bootstrap targets. All of them return `r` for terminal transitions.

/// r + gamma * sum_a' pi(a'|s') Q(s', a').
double expected_sarsa_target(double r, bool done, const Vector& policy_row, const Vector& q_next,
                             double gamma);
/// r + gamma * max_a' Q_target(s', a').
double dqn_target(double r, bool done, const Vector& target_q_next, double gamma);
/// r + gamma * Q_target(s', argmax_a' Q_online(s', a')), ties to the lowest index.
double ddqn_target(double r, bool done, const Vector& online_q_next, const Vector& target_q_next,
                   double gamma);

// Network-level variants evaluate the nets on the encoded successor state.
double expected_sarsa_target(const Transition& t, const PolicyTable& policy, const DenseNet& net,
                             const CorridorSpec& spec);
double dqn_target(const Transition& t, const DenseNet& target_net, const CorridorSpec& spec);
double ddqn_target(const Transition& t, const DenseNet& online_net, const DenseNet& target_net,
                   const CorridorSpec& spec);

/// Gradient of 0.5 * (y - Q(s,a))^2 with the target held constant; only output `a` carries error.
/// Returns the TD error y - Q(s,a) alongside the parameter gradients.
struct TdGradient {
    GradientSet grads;
    double td_error = 0.0;
};
TdGradient td_gradient(const DenseNet& net, const Vector& input, std::size_t action, double target,
                       JunctionGrad junction);

/// Rescale at the stream junction for dueling nets, no-op for single-stream nets.
JunctionGrad training_junction(const DenseNet& net);

enum class ReplayKind { Uniform, Prioritized };

struct ControlConfig {
    TrainConfig train{.learning_rate = 1e-3, .clip_norm = 10.0, .sync_period = 500, .seed = 1,
                      .updates = 200000, .minibatch = 32};
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    /// Fraction of the step budget over which exploration decays linearly.
    double epsilon_fraction = 0.2;
    std::size_t learning_starts = 1000;
    std::size_t max_episode_steps = 500;
    ReplayKind replay = ReplayKind::Uniform;
    std::size_t replay_capacity = 10000;
    double priority_alpha = 0.7;

    void validate() const;
};

/// Linear decay from `epsilon_start` to `epsilon_end`, then flat.
double exploration_epsilon(const ControlConfig& config, std::size_t step);

struct AgentState {
    DenseNet online;
    DenseNet target;
    std::size_t steps = 0;
    std::size_t updates = 0;
    std::size_t syncs = 0;
    std::size_t episodes = 0;
    TrainConfig config;
    std::variant<std::monostate, UniformBuffer, PrioritizedBuffer> replay;
};

/// Online and target start as bitwise copies of `net`.
AgentState make_agent(DenseNet net, const ControlConfig& config);

void sync_target(AgentState& agent);

/// One logged point of the policy-evaluation error.
struct SEPoint {
    std::size_t update = 0;
    double se = 0.0;
};

struct SECurve {
    std::vector<SEPoint> points;
    std::string arch;
    std::size_t n_actions = 0;
    std::uint64_t seed = 0;

    /// Columns: update,se,arch,n_actions,seed.
    std::string to_csv() const;
};

/// 0..100 every update, then growing by a factor 1.25; always ends at `total`.
std::vector<std::size_t> se_log_schedule(std::size_t total);

std::string arch_label(const DenseNet& net);

/// TD(0) policy evaluation with the expected-SARSA target on the online network. Each update draws a
/// cell and an action uniformly and takes one clipped SGD step on that transition. The target
/// averages over `policy`, so the fixed point is still Q^pi.
SECurve train_policy_eval(const CorridorSpec& spec, const PolicyTable& policy, DenseNet& net,
                          const TrainConfig& config, const ExactQ& q_pi);

/// Epsilon-greedy double-DQN control from the start cell with replay and periodic target syncs.
/// `config.train.updates` is the environment step budget.
AgentState train_ddqn(const CorridorSpec& spec, const ControlConfig& config, AgentState agent);

/// One trial of the single-state maximisation-bias experiment: two tabular estimators, each the
/// mean of `samples_per_action` standard-normal rewards per action (true values all zero).
struct OverestimationTrial {
    double dqn_estimate = 0.0;
    double ddqn_estimate = 0.0;
};
OverestimationTrial overestimation_trial(std::size_t n_actions, std::size_t samples_per_action,
                                         std::mt19937_64& rng);

}  // namespace duel
