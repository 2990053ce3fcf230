#pragma once

#include "duel/net.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace duel {

using StateId = std::size_t;
using ActionId = std::size_t;

enum PrimitiveAction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kNoOp = 4 };
inline constexpr std::size_t kPrimitiveActions = 5;

/// Non-terminal cells: 10 (left, vertical) + 50 (horizontal) + 10 (right, vertical).
inline constexpr std::size_t kCorridorCells = 70;

struct CorridorOptions {
    double gamma = 0.99;
    double goal_reward = 1.0;
    double distractor_reward = 0.5;
};

/// Deterministic three-corridor gridworld. Cells 0..69 are non-terminal and numbered along the
/// path: 0..9 climb the left corridor (0 is the start), 10..59 run along the horizontal corridor,
/// 60..69 climb the right corridor. Two terminal states follow: the goal above cell 69 and the
/// distractor to the left of the start.
///
/// Actions 0..4 are up/down/left/right/no-op; every action index >= 5 is another no-op.
struct CorridorSpec {
    std::size_t n_actions = kPrimitiveActions;
    double gamma = 0.99;
    StateId start = 0;
    StateId goal = kCorridorCells;
    StateId distractor = kCorridorCells + 1;
    double goal_reward = 1.0;
    double distractor_reward = 0.5;
    /// Successor of each non-terminal cell under each primitive action.
    std::vector<std::array<StateId, kPrimitiveActions>> successor;
    /// Grid coordinates (column, row) of every state including both terminals.
    std::vector<std::array<int, 2>> coords;

    std::size_t cell_count() const { return successor.size(); }
    std::size_t state_count() const { return successor.size() + 2; }
    bool is_terminal(StateId s) const { return s == goal || s == distractor; }
    /// Reward collected on entering `s` (zero unless `s` is terminal).
    double arrival_reward(StateId s) const;
    StateId next_state(StateId s, ActionId a) const;
};

/// Only 5, 10 and 20 actions are accepted.
CorridorSpec build_corridor(std::size_t n_actions, const CorridorOptions& options = {});

struct StepResult {
    StateId next = 0;
    double reward = 0.0;
    bool done = false;
};

StepResult step(const CorridorSpec& spec, StateId state, ActionId action);

/// One-hot over the 70 cells; terminal states encode as all zeros.
Vector encode_state(const CorridorSpec& spec, StateId state);

/// Row-stochastic action probabilities, one row per non-terminal cell.
struct PolicyTable {
    Matrix probs;

    std::size_t n_actions() const { return static_cast<std::size_t>(probs.cols()); }
    /// Throws DomainError unless rows are non-negative and sum to 1 within 1e-12.
    void validate() const;
    bool operator==(const PolicyTable& other) const;
};

enum class Provenance { Optimal, Policy };

/// Exact action values on the non-terminal cells (terminal values are zero).
struct ExactQ {
    Matrix q;
    double gamma = 0.0;
    Provenance provenance = Provenance::Optimal;
    /// The evaluated policy, when provenance is Policy.
    std::optional<PolicyTable> policy;
    /// Bellman residual (sup-norm) of `q` at termination.
    double residual = 0.0;
};

ExactQ solve_q_star(const CorridorSpec& spec, double tol);

/// pi(a|s) = eps/|A| + (1-eps) [a == argmax_a' Q(s,a')], ties to the lowest action index.
PolicyTable epsilon_greedy_policy(const ExactQ& q, double epsilon);

ExactQ solve_q_pi(const CorridorSpec& spec, const PolicyTable& policy, double tol);

/// Sup-norm residual of the optimality or expectation Bellman equation, per provenance.
double bellman_residual(const CorridorSpec& spec, const ExactQ& q);

struct AdvantageTable {
    Vector v;  // V(s) = sum_a pi(a|s) Q(s,a)
    Matrix a;  // A(s,a) = Q(s,a) - V(s)
};

AdvantageTable advantage_of(const ExactQ& q_pi, const PolicyTable& policy);

/// sum over non-terminal s and all a of (Q(s,a;net) - Q_pi(s,a))^2.
double se_metric(const DenseNet& net, const CorridorSpec& spec, const ExactQ& q_pi);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t episodes = 0;
};

/// Discounted return of taking `action` in `state` and following `policy` afterwards.
MonteCarloEstimate monte_carlo_q(const CorridorSpec& spec, const PolicyTable& policy, StateId state,
                                 ActionId action, std::size_t episodes, std::uint64_t seed,
                                 std::size_t max_steps = 100000);

/// Greedy (lowest-index tie-break) policy read off a Q-network.
PolicyTable greedy_policy(const DenseNet& net, const CorridorSpec& spec);

/// Exact discounted return of the network's greedy policy from the start state.
double greedy_start_value(const DenseNet& net, const CorridorSpec& spec, double tol = 1e-12);

/// CSV with columns state,action,q_star,q_pi,v_pi,a_pi.
std::string oracle_csv(const ExactQ& q_star, const ExactQ& q_pi, const PolicyTable& policy);

}  // namespace duel
