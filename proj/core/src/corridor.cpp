#include "duel/corridor.hpp"

#include "duel/aggregate.hpp"
#include "duel/error.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace duel {

namespace {

constexpr std::size_t kVerticalCells = 10;
constexpr std::size_t kHorizontalCells = 50;
constexpr std::size_t kMaxSweeps = 10'000'000;
constexpr int kDelta[kPrimitiveActions][2] = {{0, 1}, {0, -1}, {-1, 0}, {1, 0}, {0, 0}};

ActionId primitive(ActionId a) { return a < kPrimitiveActions ? a : kNoOp; }

void check_state(const CorridorSpec& spec, StateId s) {
    if (s >= spec.state_count())
        throw ContractError("state " + std::to_string(s) + " does not exist");
}

/// Expected next-state value under `policy`, zero for terminals.
Vector policy_state_values(const Matrix& q, const PolicyTable& policy) {
    return (q.array() * policy.probs.array()).rowwise().sum().matrix();
}

Vector greedy_state_values(const Matrix& q) { return q.rowwise().maxCoeff(); }

/// One application of the Bellman backup given a state-value vector over non-terminal cells.
Matrix backup(const CorridorSpec& spec, const Vector& next_values) {
    const auto cells = static_cast<Eigen::Index>(spec.cell_count());
    const auto actions = static_cast<Eigen::Index>(spec.n_actions);
    Matrix out(cells, actions);
    for (Eigen::Index s = 0; s < cells; ++s) {
        for (Eigen::Index a = 0; a < actions; ++a) {
            const StateId next = spec.next_state(static_cast<StateId>(s), static_cast<ActionId>(a));
            out(s, a) = spec.is_terminal(next)
                            ? spec.arrival_reward(next)
                            : spec.gamma * next_values(static_cast<Eigen::Index>(next));
        }
    }
    return out;
}

}  // namespace

double CorridorSpec::arrival_reward(StateId s) const {
    if (s == goal) return goal_reward;
    if (s == distractor) return distractor_reward;
    return 0.0;
}

StateId CorridorSpec::next_state(StateId s, ActionId a) const {
    if (s >= cell_count()) throw ContractError("no transitions out of terminal state " + std::to_string(s));
    if (a >= n_actions) throw ContractError("action " + std::to_string(a) + " out of range");
    return successor[s][primitive(a)];
}

CorridorSpec build_corridor(std::size_t n_actions, const CorridorOptions& options) {
    if (n_actions != 5 && n_actions != 10 && n_actions != 20)
        throw InvalidSpec("corridor supports 5, 10 or 20 actions, got " + std::to_string(n_actions));
    if (!(options.gamma >= 0.0 && options.gamma < 1.0))
        throw InvalidSpec("discount must lie in [0, 1)");

    CorridorSpec spec;
    spec.n_actions = n_actions;
    spec.gamma = options.gamma;
    spec.goal_reward = options.goal_reward;
    spec.distractor_reward = options.distractor_reward;

    const int top = static_cast<int>(kVerticalCells) - 1;
    const int right = static_cast<int>(kHorizontalCells);
    for (int y = 0; y <= top; ++y) spec.coords.push_back({0, y});
    for (int x = 1; x <= right; ++x) spec.coords.push_back({x, top});
    for (int y = top + 1; y <= top + static_cast<int>(kVerticalCells); ++y)
        spec.coords.push_back({right, y});
    spec.coords.push_back({right, top + static_cast<int>(kVerticalCells) + 1});  // goal
    spec.coords.push_back({-1, 0});                                             // distractor

    std::map<std::array<int, 2>, StateId> at;
    for (StateId s = 0; s < spec.coords.size(); ++s) at[spec.coords[s]] = s;

    spec.successor.resize(kCorridorCells);
    for (StateId s = 0; s < kCorridorCells; ++s) {
        for (ActionId a = 0; a < kPrimitiveActions; ++a) {
            const std::array<int, 2> target{spec.coords[s][0] + kDelta[a][0],
                                            spec.coords[s][1] + kDelta[a][1]};
            const auto it = at.find(target);
            spec.successor[s][a] = it == at.end() ? s : it->second;
        }
    }
    return spec;
}

StepResult step(const CorridorSpec& spec, StateId state, ActionId action) {
    check_state(spec, state);
    if (spec.is_terminal(state))
        throw ContractError("cannot step from terminal state " + std::to_string(state));
    const StateId next = spec.next_state(state, action);
    return {next, spec.arrival_reward(next), spec.is_terminal(next)};
}

Vector encode_state(const CorridorSpec& spec, StateId state) {
    check_state(spec, state);
    Vector x = Vector::Zero(static_cast<Eigen::Index>(spec.cell_count()));
    if (!spec.is_terminal(state)) x(static_cast<Eigen::Index>(state)) = 1.0;
    return x;
}

void PolicyTable::validate() const {
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
        if ((probs.row(s).array() < 0.0).any() || !probs.row(s).allFinite())
            throw DomainError("policy row " + std::to_string(s) + " has a negative entry");
        if (std::abs(probs.row(s).sum() - 1.0) > 1e-12)
            throw DomainError("policy row " + std::to_string(s) + " does not sum to 1");
    }
}

bool PolicyTable::operator==(const PolicyTable& other) const {
    return probs.rows() == other.probs.rows() && probs.cols() == other.probs.cols() &&
           (probs.array() == other.probs.array()).all();
}

ExactQ solve_q_star(const CorridorSpec& spec, double tol) {
    if (!(tol > 0.0)) throw DomainError("solver tolerance must be positive");
    if (!(spec.gamma < 1.0)) throw DomainError("value iteration needs gamma < 1");
    ExactQ out;
    out.gamma = spec.gamma;
    out.provenance = Provenance::Optimal;
    out.q = Matrix::Zero(static_cast<Eigen::Index>(spec.cell_count()),
                         static_cast<Eigen::Index>(spec.n_actions));
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Matrix next = backup(spec, greedy_state_values(out.q));
        out.residual = (next - out.q).cwiseAbs().maxCoeff();
        if (out.residual < tol) return out;
        out.q = std::move(next);
    }
    throw NumericError("value iteration did not converge");
}

PolicyTable epsilon_greedy_policy(const ExactQ& q, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
    const Eigen::Index actions = q.q.cols();
    PolicyTable pi;
    pi.probs = Matrix::Constant(q.q.rows(), actions, epsilon / static_cast<double>(actions));
    for (Eigen::Index s = 0; s < q.q.rows(); ++s) {
        const Vector row = q.q.row(s).transpose();
        pi.probs(s, argmax_lowest(row)) += 1.0 - epsilon;
    }
    return pi;
}

ExactQ solve_q_pi(const CorridorSpec& spec, const PolicyTable& policy, double tol) {
    if (!(tol > 0.0)) throw DomainError("solver tolerance must be positive");
    if (policy.probs.rows() != static_cast<Eigen::Index>(spec.cell_count()) ||
        policy.n_actions() != spec.n_actions)
        throw ShapeError("policy table does not match the corridor");
    policy.validate();
    ExactQ out;
    out.gamma = spec.gamma;
    out.provenance = Provenance::Policy;
    out.policy = policy;
    out.q = Matrix::Zero(policy.probs.rows(), policy.probs.cols());
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Matrix next = backup(spec, policy_state_values(out.q, policy));
        out.residual = (next - out.q).cwiseAbs().maxCoeff();
        if (out.residual < tol) return out;
        out.q = std::move(next);
    }
    throw NumericError("policy evaluation did not converge");
}

double bellman_residual(const CorridorSpec& spec, const ExactQ& q) {
    if (q.provenance == Provenance::Optimal)
        return (backup(spec, greedy_state_values(q.q)) - q.q).cwiseAbs().maxCoeff();
    if (!q.policy) throw ContractError("policy-evaluation table carries no policy");
    return (backup(spec, policy_state_values(q.q, *q.policy)) - q.q).cwiseAbs().maxCoeff();
}

AdvantageTable advantage_of(const ExactQ& q_pi, const PolicyTable& policy) {
    if (q_pi.provenance != Provenance::Policy || !q_pi.policy || !(*q_pi.policy == policy))
        throw ContractError("action values were not computed for this policy");
    AdvantageTable out;
    out.v = policy_state_values(q_pi.q, policy);
    out.a = q_pi.q.colwise() - out.v;
    return out;
}

double se_metric(const DenseNet& net, const CorridorSpec& spec, const ExactQ& q_pi) {
    if (net.output_dim() != static_cast<std::size_t>(q_pi.q.cols()))
        throw_shape("se_metric network output", q_pi.q.cols(), net.output_dim());
    double total = 0.0;
    for (StateId s = 0; s < spec.cell_count(); ++s) {
        const Vector q = predict(net, encode_state(spec, s));
        total += (q - q_pi.q.row(static_cast<Eigen::Index>(s)).transpose()).squaredNorm();
    }
    return total;
}

MonteCarloEstimate monte_carlo_q(const CorridorSpec& spec, const PolicyTable& policy, StateId state,
                                 ActionId action, std::size_t episodes, std::uint64_t seed,
                                 std::size_t max_steps) {
    if (episodes < 2) throw DomainError("Monte-Carlo estimate needs at least two episodes");
    policy.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Cumulative rows for inverse-CDF sampling.
    Matrix cdf = policy.probs;
    for (Eigen::Index s = 0; s < cdf.rows(); ++s)
        for (Eigen::Index a = 1; a < cdf.cols(); ++a) cdf(s, a) += cdf(s, a - 1);
    auto sample = [&](StateId s) {
        const double u = unit(rng) * cdf(static_cast<Eigen::Index>(s), cdf.cols() - 1);
        for (Eigen::Index a = 0; a + 1 < cdf.cols(); ++a)
            if (u < cdf(static_cast<Eigen::Index>(s), a)) return static_cast<ActionId>(a);
        return static_cast<ActionId>(cdf.cols() - 1);
    };

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        StateId s = state;
        ActionId a = action;
        double ret = 0.0;
        double discount = 1.0;
        for (std::size_t t = 0; t < max_steps; ++t) {
            const StepResult r = step(spec, s, a);
            ret += discount * r.reward;
            if (r.done) break;
            discount *= spec.gamma;
            s = r.next;
            a = sample(s);
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n), episodes};
}

PolicyTable greedy_policy(const DenseNet& net, const CorridorSpec& spec) {
    if (net.output_dim() != spec.n_actions)
        throw_shape("greedy_policy network output", spec.n_actions, net.output_dim());
    PolicyTable pi;
    pi.probs = Matrix::Zero(static_cast<Eigen::Index>(spec.cell_count()),
                            static_cast<Eigen::Index>(spec.n_actions));
    for (StateId s = 0; s < spec.cell_count(); ++s)
        pi.probs(static_cast<Eigen::Index>(s), argmax_lowest(predict(net, encode_state(spec, s)))) = 1.0;
    return pi;
}

double greedy_start_value(const DenseNet& net, const CorridorSpec& spec, double tol) {
    const PolicyTable pi = greedy_policy(net, spec);
    const ExactQ q = solve_q_pi(spec, pi, tol);
    const auto start = static_cast<Eigen::Index>(spec.start);
    return q.q.row(start).dot(pi.probs.row(start));
}

std::string oracle_csv(const ExactQ& q_star, const ExactQ& q_pi, const PolicyTable& policy) {
    const AdvantageTable adv = advantage_of(q_pi, policy);
    std::ostringstream out;
    out.precision(17);
    out << "state,action,q_star,q_pi,v_pi,a_pi\n";
    for (Eigen::Index s = 0; s < q_pi.q.rows(); ++s)
        for (Eigen::Index a = 0; a < q_pi.q.cols(); ++a)
            out << s << ',' << a << ',' << q_star.q(s, a) << ',' << q_pi.q(s, a) << ',' << adv.v(s)
                << ',' << adv.a(s, a) << '\n';
    return out.str();
}

}  // namespace duel
