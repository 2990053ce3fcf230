// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Criteria 5 and 8 train networks with the harness defaults and take a couple of minutes on
// one core. Set DUEL_ACCEPT_ONLY=3,4 (for example) to run a subset.

#include "duel/agents.hpp"
#include "duel/aggregate.hpp"
#include "duel/corridor.hpp"
#include "duel/dueling.hpp"
#include "duel/experiment.hpp"
#include "duel/io.hpp"
#include "duel/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace duel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

// ---------------------------------------------------------------------------------------------

Outcome oracle_validity() {
    double worst = 0.0;
    for (std::size_t n : {5u, 10u, 20u}) {
        const CorridorSpec spec = build_corridor(n);
        const ExactQ qs = solve_q_star(spec, 1e-10);
        const ExactQ qp = solve_q_pi(spec, epsilon_greedy_policy(qs, 0.001), 1e-10);
        worst = std::max({worst, bellman_residual(spec, qs), bellman_residual(spec, qp)});
    }

    const CorridorSpec spec = build_corridor(5);
    const PolicyTable pi = epsilon_greedy_policy(solve_q_star(spec, 1e-12), 0.001);
    const ExactQ qp = solve_q_pi(spec, pi, 1e-12);
    const std::vector<std::pair<StateId, ActionId>> probes{{0, kUp}, {0, kRight}, {1, kUp}, {35, kLeft}, {69, kDown}};
    double worst_z = 0.0;
    bool mc_ok = true;
    std::uint64_t seed = 1000;
    for (auto [s, a] : probes) {
        const auto mc = monte_carlo_q(spec, pi, s, a, 100000, seed++);
        const double exact = qp.q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        const double err = std::abs(mc.mean - exact);
        const double z = mc.std_error > 0.0 ? err / mc.std_error : (err == 0.0 ? 0.0 : INFINITY);
        worst_z = std::max(worst_z, z);
        mc_ok = mc_ok && z <= 3.0;
    }
    return {worst < 1e-10 && mc_ok,
            fmt("max Bellman residual %.2e (< 1e-10); Monte-Carlo worst |z| %.2f over %zu probes x 1e5 rollouts (<= 3)",
                worst, worst_z, probes.size())};
}

Outcome advantage_identity() {
    double worst = 0.0;
    for (std::size_t n : {5u, 10u, 20u}) {
        const CorridorSpec spec = build_corridor(n);
        const PolicyTable pi = epsilon_greedy_policy(solve_q_star(spec, 1e-10), 0.001);
        const AdvantageTable adv = advantage_of(solve_q_pi(spec, pi, 1e-10), pi);
        for (Eigen::Index s = 0; s < 70; ++s) worst = std::max(worst, std::abs(pi.probs.row(s).dot(adv.a.row(s))));
    }
    return {worst < 1e-9, fmt("max_s |sum_a pi(a|s) A(s,a)| = %.2e over 70 states x {5,10,20} actions (< 1e-9)", worst)};
}

// ||g - s f|| / max(||g||, ||s f||) over all parameters, where s scales the trunk layers of f.
double relative_error(const GradientSet& g, GradientSet f, double trunk_scale) {
    for (auto& layer : f.shared) {
        layer.weight *= trunk_scale;
        layer.bias *= trunk_scale;
    }
    const double scale = std::max(g.norm(), f.norm());
    f *= -1.0;
    f += g;
    return scale > 0.0 ? f.norm() / scale : f.norm();
}

Outcome gradient_exactness() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_single = 0.0, worst_duel = 0.0, worst_rescaled = 0.0;
    bool one_rescale = true;
    const int instances = 20;
    for (int i = 0; i < instances; ++i) {
        const std::size_t n = std::array<std::size_t, 3>{5, 10, 20}[static_cast<std::size_t>(i % 3)];
        for (bool duel : {false, true}) {
            DenseNet net = duel ? build_dueling(70, n, 500 + static_cast<std::uint64_t>(i))
                                : build_single_stream(70, n, 500 + static_cast<std::uint64_t>(i));
            for (auto* stack : {&net.shared, &net.value, &net.advantage})
                for (auto& layer : *stack)
                    for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = 0.1 * u(rng);
            Vector x(70), y(static_cast<Eigen::Index>(n));
            for (auto& v : x) v = u(rng);
            for (auto& v : y) v = u(rng);
            const auto loss = [&](const Vector& out) { return 0.5 * (out - y).squaredNorm(); };
            const auto fr = forward(net, x);
            const GradientSet fd = finite_diff_grad(net, x, loss);
            const auto exact = backward(net, fr.trace, fr.output - y, JunctionGrad::Exact);
            if (!duel) {
                worst_single = std::max(worst_single, relative_error(exact.params, fd, 1.0));
                continue;
            }
            worst_duel = std::max(worst_duel, relative_error(exact.params, fd, 1.0));
            const auto scaled = backward(net, fr.trace, fr.output - y, JunctionGrad::Rescaled);
            one_rescale = one_rescale && scaled.junction_rescales == 1;
            worst_rescaled = std::max(worst_rescaled, relative_error(scaled.params, fd, 1.0 / std::sqrt(2.0)));
        }
    }
    return {worst_single < 1e-6 && worst_duel < 1e-6 && worst_rescaled < 1e-6 && one_rescale,
            fmt("%d instances each; max relative error single %.2e, dueling %.2e, dueling with 1/sqrt(2) junction "
                "%.2e (< 1e-6); one rescale per pass: %s",
                instances, worst_single, worst_duel, worst_rescaled, one_rescale ? "yes" : "no")};
}

Outcome aggregator_algebra() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double shift = 0.0, mean_gap = 0.0;
    bool max_exact = true;
    double naive_min_change = INFINITY;
    for (int t = 0; t < 10000; ++t) {
        const Eigen::Index n = 2 + t % 19;
        Eigen::VectorXd adv(n);
        for (auto& a : adv) a = u(rng);
        const double v = u(rng);
        double c = u(rng);
        if (c == 0.0) c = 1.0;
        const Eigen::VectorXd shifted = adv.array() + c;
        const auto qm = aggregate(AggregatorKind::Mean, v, adv);
        shift = std::max(shift, (aggregate(AggregatorKind::Mean, v, shifted) - qm).cwiseAbs().maxCoeff());
        mean_gap = std::max(mean_gap, std::abs(qm.mean() - v));
        max_exact = max_exact && aggregate(AggregatorKind::Max, v, adv)(argmax_lowest(adv)) == v;
        const auto qn = aggregate(AggregatorKind::Naive, v, adv);
        naive_min_change =
            std::min(naive_min_change, (aggregate(AggregatorKind::Naive, v, shifted) - qn).cwiseAbs().maxCoeff());
    }
    return {shift <= 1e-12 && mean_gap <= 1e-12 && max_exact && naive_min_change > 0.0,
            fmt("mean shift error %.2e, |mean_a Q - V| %.2e (<= 1e-12); max Q(a*) == V bitwise: %s; naive smallest "
                "change under shift %.2e (> 0)",
                shift, mean_gap, max_exact ? "yes" : "no", naive_min_change)};
}

Outcome se_ordering() {
    const fs::path out = fs::temp_directory_path() / "duel_acceptance_se";
    fs::remove_all(out);
    ExperimentConfig config;  // harness defaults: 5 seeds, both architectures, 5/10/20 actions
    config.out_dir = out;
    const RunSummary summary = run_experiment(config);
    std::vector<fs::path> curves;
    for (const auto& o : summary.outputs) curves.push_back(o.csv);
    aggregate_curves(curves, out);

    auto final_median = [&](const std::string& arch, std::size_t n) {
        std::istringstream in(read_file(out / ("median_" + arch + "_" + std::to_string(n) + "a.csv")));
        std::string line, last;
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        return std::stod(last.substr(last.find(',') + 1));
    };
    std::vector<double> ratio;
    std::string detail;
    bool duel_wins = true;
    for (std::size_t n : {5u, 10u, 20u}) {
        const double s = final_median("single", n);
        const double d = final_median("duel", n);
        ratio.push_back(s / d);
        if (n != 5) duel_wins = duel_wins && d <= s;
        detail += fmt("%zu actions: single %.3g duel %.3g ratio %.3f; ", n, s, d, s / d);
    }
    const bool ordered = ratio[0] <= ratio[1] && ratio[1] <= ratio[2];
    const bool band = ratio[0] >= 0.5 && ratio[0] <= 2.0;
    fs::remove_all(out);
    return {duel_wins && ordered && band,
            detail + fmt("%zu seeds x %zu updates; duel <= single at 10/20: %s; ratio non-decreasing: %s; 5-action "
                         "ratio in [0.5, 2]: %s",
                         config.seeds.size(), config.effective_updates(), duel_wins ? "yes" : "no",
                         ordered ? "yes" : "no", band ? "yes" : "no")};
}

Outcome replay_statistics() {
    PrioritizedBuffer buf(100, 0.7);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (std::size_t i = 0; i < 100; ++i) {
        buf.push({i, 0, 0.0, kTerminalState, true});
        buf.set_priority(i, u(rng));
    }
    const auto p = buf.sampling_distribution();
    std::vector<double> freq(100, 0.0);
    const std::size_t draws = 1000000;
    for (const auto& s : buf.sample(draws, 0.5, rng)) freq[s.index] += 1.0 / static_cast<double>(draws);
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) worst = std::max(worst, std::abs(freq[i] - p[i]));

    const bool endpoints = anneal_beta(0, 12345) == 0.5 && anneal_beta(12345, 12345) == 1.0;
    bool bounded = true;
    for (double beta : {0.0, 0.5, 0.75, 1.0})
        for (double w : buf.importance_weights(beta)) bounded = bounded && w > 0.0 && w <= 1.0;
    PrioritizedBuffer flat(100, 0.7);
    for (std::size_t i = 0; i < 100; ++i) flat.push({i, 0, 0.0, kTerminalState, true});
    bool ones = true;
    for (double beta : {0.5, 1.0})
        for (const auto& s : flat.sample(1000, beta, rng)) ones = ones && s.weight == 1.0;
    return {worst <= 0.01 && endpoints && bounded && ones,
            fmt("max |freq - P| %.2e over 1e6 draws (<= 0.01); beta endpoints 0.5/1.0: %s; weights in (0,1]: %s; "
                "uniform-priority weights all 1: %s",
                worst, endpoints ? "yes" : "no", bounded ? "yes" : "no", ones ? "yes" : "no")};
}

Outcome overestimation() {
    std::mt19937_64 rng(17);
    const int trials = 1000;
    std::vector<double> diff;
    double dqn = 0.0, ddqn = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto r = overestimation_trial(10, 10, rng);
        diff.push_back(r.dqn_estimate - r.ddqn_estimate);
        dqn += r.dqn_estimate / trials;
        ddqn += r.ddqn_estimate / trials;
    }
    std::vector<double> means;
    std::uniform_int_distribution<std::size_t> pick(0, diff.size() - 1);
    for (int b = 0; b < 10000; ++b) {
        double m = 0.0;
        for (std::size_t k = 0; k < diff.size(); ++k) m += diff[pick(rng)];
        means.push_back(m / static_cast<double>(diff.size()));
    }
    std::sort(means.begin(), means.end());
    const double lower = means[static_cast<std::size_t>(0.01 * static_cast<double>(means.size()))];
    return {lower > 0.0, fmt("mean DQN-style %.4f vs DDQN-style %.4f; bootstrap 1%% lower bound of difference %.4f (> 0)",
                             dqn, ddqn, lower)};
}

Outcome control_convergence() {
    ExperimentConfig config = parse_config("mode = control\n");
    const CorridorSpec spec = build_corridor(5, config.corridor_options());
    const double v_star = solve_q_star(spec, 1e-12).q.row(static_cast<Eigen::Index>(spec.start)).maxCoeff();
    int hits = 0;
    std::string values;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ControlConfig cc = config.control_config(seed);
        const AgentState agent = train_ddqn(spec, cc, make_agent(build_dueling(70, 5, seed), cc));
        const double v = greedy_start_value(agent.online, spec);
        hits += std::abs(v - v_star) <= 0.05 * std::abs(v_star);
        values += fmt("%.4f ", v);
    }
    return {hits >= 4, fmt("V*(start) %.4f; greedy values [ %s] over %zu steps; %d/5 seeds within 5%% (need 4)", v_star,
                           values.c_str(), config.effective_updates(), hits)};
}

Outcome metric_utility() {
    const double a = improvement_metric({.agent = 100, .baseline = 50, .human = 80, .random = 0});
    const double b = improvement_metric({.agent = 50, .baseline = 50, .human = 80, .random = 0});
    const double c = improvement_metric({.agent = 20, .baseline = 10, .human = 5, .random = 0});
    return {a == 0.625 && b == 0.0 && c == 1.0, fmt("examples give %.17g, %.17g, %.17g (want 0.625, 0, 1)", a, b, c)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"oracle validity", oracle_validity},       {"advantage identity", advantage_identity},
        {"gradient exactness", gradient_exactness}, {"aggregator algebra", aggregator_algebra},
        {"SE ordering across action counts", se_ordering}, {"prioritized replay statistics", replay_statistics},
        {"double-Q overestimation", overestimation}, {"DDQN control convergence", control_convergence},
        {"improvement metric", metric_utility},
    };
    std::set<std::size_t> only;
    if (const char* env = std::getenv("DUEL_ACCEPT_ONLY")) {
        std::stringstream in(env);
        for (std::string item; std::getline(in, item, ',');) only.insert(std::stoul(item));
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::size_t id = i + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("criterion %zu %s  %s (%.1f s): %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
