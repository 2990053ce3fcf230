#include "duel/experiment.hpp"

#include "duel/checkpoint.hpp"
#include "duel/corridor.hpp"
#include "duel/dueling.hpp"
#include "duel/error.hpp"
#include "duel/io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifndef DUEL_VERSION
#define DUEL_VERSION "unknown"
#endif

namespace duel {

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

std::string_view to_string(RunMode mode) { return mode == RunMode::PolicyEval ? "policy-eval" : "control"; }
std::string_view to_string(Architecture arch) { return arch == Architecture::Single ? "single" : "duel"; }

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view value) {
    std::vector<std::string_view> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto end = comma == std::string_view::npos ? value.size() : comma;
        const auto item = trim(value.substr(start, end - start));
        if (!item.empty()) items.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return items;
}

double parse_real(std::string_view v, std::size_t line) {
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError(line, "expected a real number, got '" + std::string(v) + "'");
    return x;
}

std::uint64_t parse_uint(std::string_view v, std::size_t line) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(line, "expected a non-negative integer, got '" + std::string(v) + "'");
    return x;
}

std::size_t parse_positive(std::string_view v, std::size_t line) {
    const auto x = parse_uint(v, line);
    if (x == 0) throw ConfigError(line, "value must be positive");
    return static_cast<std::size_t>(x);
}

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"mode",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             if (v == "policy-eval") c.mode = RunMode::PolicyEval;
             else if (v == "control") c.mode = RunMode::Control;
             else throw ConfigError(line, "mode must be policy-eval or control");
         }},
        {"architectures",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             c.architectures.clear();
             for (auto item : split_list(v)) {
                 if (item == "single") c.architectures.push_back(Architecture::Single);
                 else if (item == "duel") c.architectures.push_back(Architecture::Duel);
                 else throw ConfigError(line, "unknown architecture '" + std::string(item) + "'");
             }
             if (c.architectures.empty()) throw ConfigError(line, "no architectures given");
         }},
        {"aggregator",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             try {
                 c.aggregator = parse_aggregator(v);
             } catch (const InvalidSpec& e) {
                 throw ConfigError(line, e.what());
             }
         }},
        {"n_actions",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             c.n_actions.clear();
             for (auto item : split_list(v)) {
                 const auto n = parse_uint(item, line);
                 if (n != 5 && n != 10 && n != 20)
                     throw ConfigError(line, "n_actions must be 5, 10 or 20, got " + std::to_string(n));
                 c.n_actions.push_back(static_cast<std::size_t>(n));
             }
             if (c.n_actions.empty()) throw ConfigError(line, "no action counts given");
         }},
        {"seeds",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             try {
                 c.seeds = parse_seed_list(v);
             } catch (const ConfigError& e) {
                 throw ConfigError(line, e.what());
             }
         }},
        {"gamma", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.gamma = parse_real(v, l); }},
        {"goal_reward",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.goal_reward = parse_real(v, l); }},
        {"distractor_reward",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.distractor_reward = parse_real(v, l); }},
        {"solver_tolerance",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.solver_tolerance = parse_real(v, l); }},
        {"learning_rate",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.learning_rate = parse_real(v, l); }},
        {"clip_norm", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.clip_norm = parse_real(v, l); }},
        {"updates",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) {
             c.updates = static_cast<std::size_t>(parse_uint(v, l));
         }},
        {"behavior_epsilon",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.behavior_epsilon = parse_real(v, l); }},
        {"sync_period",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sync_period = parse_positive(v, l); }},
        {"minibatch",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.minibatch = parse_positive(v, l); }},
        {"replay",
         [](ExperimentConfig& c, std::string_view v, std::size_t line) {
             if (v == "uniform") c.replay = ReplayKind::Uniform;
             else if (v == "prioritized") c.replay = ReplayKind::Prioritized;
             else throw ConfigError(line, "replay must be uniform or prioritized");
         }},
        {"replay_capacity",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.replay_capacity = parse_positive(v, l); }},
        {"priority_alpha",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.priority_alpha = parse_real(v, l); }},
        {"exploration_start",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.exploration_start = parse_real(v, l); }},
        {"exploration_end",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.exploration_end = parse_real(v, l); }},
        {"exploration_fraction",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.exploration_fraction = parse_real(v, l); }},
        {"learning_starts",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) {
             c.learning_starts = static_cast<std::size_t>(parse_uint(v, l));
         }},
        {"max_episode_steps",
         [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.max_episode_steps = parse_positive(v, l); }},
        {"out", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.out_dir = std::string(v); }},
        {"jobs", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.jobs = parse_positive(v, l); }},
    };
    return table;
}

void check_range(bool ok, std::string_view key, std::string_view what, const std::map<std::string, std::size_t, std::less<>>& lines) {
    if (ok) return;
    const auto it = lines.find(key);
    throw ConfigError(it == lines.end() ? 0 : it->second, std::string(key) + " " + std::string(what));
}

}  // namespace

double ExperimentConfig::effective_learning_rate() const {
    if (learning_rate) return *learning_rate;
    return mode == RunMode::PolicyEval ? kPolicyEvalLearningRate : kControlLearningRate;
}

std::size_t ExperimentConfig::effective_updates() const {
    if (updates) return *updates;
    return mode == RunMode::PolicyEval ? kPolicyEvalUpdates : kControlSteps;
}

CorridorOptions ExperimentConfig::corridor_options() const {
    return {.gamma = gamma, .goal_reward = goal_reward, .distractor_reward = distractor_reward};
}

TrainConfig ExperimentConfig::train_config(std::uint64_t seed) const {
    return {.learning_rate = effective_learning_rate(),
            .clip_norm = clip_norm,
            .sync_period = sync_period,
            .seed = seed,
            .updates = effective_updates(),
            .minibatch = minibatch};
}

ControlConfig ExperimentConfig::control_config(std::uint64_t seed) const {
    ControlConfig c;
    c.train = train_config(seed);
    c.epsilon_start = exploration_start;
    c.epsilon_end = exploration_end;
    c.epsilon_fraction = exploration_fraction;
    c.learning_starts = learning_starts;
    c.max_episode_steps = max_episode_steps;
    c.replay = replay;
    c.replay_capacity = replay_capacity;
    c.priority_alpha = priority_alpha;
    return c;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    auto join = [](const auto& items, auto&& render) {
        std::string s;
        for (const auto& item : items) {
            if (!s.empty()) s += ',';
            s += render(item);
        }
        return s;
    };
    out << "mode = " << to_string(mode) << '\n'
        << "architectures = " << join(architectures, [](Architecture a) { return std::string(to_string(a)); }) << '\n'
        << "aggregator = " << to_string(aggregator) << '\n'
        << "n_actions = " << join(n_actions, [](std::size_t n) { return std::to_string(n); }) << '\n'
        << "seeds = " << join(seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
        << "gamma = " << fmt(gamma) << '\n'
        << "goal_reward = " << fmt(goal_reward) << '\n'
        << "distractor_reward = " << fmt(distractor_reward) << '\n'
        << "solver_tolerance = " << fmt(solver_tolerance) << '\n'
        << "learning_rate = " << fmt(effective_learning_rate()) << '\n'
        << "clip_norm = " << fmt(clip_norm) << '\n'
        << "updates = " << effective_updates() << '\n'
        << "behavior_epsilon = " << fmt(behavior_epsilon) << '\n'
        << "sync_period = " << sync_period << '\n'
        << "minibatch = " << minibatch << '\n'
        << "replay = " << (replay == ReplayKind::Uniform ? "uniform" : "prioritized") << '\n'
        << "replay_capacity = " << replay_capacity << '\n'
        << "priority_alpha = " << fmt(priority_alpha) << '\n'
        << "exploration_start = " << fmt(exploration_start) << '\n'
        << "exploration_end = " << fmt(exploration_end) << '\n'
        << "exploration_fraction = " << fmt(exploration_fraction) << '\n'
        << "learning_starts = " << learning_starts << '\n'
        << "max_episode_steps = " << max_episode_steps << '\n';
    return out.str();
}

void ExperimentConfig::validate() const {
    const std::map<std::string, std::size_t, std::less<>> none;
    check_range(gamma >= 0.0 && gamma < 1.0, "gamma", "must lie in [0, 1)", none);
    check_range(solver_tolerance > 0.0, "solver_tolerance", "must be positive", none);
    check_range(effective_learning_rate() >= 0.0, "learning_rate", "must be non-negative", none);
    check_range(clip_norm > 0.0, "clip_norm", "must be positive", none);
    check_range(behavior_epsilon >= 0.0 && behavior_epsilon <= 1.0, "behavior_epsilon", "must lie in [0, 1]", none);
    check_range(priority_alpha >= 0.0, "priority_alpha", "must be non-negative", none);
    check_range(exploration_start >= 0.0 && exploration_start <= 1.0, "exploration_start", "must lie in [0, 1]", none);
    check_range(exploration_end >= 0.0 && exploration_end <= 1.0, "exploration_end", "must lie in [0, 1]", none);
    check_range(exploration_fraction >= 0.0 && exploration_fraction <= 1.0, "exploration_fraction",
                "must lie in [0, 1]", none);
    if (architectures.empty() || n_actions.empty() || seeds.empty())
        throw ConfigError(0, "architectures, n_actions and seeds must be non-empty");
    if (out_dir.empty()) throw ConfigError(0, "out must name a directory");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    for (auto item : split_list(text)) {
        if (const auto dots = item.find(".."); dots != std::string_view::npos) {
            const auto lo = parse_uint(trim(item.substr(0, dots)), 0);
            const auto hi = parse_uint(trim(item.substr(dots + 2)), 0);
            if (hi < lo) throw ConfigError(0, "empty seed range '" + std::string(item) + "'");
            for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        } else {
            seeds.push_back(parse_uint(item, 0));
        }
    }
    if (seeds.empty()) throw ConfigError(0, "no seeds given");
    return seeds;
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig config;
    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
        if (const auto prev = seen.find(key); prev != seen.end())
            throw ConfigError(line_no, "duplicate key '" + std::string(key) + "' (first set on line " +
                                           std::to_string(prev->second) + ")");
        if (value.empty()) throw ConfigError(line_no, "missing value for '" + std::string(key) + "'");
        it->second(config, value, line_no);
        seen.emplace(std::string(key), line_no);
    }

    // Range checks that need the line of the offending key.
    auto at = [&](std::string_view key) {
        const auto it = seen.find(key);
        return it == seen.end() ? std::size_t{0} : it->second;
    };
    try {
        config.validate();
    } catch (const ConfigError& e) {
        if (e.line() != 0) throw;
        const std::string msg = e.what();
        const auto space = msg.find(' ');
        const std::string key = msg.substr(0, space);
        throw ConfigError(at(key), msg);
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string run_stem(RunMode mode, Architecture arch, std::size_t n_actions, std::uint64_t seed) {
    return std::string(mode == RunMode::PolicyEval ? "se_" : "control_") + std::string(to_string(arch)) + "_" +
           std::to_string(n_actions) + "a_seed" + std::to_string(seed);
}

namespace {

struct Oracle {
    CorridorSpec spec;
    ExactQ q_star;
    PolicyTable policy;
    ExactQ q_pi;
};

DenseNet build_net(Architecture arch, const ExperimentConfig& config, std::size_t n_actions, std::uint64_t seed) {
    return arch == Architecture::Duel ? build_dueling(kCorridorCells, n_actions, seed, config.aggregator)
                                      : build_single_stream(kCorridorCells, n_actions, seed);
}

std::string control_csv(const Oracle& oracle, const AgentState& agent, Architecture arch, std::uint64_t seed) {
    const double v_star = oracle.q_star.q.row(static_cast<Eigen::Index>(oracle.spec.start)).maxCoeff();
    const double v = greedy_start_value(agent.online, oracle.spec);
    std::ostringstream out;
    out.precision(17);
    out << "seed,arch,n_actions,greedy_start_value,v_star,relative_gap,steps,updates,syncs,episodes\n";
    out << seed << ',' << to_string(arch) << ',' << oracle.spec.n_actions << ',' << v << ',' << v_star << ','
        << std::abs(v - v_star) / std::abs(v_star) << ',' << agent.steps << ',' << agent.updates << ','
        << agent.syncs << ',' << agent.episodes << '\n';
    return out.str();
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);

    std::map<std::size_t, Oracle> oracles;
    for (std::size_t n : config.n_actions) {
        if (oracles.count(n)) continue;
        Oracle o;
        o.spec = build_corridor(n, config.corridor_options());
        o.q_star = solve_q_star(o.spec, config.solver_tolerance);
        o.policy = epsilon_greedy_policy(o.q_star, config.behavior_epsilon);
        o.q_pi = solve_q_pi(o.spec, o.policy, config.solver_tolerance);
        oracles.emplace(n, std::move(o));
    }

    std::vector<RunOutput> jobs;
    for (std::size_t n : config.n_actions)
        for (Architecture arch : config.architectures)
            for (std::uint64_t seed : config.seeds) {
                RunOutput job;
                job.arch = arch;
                job.n_actions = n;
                job.seed = seed;
                const std::string stem = run_stem(config.mode, arch, n, seed);
                job.csv = config.out_dir / (stem + ".csv");
                job.checkpoint = config.out_dir / (stem + ".ckpt");
                jobs.push_back(std::move(job));
            }

    auto execute = [&](RunOutput& job) {
        const auto t0 = std::chrono::steady_clock::now();
        const Oracle& oracle = oracles.at(job.n_actions);
        DenseNet net = build_net(job.arch, config, job.n_actions, job.seed);
        if (config.mode == RunMode::PolicyEval) {
            const SECurve curve =
                train_policy_eval(oracle.spec, oracle.policy, net, config.train_config(job.seed), oracle.q_pi);
            write_file_atomic(job.csv, curve.to_csv());
            save_checkpoint(net, job.checkpoint);
        } else {
            const ControlConfig cc = config.control_config(job.seed);
            const AgentState agent = train_ddqn(oracle.spec, cc, make_agent(std::move(net), cc));
            write_file_atomic(job.csv, control_csv(oracle, agent, job.arch, job.seed));
            save_checkpoint(agent.online, job.checkpoint);
        }
        job.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                execute(jobs[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const std::size_t threads = std::min(config.jobs, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    RunSummary summary;
    const std::string canonical = config.canonical();
    summary.config_hash = fnv1a64(canonical);
    summary.outputs = std::move(jobs);
    summary.manifest = config.out_dir / "manifest.csv";

    std::ostringstream manifest;
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(summary.config_hash));
    manifest << "# config_hash=" << hash << '\n'
             << "# version=" << DUEL_VERSION << '\n'
             << "# mode=" << to_string(config.mode) << '\n'
             << "file,checkpoint,arch,n_actions,seed,wall_seconds\n";
    for (const RunOutput& o : summary.outputs)
        manifest << o.csv.filename().string() << ',' << o.checkpoint.filename().string() << ','
                 << to_string(o.arch) << ',' << o.n_actions << ',' << o.seed << ',' << o.wall_seconds << '\n';
    write_file_atomic(summary.manifest, manifest.str());
    return summary;
}

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

struct CurveFile {
    std::string arch;
    std::size_t n_actions = 0;
    std::vector<std::size_t> updates;
    std::vector<double> se;
};

CurveFile read_curve(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("update,se,arch,n_actions,seed", 0) != 0)
        throw IoError(path.string() + ": not an SE curve file");
    CurveFile curve;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw IoError(path.string() + ":" + std::to_string(row) + ": expected 5 columns");
        try {
            curve.updates.push_back(static_cast<std::size_t>(std::stoull(cells[0])));
            curve.se.push_back(std::stod(cells[1]));
            const std::size_t n = static_cast<std::size_t>(std::stoull(cells[3]));
            if (curve.arch.empty()) {
                curve.arch = cells[2];
                curve.n_actions = n;
            } else if (curve.arch != cells[2] || curve.n_actions != n) {
                throw IoError(path.string() + ":" + std::to_string(row) + ": mixed groups in one file");
            }
        } catch (const std::logic_error&) {
            throw IoError(path.string() + ":" + std::to_string(row) + ": malformed number");
        }
    }
    if (curve.updates.empty()) throw IoError(path.string() + ": empty curve");
    return curve;
}

bool wildcard_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0, star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

}  // namespace

std::vector<std::filesystem::path> aggregate_curves(const std::vector<std::filesystem::path>& inputs,
                                                    const std::filesystem::path& out_dir) {
    if (inputs.empty()) throw DomainError("aggregate needs at least one curve");
    std::map<std::pair<std::string, std::size_t>, std::vector<CurveFile>> groups;
    for (const auto& path : inputs) {
        CurveFile c = read_curve(path);
        groups[{c.arch, c.n_actions}].push_back(std::move(c));
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [key, curves] : groups) {
        for (const CurveFile& c : curves)
            if (c.updates != curves.front().updates)
                throw DomainError("curves for " + key.first + "/" + std::to_string(key.second) +
                                  " have misaligned update indices");
        std::ostringstream out;
        out.precision(17);
        out << "update,median_se,arch,n_actions,seeds\n";
        for (std::size_t i = 0; i < curves.front().updates.size(); ++i) {
            std::vector<double> values;
            for (const CurveFile& c : curves) values.push_back(c.se[i]);
            out << curves.front().updates[i] << ',' << median(values) << ',' << key.first << ',' << key.second
                << ',' << curves.size() << '\n';
        }
        const auto path = out_dir / ("median_" + key.first + "_" + std::to_string(key.second) + "a.csv");
        write_file_atomic(path, out.str());
        written.push_back(path);
    }
    return written;
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    const std::filesystem::path p(pattern);
    std::filesystem::path dir = p.parent_path();
    if (dir.empty()) dir = ".";
    const std::string leaf = p.filename().string();
    std::vector<std::filesystem::path> out;
    if (std::filesystem::is_directory(p)) {
        for (const auto& entry : std::filesystem::directory_iterator(p))
            if (entry.is_regular_file() && wildcard_match("se_*.csv", entry.path().filename().string()))
                out.push_back(entry.path());
    } else if (std::filesystem::is_directory(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_regular_file() && wildcard_match(leaf, entry.path().filename().string()))
                out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

double improvement_metric(const ScoreRecord& rec) {
    const double denom = std::max(rec.human, rec.baseline) - rec.random;
    if (!(denom > 0.0))
        throw DomainError("max(human, baseline) must exceed the random score");
    return (rec.agent - rec.baseline) / denom;
}

std::string saliency_csv(const DenseNet& net) {
    if (net.topology != Topology::Dueling) throw UnsupportedTopology("saliency requires a dueling checkpoint");
    const CorridorSpec spec = build_corridor(net.output_dim() == 10 || net.output_dim() == 20 ? net.output_dim() : 5);
    if (net.input_dim() != spec.cell_count())
        throw_shape("saliency checkpoint input", spec.cell_count(), net.input_dim());
    std::ostringstream out;
    out.precision(17);
    out << "state,value_saliency,advantage_saliency\n";
    for (StateId s = 0; s < spec.cell_count(); ++s) {
        const Saliency sal = saliency(net, encode_state(spec, s));
        const auto i = static_cast<Eigen::Index>(s);
        out << s << ',' << sal.value(i) << ',' << sal.advantage(i) << '\n';
    }
    return out.str();
}

void dump_saliency(const std::filesystem::path& checkpoint, const std::filesystem::path& output) {
    write_file_atomic(output, saliency_csv(load_checkpoint(checkpoint)));
}

std::string oracle_dump(std::size_t n_actions, double epsilon, double tol, const CorridorOptions& options) {
    const CorridorSpec spec = build_corridor(n_actions, options);
    const ExactQ q_star = solve_q_star(spec, tol);
    const PolicyTable policy = epsilon_greedy_policy(q_star, epsilon);
    const ExactQ q_pi = solve_q_pi(spec, policy, tol);
    return oracle_csv(q_star, q_pi, policy);
}

}  // namespace duel
