#pragma once

#include "duel/agents.hpp"
#include "duel/aggregate.hpp"
#include "duel/error.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duel {

/// Config file problem, tagged with the 1-based line it was found on (0 when not line-specific).
class ConfigError : public Error {
public:
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class RunMode { PolicyEval, Control };
enum class Architecture { Single, Duel };

std::string_view to_string(RunMode mode);
std::string_view to_string(Architecture arch);

/// Everything a `run` needs. Parsed from a flat `key = value` file; see README for the keys.
struct ExperimentConfig {
    RunMode mode = RunMode::PolicyEval;
    std::vector<Architecture> architectures{Architecture::Single, Architecture::Duel};
    AggregatorKind aggregator = AggregatorKind::Mean;
    std::vector<std::size_t> n_actions{5, 10, 20};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    // Corridor.
    double gamma = 0.99;
    double goal_reward = 1.0;
    double distractor_reward = 0.5;
    double solver_tolerance = 1e-10;

    // Optimisation. An unset learning rate resolves per mode (see `effective_learning_rate`).
    std::optional<double> learning_rate;
    double clip_norm = 10.0;
    std::optional<std::size_t> updates;

    // Policy evaluation.
    double behavior_epsilon = 0.001;

    // Control.
    std::size_t sync_period = 500;
    std::size_t minibatch = 32;
    ReplayKind replay = ReplayKind::Uniform;
    std::size_t replay_capacity = 10000;
    double priority_alpha = 0.7;
    double exploration_start = 1.0;
    double exploration_end = 0.05;
    double exploration_fraction = 0.2;
    std::size_t learning_starts = 1000;
    std::size_t max_episode_steps = 500;

    std::filesystem::path out_dir = "results";
    std::size_t jobs = 1;

    double effective_learning_rate() const;
    std::size_t effective_updates() const;
    CorridorOptions corridor_options() const;
    TrainConfig train_config(std::uint64_t seed) const;
    ControlConfig control_config(std::uint64_t seed) const;

    /// Canonical `key = value` rendering with every field resolved; hashed into the manifest.
    std::string canonical() const;
    void validate() const;
};

inline constexpr double kPolicyEvalLearningRate = 5e-3;
inline constexpr std::size_t kPolicyEvalUpdates = 100000;
inline constexpr double kControlLearningRate = 5e-3;
inline constexpr std::size_t kControlSteps = 20000;

ExperimentConfig parse_config(std::string_view text);

/// Comma-separated seeds with optional inclusive ranges, e.g. `1..5` or `1,4,9..11`.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOutput {
    std::filesystem::path csv;
    std::filesystem::path checkpoint;
    Architecture arch = Architecture::Single;
    std::size_t n_actions = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

struct RunSummary {
    std::vector<RunOutput> outputs;
    std::filesystem::path manifest;
    std::uint64_t config_hash = 0;
};

/// Executes every (architecture, action count, seed) combination and writes one CSV and one
/// checkpoint per run plus `manifest.csv`. Files are written atomically.
RunSummary run_experiment(const ExperimentConfig& config);

/// Name stem shared by a run's CSV and checkpoint, e.g. `se_duel_10a_seed3`.
std::string run_stem(RunMode mode, Architecture arch, std::size_t n_actions, std::uint64_t seed);

/// Per-(arch, n_actions) median across seeds of SE curves read from `inputs`. Writes
/// `median_<arch>_<n>a.csv` into `out_dir` and returns the written paths.
std::vector<std::filesystem::path> aggregate_curves(const std::vector<std::filesystem::path>& inputs,
                                                    const std::filesystem::path& out_dir);

/// Files in the directory part of `pattern` whose names match its `*`/`?` wildcard, sorted.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

/// Median of a non-empty sample; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

struct ScoreRecord {
    double agent = 0.0;
    double baseline = 0.0;
    double human = 0.0;
    double random = 0.0;
};

/// (agent - baseline) / (max(human, baseline) - random). Throws DomainError if the denominator
/// is not positive.
double improvement_metric(const ScoreRecord& rec);

/// One row per corridor cell: state,value_saliency,advantage_saliency, read at the cell's own
/// one-hot input dimension.
std::string saliency_csv(const DenseNet& net);
void dump_saliency(const std::filesystem::path& checkpoint, const std::filesystem::path& output);

/// Exact Q*, Q^pi, V^pi, A^pi for the epsilon-greedy policy on the corridor.
std::string oracle_dump(std::size_t n_actions, double epsilon, double tol,
                        const CorridorOptions& options = {});

}  // namespace duel
