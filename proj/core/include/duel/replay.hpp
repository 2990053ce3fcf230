#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace duel {

inline constexpr std::size_t kTerminalState = std::numeric_limits<std::size_t>::max();

/// One experience tuple. A terminal transition stores `kTerminalState` as its successor.
struct Transition {
    std::size_t s = 0;
    std::size_t a = 0;
    double r = 0.0;
    std::size_t s_next = kTerminalState;
    bool done = true;

    bool operator==(const Transition&) const = default;
};

struct SampledTransition {
    std::size_t index = 0;
    Transition transition;
};

struct WeightedTransition {
    std::size_t index = 0;
    Transition transition;
    double weight = 1.0;
};

/// Fixed-capacity FIFO store sampled uniformly with replacement.
class UniformBuffer {
public:
    explicit UniformBuffer(std::size_t capacity);

    void push(const Transition& t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t index) const;
    /// Stored transitions, oldest first.
    std::vector<Transition> contents() const;

    std::vector<SampledTransition> sample(std::size_t batch, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> items_;
};

/// Rank-based prioritized replay: P(i) = rank(i)^-alpha / sum_k rank(k)^-alpha, ranks taken by
/// descending priority. New transitions enter with the current maximum priority.
class PrioritizedBuffer {
public:
    static constexpr double kPriorityFloor = 1e-6;

    PrioritizedBuffer(std::size_t capacity, double alpha);

    void push(const Transition& t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    double alpha() const { return alpha_; }
    const Transition& at(std::size_t index) const;
    double priority(std::size_t index) const;
    double max_priority() const;
    std::vector<Transition> contents() const;

    /// Sampling probability of every slot. Equal priorities share a rank.
    std::vector<double> sampling_distribution() const;

    /// (N P(i))^-beta normalised by the largest weight over the whole buffer.
    std::vector<double> importance_weights(double beta) const;

    std::vector<WeightedTransition> sample(std::size_t batch, double beta, std::mt19937_64& rng) const;

    /// priority <- |delta| + kPriorityFloor.
    void update_priorities(const std::vector<std::size_t>& indices, const std::vector<double>& td_abs);

    /// Sets a raw priority, bypassing the floor. Meant for tests and debugging dumps.
    void set_priority(std::size_t index, double priority);

private:
    std::vector<std::size_t> rank_of_slots() const;

    std::size_t capacity_;
    double alpha_;
    std::size_t cursor_ = 0;
    std::uint64_t next_seq_ = 0;
    std::vector<Transition> items_;
    std::vector<double> priorities_;
    std::vector<std::uint64_t> seq_;
};

/// Importance-sampling exponent schedule, linear from 0.5 at step 0 to 1.0 at `total_steps`.
double anneal_beta(std::size_t step, std::size_t total_steps);

}  // namespace duel
