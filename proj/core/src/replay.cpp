#include "duel/replay.hpp"

#include "duel/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace duel {

namespace {

void check_transition(const Transition& t) {
    if (t.done != (t.s_next == kTerminalState))
        throw ContractError("transition done flag disagrees with its successor state");
}

/// Slots ordered oldest first.
template <typename T>
std::vector<T> in_order(const std::vector<T>& items, std::size_t cursor, std::size_t capacity) {
    if (items.size() < capacity) return items;
    std::vector<T> out;
    out.reserve(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) out.push_back(items[(cursor + k) % items.size()]);
    return out;
}

std::size_t draw(const std::vector<double>& cdf, std::uniform_real_distribution<double>& unit,
                 std::mt19937_64& rng) {
    const double u = unit(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

UniformBuffer::UniformBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidSpec("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void UniformBuffer::push(const Transition& t) {
    check_transition(t);
    if (items_.size() < capacity_) {
        items_.push_back(t);
    } else {
        items_[cursor_] = t;
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& UniformBuffer::at(std::size_t index) const {
    if (index >= items_.size()) throw ContractError("replay index out of range");
    return items_[index];
}

std::vector<Transition> UniformBuffer::contents() const { return in_order(items_, cursor_, capacity_); }

std::vector<SampledTransition> UniformBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
    if (items_.empty()) throw ContractError("cannot sample from an empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<SampledTransition> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t i = pick(rng);
        out.push_back({i, items_[i]});
    }
    return out;
}

PrioritizedBuffer::PrioritizedBuffer(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha) {
    if (capacity == 0) throw InvalidSpec("replay capacity must be positive");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidSpec("priority exponent must be >= 0");
}

void PrioritizedBuffer::push(const Transition& t) {
    check_transition(t);
    const double p = items_.empty() ? 1.0 : max_priority();
    if (items_.size() < capacity_) {
        items_.push_back(t);
        priorities_.push_back(p);
        seq_.push_back(next_seq_++);
    } else {
        items_[cursor_] = t;
        priorities_[cursor_] = p;
        seq_[cursor_] = next_seq_++;
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& PrioritizedBuffer::at(std::size_t index) const {
    if (index >= items_.size()) throw ContractError("replay index out of range");
    return items_[index];
}

double PrioritizedBuffer::priority(std::size_t index) const {
    if (index >= items_.size()) throw ContractError("replay index out of range");
    return priorities_[index];
}

double PrioritizedBuffer::max_priority() const {
    if (priorities_.empty()) return 1.0;
    return *std::max_element(priorities_.begin(), priorities_.end());
}

std::vector<Transition> PrioritizedBuffer::contents() const {
    return in_order(items_, cursor_, capacity_);
}

std::vector<std::size_t> PrioritizedBuffer::rank_of_slots() const {
    std::vector<std::size_t> order(items_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (priorities_[a] != priorities_[b]) return priorities_[a] > priorities_[b];
        return seq_[a] < seq_[b];
    });
    // Competition ranking: a run of equal priorities takes the rank of its first member.
    std::vector<std::size_t> rank(items_.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const bool tied = pos > 0 && priorities_[order[pos]] == priorities_[order[pos - 1]];
        rank[order[pos]] = tied ? rank[order[pos - 1]] : pos + 1;
    }
    return rank;
}

std::vector<double> PrioritizedBuffer::sampling_distribution() const {
    if (items_.empty()) throw ContractError("sampling distribution of an empty buffer");
    const std::vector<std::size_t> rank = rank_of_slots();
    std::vector<double> p(items_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::pow(static_cast<double>(rank[i]), -alpha_);
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

std::vector<double> PrioritizedBuffer::importance_weights(double beta) const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
    const std::vector<double> p = sampling_distribution();
    const double n = static_cast<double>(p.size());
    std::vector<double> w(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) w[i] = std::pow(n * p[i], -beta);
    const double top = *std::max_element(w.begin(), w.end());
    for (double& x : w) x /= top;
    return w;
}

std::vector<WeightedTransition> PrioritizedBuffer::sample(std::size_t batch, double beta,
                                                          std::mt19937_64& rng) const {
    if (items_.empty()) throw ContractError("cannot sample from an empty buffer");
    const std::vector<double> p = sampling_distribution();
    const std::vector<double> w = importance_weights(beta);
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<WeightedTransition> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t i = draw(cdf, unit, rng);
        out.push_back({i, items_[i], w[i]});
    }
    return out;
}

void PrioritizedBuffer::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& td_abs) {
    if (indices.size() != td_abs.size()) throw ContractError("indices and TD errors differ in length");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= items_.size())
            throw ContractError("replay index " + std::to_string(indices[k]) + " out of range");
        if (!(td_abs[k] >= 0.0) || !std::isfinite(td_abs[k]))
            throw DomainError("priority update needs a finite non-negative TD error");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) priorities_[indices[k]] = td_abs[k] + kPriorityFloor;
}

void PrioritizedBuffer::set_priority(std::size_t index, double priority) {
    if (index >= items_.size()) throw ContractError("replay index out of range");
    if (!(priority >= 0.0) || !std::isfinite(priority)) throw DomainError("priority must be >= 0");
    priorities_[index] = priority;
}

double anneal_beta(std::size_t step, std::size_t total_steps) {
    if (total_steps == 0 || step >= total_steps) return 1.0;
    return 0.5 + 0.5 * static_cast<double>(step) / static_cast<double>(total_steps);
}

}  // namespace duel
