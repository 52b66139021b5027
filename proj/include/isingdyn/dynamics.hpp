#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "isingdyn/model.hpp"
#include "isingdyn/rng.hpp"

namespace isingdyn {

enum class Regime { T, M };

// One Glauber update: sigma1 equals sigma0 except possibly at updated_node.
struct DynamicsSample {
    SpinConfiguration sigma0;
    SpinConfiguration sigma1;
    int updated_node = 0;
};

// Ordered collection of dynamics samples. Storage is flat: pre-update
// configurations are kept as an m x n block, and sigma1 is reconstructed from
// the stored updated-node value. Immutable once returned by a generator.
class SampleSet {
public:
    SampleSet(int n, Regime regime) : n_(n), regime_(regime) {}

    void append(const SpinConfiguration& sigma0, int updated_node, Spin new_value);
    void append(const DynamicsSample& sample);

    int n() const { return n_; }
    Regime regime() const { return regime_; }
    std::size_t size() const { return updated_.size(); }
    bool empty() const { return updated_.empty(); }

    std::span<const Spin> sigma0(std::size_t t) const {
        return {sigma0_.data() + t * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
    }
    int updated_node(std::size_t t) const { return updated_[t]; }
    Spin sigma1_value(std::size_t t) const { return value_[t]; }
    Spin sigma1_at(std::size_t t, int j) const {
        return updated_[t] == j ? value_[t] : sigma0(t)[static_cast<std::size_t>(j)];
    }
    DynamicsSample sample(std::size_t t) const;

    const std::vector<std::size_t>& per_node_counts() const { return per_node_counts_; }
    std::size_t count_for(int node) const { return per_node_counts_[static_cast<std::size_t>(node)]; }

    // Throws when a sample breaks the single-coordinate-change rule or, in the
    // T-regime, when sample t+1 does not chain onto sample t.
    void validate() const;

private:
    int n_;
    Regime regime_;
    std::vector<Spin> sigma0_;
    std::vector<int> updated_;
    std::vector<Spin> value_;
    std::vector<std::size_t> per_node_counts_ = std::vector<std::size_t>(static_cast<std::size_t>(n_), 0);
};

class InitialDistribution {
public:
    enum class Kind { Uniform, Fixed, Categorical, External };
    using Sampler = std::function<SpinConfiguration(RngStream&)>;

    static InitialDistribution uniform();
    static InitialDistribution fixed(SpinConfiguration sigma);
    // Probabilities must be nonnegative and sum to 1 within 1e-12.
    static InitialDistribution categorical(std::vector<std::pair<SpinConfiguration, double>> table);
    static InitialDistribution external(Sampler sampler);

    Kind kind() const { return kind_; }
    const std::vector<std::pair<SpinConfiguration, double>>& table() const { return table_; }

    SpinConfiguration sample(int n, RngStream& rng) const;

private:
    InitialDistribution() = default;
    Kind kind_ = Kind::Uniform;
    SpinConfiguration fixed_;
    std::vector<std::pair<SpinConfiguration, double>> table_;
    std::vector<double> cdf_;
    Sampler sampler_;
};

// p(sigma_i = value | sigma) = exp(value*A_i) / (2 cosh A_i) with
// A_i = sum_{j in ∂i} J_ij sigma_j + H_i. Saturates to {0,1} in double
// precision once |A_i| exceeds ~37.
double conditional_prob(const IsingModel& model, int node, const SpinConfiguration& sigma, Spin value);

// Consumes exactly two RNG draws, in order: (1) updated node uniform over
// [n), (2) the new spin value against conditional_prob(node, ., +1).
std::pair<int, Spin> glauber_update(const IsingModel& model, const SpinConfiguration& sigma,
                                    RngStream& rng);
DynamicsSample glauber_step(const IsingModel& model, const SpinConfiguration& sigma, RngStream& rng);

SpinConfiguration sample_initial(const InitialDistribution& p0, int n, RngStream& rng);

// One trajectory of m chained steps from sigma0 ~ p0. burn_in steps are
// executed and discarded before recording starts (default none).
SampleSet run_t_regime(const IsingModel& model, const InitialDistribution& p0, std::size_t m,
                       RngStream& rng, std::size_t burn_in = 0);

// m independent restarts: sigma0 ~ p0 followed by exactly one step each.
SampleSet run_m_regime(const IsingModel& model, const InitialDistribution& p0, std::size_t m,
                       RngStream& rng);

// General multi-start protocol: one chained batch per entry of batch_sizes,
// each from a fresh sigma0 ~ p0. Tagged T for a single batch and M otherwise
// (the chain invariant then only holds within batches).
SampleSet run_batches(const IsingModel& model, const InitialDistribution& p0,
                      const std::vector<std::size_t>& batch_sizes, RngStream& rng);

}  // namespace isingdyn
