#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "isingdyn/dynamics.hpp"
#include "isingdyn/estimators.hpp"
#include "isingdyn/model.hpp"

namespace isingdyn {

// Update entropy of one Glauber step from sigma0 under the given model:
// S = sum_k [ln(2 cosh A_k) - A_k tanh A_k], A_k = sum_l J_kl sigma_l + H_k.
// Each term lies in [0, ln 2].
double glauber_entropy(const IsingModel& model_estimate, const SpinConfiguration& sigma0);

// mu = 1 - sample_count^(-1/6)
double mixing_coefficient(std::size_t sample_count);

// Probabilities over all 2^n initial configurations, indexed by bitmask
// (bit i set means sigma_i = +1).
struct QueryDistribution {
    int n = 0;
    std::vector<double> probabilities;
    std::vector<double> cdf;  // running sums, last entry 1
    double entropy_min = 0.0;
    double entropy_mean = 0.0;
    double entropy_max = 0.0;

    SpinConfiguration configuration(std::size_t index) const;
    std::size_t sample_index(RngStream& rng) const;  // inverse-CDF draw
};

// q = mu * (entropies / sum) + (1 - mu) * uniform. Degenerate all-zero
// entropies fall back to uniform. Normalization and nonnegativity are
// independent of any positive rescaling of the entropies.
QueryDistribution query_distribution_from_entropies(const std::vector<double>& entropies, double mu);

// Enumerates glauber_entropy over all 2^n configurations (n <= 20) and mixes
// with the uniform distribution.
QueryDistribution build_query_distribution(const IsingModel& model_estimate, double mu);

struct ActiveConfig {
    int i_max = 15;                      // number of mini-batches
    std::size_t m_b = 1;                 // mini-batch size
    double initial_fraction = 1.0 / 3.0; // share of the total budget used for the seed set
    std::size_t initial_count = 0;       // explicit seed-set size; 0 derives it from the fraction
    EstimatorKind estimator = EstimatorKind::DRise;
    RegularizationConfig reg;
    SolverConfig solver;
    int thread_count = 1;
    std::optional<double> forced_mu;     // overrides mixing_coefficient (tests)

    // Splits a total budget as the paper does: seed set of
    // floor(initial_fraction * m_total), remainder in i_max equal batches
    // (the seed set absorbs the rounding so the total is exact).
    static ActiveConfig for_total_budget(std::size_t m_total, int i_max = 15,
                                         double initial_fraction = 1.0 / 3.0);

    std::size_t seed_set_size() const;
    std::size_t total_samples() const { return seed_set_size() + static_cast<std::size_t>(i_max) * m_b; }
};

struct ActiveRoundLog {
    int round = 0;
    std::size_t accumulated_samples = 0;  // |X| when the round's queries were chosen
    double mu = 0.0;
    double entropy_min = 0.0;
    double entropy_mean = 0.0;
    double entropy_max = 0.0;
    std::vector<double> lambdas;  // per-node, 0 for nodes without updates yet
};

struct ActiveResult {
    std::vector<NeighborhoodEstimate> estimates;
    SampleSet samples;
    std::vector<ActiveRoundLog> rounds;
};

// Answers one M-regime query: one Glauber step from the supplied sigma0.
using QueryOracle = std::function<DynamicsSample(const SpinConfiguration&, RngStream&)>;

QueryOracle model_query_oracle(const IsingModel& true_model);

// Mini-batch adaptive loop: uniform seed set, then i_max rounds of
// {refit, rebuild q from the current estimate, draw m_b queries i.i.d. from q
// (with replacement), query the oracle, append}. Returns the final per-node
// fits and the accumulated sample set.
ActiveResult active_learn(const QueryOracle& oracle, int n, const ActiveConfig& config,
                          RngStream& rng);

}  // namespace isingdyn
