#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "isingdyn/dynamics.hpp"
#include "isingdyn/model.hpp"

namespace isingdyn {

// Binned spike trains as a +-1 matrix, one row per neuron.
struct SpikeRaster {
    int n_neurons = 0;
    int n_bins = 0;
    double bin_ms = 0.0;
    std::vector<Spin> spins;  // n_neurons x n_bins, row-major

    Spin at(int neuron, int bin) const {
        return spins[static_cast<std::size_t>(neuron) * static_cast<std::size_t>(n_bins) +
                     static_cast<std::size_t>(bin)];
    }
    SpinConfiguration column(int bin) const;
};

struct CorrelationMatrix {
    int n = 0;
    std::vector<double> values;  // n x n
    std::vector<int> zero_variance_nodes;  // entries involving these were set to 0

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(j)];
    }
};

// Observed initial-configuration and updated-node frequencies of a sample set.
struct EmpiricalContext {
    InitialDistribution p0_empirical;
    std::vector<double> p_node;  // normalized updated-node frequencies
};

struct ExtractionReport {
    std::size_t adjacent_pairs = 0;
    std::size_t extracted = 0;
    std::size_t zero_flip_skipped = 0;
    std::size_t multi_flip_skipped = 0;
};

// Spin is +1 iff the neuron fires at least once in the bin (multiple spikes
// count once). Times must be sorted and lie in [0, duration_ms).
SpikeRaster bin_spikes(const std::vector<std::vector<double>>& spike_times_ms, double duration_ms,
                       double bin_ms = 20.0);

// Adjacent-bin pairs where exactly one neuron flips sign become M-regime
// samples (the flipped neuron is the updated node); other pairs are skipped.
SampleSet extract_single_flip_samples(const SpikeRaster& raster, ExtractionReport* report = nullptr);

// Pearson correlation treating every column as an i.i.d. draw. Zero-variance
// neurons get 0 entries and are listed in zero_variance_nodes.
CorrelationMatrix iid_correlations(const SpikeRaster& raster);

// Pearson correlation between sigma_i^0 and sigma_j^1 across samples.
CorrelationMatrix time_correlations(const SampleSet& samples);

EmpiricalContext empirical_context(const SampleSet& samples);

// Simulates m_sim one-step updates with sigma0 ~ p0_empirical and the updated
// node ~ p_node, keeping only realized flips (matching the extraction filter),
// then computes time_correlations. Throws when no simulated step flips.
CorrelationMatrix predict_time_correlations(const IsingModel& model_estimate,
                                            const EmpiricalContext& ctx, std::size_t m_sim,
                                            RngStream& rng);

// ||a - b||_F / ||b||_F
double frobenius_relative_diff(const CorrelationMatrix& a, const CorrelationMatrix& b);

struct GapThresholdResult {
    double threshold = 0.0;
    bool gap_found = false;  // false: single cluster, threshold 0
};

// Data-driven coupling cutoff: sort |J|, take the first inter-value gap wider
// than twice the mean spacing, and return its midpoint. Values below the
// threshold are the near-zero group.
GapThresholdResult gap_threshold(std::span<const double> couplings);

}  // namespace isingdyn
