#include "isingdyn/neural.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace isingdyn {

SpinConfiguration SpikeRaster::column(int bin) const {
    SpinConfiguration sigma(static_cast<std::size_t>(n_neurons));
    for (int i = 0; i < n_neurons; ++i) sigma[static_cast<std::size_t>(i)] = at(i, bin);
    return sigma;
}

SpikeRaster bin_spikes(const std::vector<std::vector<double>>& spike_times_ms, double duration_ms,
                       double bin_ms) {
    if (spike_times_ms.empty()) throw std::invalid_argument("bin_spikes: no neurons");
    if (bin_ms <= 0.0 || duration_ms <= 0.0)
        throw std::invalid_argument("bin_spikes: durations must be positive");

    SpikeRaster raster;
    raster.n_neurons = static_cast<int>(spike_times_ms.size());
    raster.n_bins = static_cast<int>(std::ceil(duration_ms / bin_ms));
    raster.bin_ms = bin_ms;
    raster.spins.assign(
        static_cast<std::size_t>(raster.n_neurons) * static_cast<std::size_t>(raster.n_bins), -1);

    for (int i = 0; i < raster.n_neurons; ++i) {
        const auto& times = spike_times_ms[static_cast<std::size_t>(i)];
        double prev = -1.0;
        for (double t : times) {
            if (t < prev)
                throw std::invalid_argument("bin_spikes: unsorted spike times for neuron " +
                                            std::to_string(i));
            if (t < 0.0 || t >= duration_ms)
                throw std::invalid_argument("bin_spikes: spike time out of range for neuron " +
                                            std::to_string(i));
            prev = t;
            const int bin = static_cast<int>(t / bin_ms);
            raster.spins[static_cast<std::size_t>(i) * raster.n_bins + bin] = 1;
        }
    }
    return raster;
}

SampleSet extract_single_flip_samples(const SpikeRaster& raster, ExtractionReport* report) {
    if (raster.n_bins < 2) throw std::invalid_argument("extract_single_flip_samples: need >= 2 bins");
    SampleSet samples(raster.n_neurons, Regime::M);
    ExtractionReport rep;
    SpinConfiguration col0(static_cast<std::size_t>(raster.n_neurons));
    for (int t = 0; t + 1 < raster.n_bins; ++t) {
        ++rep.adjacent_pairs;
        int flips = 0;
        int flipped = -1;
        for (int i = 0; i < raster.n_neurons; ++i) {
            col0[static_cast<std::size_t>(i)] = raster.at(i, t);
            if (raster.at(i, t) != raster.at(i, t + 1)) {
                ++flips;
                flipped = i;
            }
        }
        if (flips == 0) {
            ++rep.zero_flip_skipped;
        } else if (flips > 1) {
            ++rep.multi_flip_skipped;
        } else {
            samples.append(col0, flipped, raster.at(flipped, t + 1));
            ++rep.extracted;
        }
    }
    if (report) *report = rep;
    return samples;
}

namespace {

struct Moments {
    std::vector<double> mean;
    std::vector<double> var;
};

CorrelationMatrix correlations_from_sums(int n, std::size_t count, const std::vector<double>& si,
                                         const std::vector<double>& sj,
                                         const std::vector<double>& sij) {
    CorrelationMatrix corr;
    corr.n = n;
    corr.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    const double inv = 1.0 / static_cast<double>(count);
    std::vector<double> var_i(static_cast<std::size_t>(n)), var_j(static_cast<std::size_t>(n));
    std::vector<bool> flagged(static_cast<std::size_t>(n), false);
    for (int k = 0; k < n; ++k) {
        var_i[static_cast<std::size_t>(k)] = 1.0 - si[static_cast<std::size_t>(k)] * inv *
                                                       (si[static_cast<std::size_t>(k)] * inv);
        var_j[static_cast<std::size_t>(k)] = 1.0 - sj[static_cast<std::size_t>(k)] * inv *
                                                       (sj[static_cast<std::size_t>(k)] * inv);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double cov = sij[static_cast<std::size_t>(i) * n + j] * inv -
                               si[static_cast<std::size_t>(i)] * inv * sj[static_cast<std::size_t>(j)] * inv;
            const double denom = var_i[static_cast<std::size_t>(i)] * var_j[static_cast<std::size_t>(j)];
            if (denom <= 0.0) {
                if (var_i[static_cast<std::size_t>(i)] <= 0.0) flagged[static_cast<std::size_t>(i)] = true;
                if (var_j[static_cast<std::size_t>(j)] <= 0.0) flagged[static_cast<std::size_t>(j)] = true;
                continue;  // entry stays 0
            }
            corr.values[static_cast<std::size_t>(i) * n + j] = cov / std::sqrt(denom);
        }
    }
    for (int k = 0; k < n; ++k)
        if (flagged[static_cast<std::size_t>(k)]) corr.zero_variance_nodes.push_back(k);
    return corr;
}

}  // namespace

CorrelationMatrix iid_correlations(const SpikeRaster& raster) {
    if (raster.n_bins < 2) throw std::invalid_argument("iid_correlations: need >= 2 bins");
    const int n = raster.n_neurons;
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sij(static_cast<std::size_t>(n) * n, 0.0);
    for (int t = 0; t < raster.n_bins; ++t) {
        for (int i = 0; i < n; ++i) {
            const double vi = raster.at(i, t);
            s[static_cast<std::size_t>(i)] += vi;
            for (int j = 0; j < n; ++j)
                sij[static_cast<std::size_t>(i) * n + j] += vi * raster.at(j, t);
        }
    }
    return correlations_from_sums(n, static_cast<std::size_t>(raster.n_bins), s, s, sij);
}

CorrelationMatrix time_correlations(const SampleSet& samples) {
    if (samples.size() < 2) throw std::invalid_argument("time_correlations: need >= 2 samples");
    const int n = samples.n();
    std::vector<double> s0(static_cast<std::size_t>(n), 0.0);
    std::vector<double> s1(static_cast<std::size_t>(n), 0.0);
    std::vector<double> s01(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t t = 0; t < samples.size(); ++t) {
        auto sigma0 = samples.sigma0(t);
        for (int i = 0; i < n; ++i) {
            const double vi = sigma0[static_cast<std::size_t>(i)];
            s0[static_cast<std::size_t>(i)] += vi;
            for (int j = 0; j < n; ++j)
                s01[static_cast<std::size_t>(i) * n + j] += vi * samples.sigma1_at(t, j);
        }
        for (int j = 0; j < n; ++j) s1[static_cast<std::size_t>(j)] += samples.sigma1_at(t, j);
    }
    return correlations_from_sums(n, samples.size(), s0, s1, s01);
}

EmpiricalContext empirical_context(const SampleSet& samples) {
    if (samples.empty()) throw std::invalid_argument("empirical_context: empty sample set");
    std::map<SpinConfiguration, std::size_t> counts;
    for (std::size_t t = 0; t < samples.size(); ++t) {
        auto s0 = samples.sigma0(t);
        ++counts[SpinConfiguration(s0.begin(), s0.end())];
    }
    std::vector<std::pair<SpinConfiguration, double>> table;
    table.reserve(counts.size());
    const double inv = 1.0 / static_cast<double>(samples.size());
    double acc = 0.0;
    for (const auto& [sigma, c] : counts) {
        table.emplace_back(sigma, static_cast<double>(c) * inv);
        acc += static_cast<double>(c) * inv;
    }
    // pin the total exactly to 1 against accumulated rounding
    table.back().second += 1.0 - acc;

    EmpiricalContext ctx{InitialDistribution::categorical(std::move(table)), {}};
    ctx.p_node.assign(static_cast<std::size_t>(samples.n()), 0.0);
    for (int u = 0; u < samples.n(); ++u)
        ctx.p_node[static_cast<std::size_t>(u)] =
            static_cast<double>(samples.count_for(u)) * inv;
    return ctx;
}

CorrelationMatrix predict_time_correlations(const IsingModel& model_estimate,
                                            const EmpiricalContext& ctx, std::size_t m_sim,
                                            RngStream& rng) {
    if (m_sim < 1) throw std::invalid_argument("predict_time_correlations: m_sim must be >= 1");
    const int n = model_estimate.n();
    if (static_cast<int>(ctx.p_node.size()) != n)
        throw std::invalid_argument("predict_time_correlations: context dimension mismatch");

    std::vector<double> node_cdf(ctx.p_node.size());
    double acc = 0.0;
    for (std::size_t u = 0; u < ctx.p_node.size(); ++u) {
        acc += ctx.p_node[u];
        node_cdf[u] = acc;
    }
    if (std::abs(acc - 1.0) > 1e-9)
        throw std::invalid_argument("predict_time_correlations: node frequencies are unnormalized");
    node_cdf.back() = 1.0;

    SampleSet sim(n, Regime::M);
    for (std::size_t t = 0; t < m_sim; ++t) {
        const SpinConfiguration sigma0 = ctx.p0_empirical.sample(n, rng);
        const double u01 = rng.next_double();
        const int node = static_cast<int>(
            std::upper_bound(node_cdf.begin(), node_cdf.end(), u01) - node_cdf.begin());
        const double p_plus = conditional_prob(model_estimate, node, sigma0, 1);
        const Spin value = rng.next_double() < p_plus ? Spin{1} : Spin{-1};
        if (value == sigma0[static_cast<std::size_t>(node)]) continue;  // data keeps flips only
        sim.append(sigma0, node, value);
    }
    if (sim.size() < 2)
        throw std::runtime_error(
            "predict_time_correlations: almost no simulated flips survived the filter; "
            "increase m_sim");
    return time_correlations(sim);
}

double frobenius_relative_diff(const CorrelationMatrix& a, const CorrelationMatrix& b) {
    if (a.n != b.n) throw std::invalid_argument("frobenius_relative_diff: dimension mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        const double d = a.values[k] - b.values[k];
        num += d * d;
        den += b.values[k] * b.values[k];
    }
    if (den == 0.0) throw std::invalid_argument("frobenius_relative_diff: reference norm is zero");
    return std::sqrt(num) / std::sqrt(den);
}

GapThresholdResult gap_threshold(std::span<const double> couplings) {
    if (couplings.size() < 2) throw std::invalid_argument("gap_threshold: need >= 2 values");
    std::vector<double> mags(couplings.begin(), couplings.end());
    for (auto& v : mags) v = std::abs(v);
    std::sort(mags.begin(), mags.end());

    const double span = mags.back() - mags.front();
    const double mean_gap = span / static_cast<double>(mags.size() - 1);
    if (span <= 0.0) return {0.0, false};
    for (std::size_t k = 0; k + 1 < mags.size(); ++k) {
        const double gap = mags[k + 1] - mags[k];
        if (gap > 2.0 * mean_gap) return {mags[k] + 0.5 * gap, true};
    }
    return {0.0, false};
}

}  // namespace isingdyn
