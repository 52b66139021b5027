#include "isingdyn/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace isingdyn {

void SampleSet::append(const SpinConfiguration& sigma0, int updated_node, Spin new_value) {
    if (static_cast<int>(sigma0.size()) != n_)
        throw std::invalid_argument("SampleSet::append: configuration length mismatch");
    if (updated_node < 0 || updated_node >= n_)
        throw std::invalid_argument("SampleSet::append: updated node out of range");
    if (new_value != 1 && new_value != -1)
        throw std::invalid_argument("SampleSet::append: spin value must be +1 or -1");
    sigma0_.insert(sigma0_.end(), sigma0.begin(), sigma0.end());
    updated_.push_back(updated_node);
    value_.push_back(new_value);
    ++per_node_counts_[static_cast<std::size_t>(updated_node)];
}

void SampleSet::append(const DynamicsSample& sample) {
    append(sample.sigma0, sample.updated_node,
           sample.sigma1[static_cast<std::size_t>(sample.updated_node)]);
}

DynamicsSample SampleSet::sample(std::size_t t) const {
    auto s0 = sigma0(t);
    DynamicsSample out;
    out.sigma0.assign(s0.begin(), s0.end());
    out.sigma1 = out.sigma0;
    out.sigma1[static_cast<std::size_t>(updated_[t])] = value_[t];
    out.updated_node = updated_[t];
    return out;
}

void SampleSet::validate() const {
    for (std::size_t t = 0; t < size(); ++t) {
        auto s0 = sigma0(t);
        for (int j = 0; j < n_; ++j) {
            Spin v = s0[static_cast<std::size_t>(j)];
            if (v != 1 && v != -1) throw std::runtime_error("SampleSet: bad spin value");
        }
        if (regime_ == Regime::T && t + 1 < size()) {
            auto next = sigma0(t + 1);
            for (int j = 0; j < n_; ++j) {
                Spin expected = j == updated_[t] ? value_[t] : s0[static_cast<std::size_t>(j)];
                if (next[static_cast<std::size_t>(j)] != expected)
                    throw std::runtime_error("SampleSet: T-regime chain broken at sample " +
                                             std::to_string(t + 1));
            }
        }
    }
}

InitialDistribution InitialDistribution::uniform() {
    InitialDistribution d;
    d.kind_ = Kind::Uniform;
    return d;
}

InitialDistribution InitialDistribution::fixed(SpinConfiguration sigma) {
    InitialDistribution d;
    d.kind_ = Kind::Fixed;
    d.fixed_ = std::move(sigma);
    return d;
}

InitialDistribution InitialDistribution::categorical(
    std::vector<std::pair<SpinConfiguration, double>> table) {
    if (table.empty()) throw std::invalid_argument("categorical: empty table");
    double total = 0.0;
    for (const auto& [sigma, p] : table) {
        if (!(p >= 0.0)) throw std::invalid_argument("categorical: negative probability");
        if (sigma.size() != table.front().first.size())
            throw std::invalid_argument("categorical: inconsistent configuration lengths");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("categorical: probabilities sum to " + std::to_string(total));
    InitialDistribution d;
    d.kind_ = Kind::Categorical;
    d.table_ = std::move(table);
    d.cdf_.reserve(d.table_.size());
    double acc = 0.0;
    for (const auto& [sigma, p] : d.table_) {
        acc += p;
        d.cdf_.push_back(acc);
    }
    d.cdf_.back() = 1.0;
    return d;
}

InitialDistribution InitialDistribution::external(Sampler sampler) {
    if (!sampler) throw std::invalid_argument("external: null sampler");
    InitialDistribution d;
    d.kind_ = Kind::External;
    d.sampler_ = std::move(sampler);
    return d;
}

SpinConfiguration InitialDistribution::sample(int n, RngStream& rng) const {
    switch (kind_) {
        case Kind::Uniform: {
            SpinConfiguration sigma(static_cast<std::size_t>(n));
            for (auto& s : sigma) s = rng.next_bernoulli(0.5) ? 1 : -1;
            return sigma;
        }
        case Kind::Fixed:
            if (static_cast<int>(fixed_.size()) != n)
                throw std::invalid_argument("fixed initial configuration has wrong length");
            return fixed_;
        case Kind::Categorical: {
            if (static_cast<int>(table_.front().first.size()) != n)
                throw std::invalid_argument("categorical configurations have wrong length");
            const double u = rng.next_double();
            std::size_t lo = 0, hi = cdf_.size() - 1;
            while (lo < hi) {
                std::size_t mid = (lo + hi) / 2;
                if (u < cdf_[mid]) hi = mid;
                else lo = mid + 1;
            }
            return table_[lo].first;
        }
        case Kind::External: {
            SpinConfiguration sigma = sampler_(rng);
            if (static_cast<int>(sigma.size()) != n)
                throw std::invalid_argument("external sampler returned wrong length");
            return sigma;
        }
    }
    throw std::logic_error("unreachable");
}

SpinConfiguration sample_initial(const InitialDistribution& p0, int n, RngStream& rng) {
    return p0.sample(n, rng);
}

double conditional_prob(const IsingModel& model, int node, const SpinConfiguration& sigma,
                        Spin value) {
    if (node < 0 || node >= model.n()) throw std::invalid_argument("conditional_prob: node out of range");
    if (static_cast<int>(sigma.size()) != model.n())
        throw std::invalid_argument("conditional_prob: configuration length mismatch");
    if (value != 1 && value != -1) throw std::invalid_argument("conditional_prob: value must be +-1");
    const double va = static_cast<double>(value) * model.local_field(node, sigma);
    if (va >= 0.0) return 1.0 / (1.0 + std::exp(-2.0 * va));
    const double e = std::exp(2.0 * va);
    return e / (1.0 + e);
}

std::pair<int, Spin> glauber_update(const IsingModel& model, const SpinConfiguration& sigma,
                                    RngStream& rng) {
    const int node = rng.next_index(model.n());
    const double p_plus = conditional_prob(model, node, sigma, 1);
    const Spin value = rng.next_double() < p_plus ? Spin{1} : Spin{-1};
    return {node, value};
}

DynamicsSample glauber_step(const IsingModel& model, const SpinConfiguration& sigma, RngStream& rng) {
    if (static_cast<int>(sigma.size()) != model.n())
        throw std::invalid_argument("glauber_step: configuration length mismatch");
    auto [node, value] = glauber_update(model, sigma, rng);
    DynamicsSample out;
    out.sigma0 = sigma;
    out.sigma1 = sigma;
    out.sigma1[static_cast<std::size_t>(node)] = value;
    out.updated_node = node;
    return out;
}

SampleSet run_t_regime(const IsingModel& model, const InitialDistribution& p0, std::size_t m,
                       RngStream& rng, std::size_t burn_in) {
    if (m < 1) throw std::invalid_argument("run_t_regime: m must be >= 1");
    SampleSet samples(model.n(), Regime::T);
    SpinConfiguration sigma = p0.sample(model.n(), rng);
    for (std::size_t t = 0; t < burn_in; ++t) {
        auto [node, value] = glauber_update(model, sigma, rng);
        sigma[static_cast<std::size_t>(node)] = value;
    }
    for (std::size_t t = 0; t < m; ++t) {
        auto [node, value] = glauber_update(model, sigma, rng);
        samples.append(sigma, node, value);
        sigma[static_cast<std::size_t>(node)] = value;
    }
    return samples;
}

SampleSet run_m_regime(const IsingModel& model, const InitialDistribution& p0, std::size_t m,
                       RngStream& rng) {
    if (m < 1) throw std::invalid_argument("run_m_regime: m must be >= 1");
    SampleSet samples(model.n(), Regime::M);
    for (std::size_t t = 0; t < m; ++t) {
        SpinConfiguration sigma = p0.sample(model.n(), rng);
        auto [node, value] = glauber_update(model, sigma, rng);
        samples.append(sigma, node, value);
    }
    return samples;
}

SampleSet run_batches(const IsingModel& model, const InitialDistribution& p0,
                      const std::vector<std::size_t>& batch_sizes, RngStream& rng) {
    if (batch_sizes.empty()) throw std::invalid_argument("run_batches: no batches");
    const Regime regime = batch_sizes.size() == 1 ? Regime::T : Regime::M;
    SampleSet samples(model.n(), regime);
    for (std::size_t m_r : batch_sizes) {
        if (m_r < 1) throw std::invalid_argument("run_batches: batch size must be >= 1");
        SpinConfiguration sigma = p0.sample(model.n(), rng);
        for (std::size_t t = 0; t < m_r; ++t) {
            auto [node, value] = glauber_update(model, sigma, rng);
            samples.append(sigma, node, value);
            sigma[static_cast<std::size_t>(node)] = value;
        }
    }
    return samples;
}

}  // namespace isingdyn
