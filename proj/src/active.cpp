#include "isingdyn/active.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "isingdyn/parallel.hpp"
#include "isingdyn/reconstruction.hpp"

namespace isingdyn {

namespace {

// ln(2 cosh A) - A tanh A, overflow-safe; ln 2 exactly at A = 0.
double entropy_term(double a) {
    const double mag = std::abs(a);
    return mag + std::log1p(std::exp(-2.0 * mag)) - a * std::tanh(a);
}

}  // namespace

double glauber_entropy(const IsingModel& model_estimate, const SpinConfiguration& sigma0) {
    if (static_cast<int>(sigma0.size()) != model_estimate.n())
        throw std::invalid_argument("glauber_entropy: configuration length mismatch");
    long double acc = 0.0L;
    for (int k = 0; k < model_estimate.n(); ++k)
        acc += entropy_term(model_estimate.local_field(k, sigma0));
    return static_cast<double>(acc);
}

double mixing_coefficient(std::size_t sample_count) {
    if (sample_count == 0) throw std::invalid_argument("mixing_coefficient: count must be >= 1");
    // x^(-1/6) as 1/sqrt(cbrt(x)); exact at perfect sixth powers.
    return 1.0 - 1.0 / std::sqrt(std::cbrt(static_cast<double>(sample_count)));
}

SpinConfiguration QueryDistribution::configuration(std::size_t index) const {
    SpinConfiguration sigma(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = (index >> i) & 1u ? 1 : -1;
    return sigma;
}

std::size_t QueryDistribution::sample_index(RngStream& rng) const {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

QueryDistribution query_distribution_from_entropies(const std::vector<double>& entropies, double mu) {
    if (entropies.empty()) throw std::invalid_argument("query distribution: empty support");
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("query distribution: mu must be in [0,1]");
    int n = 0;
    while ((std::size_t{1} << n) < entropies.size()) ++n;
    if ((std::size_t{1} << n) != entropies.size())
        throw std::invalid_argument("query distribution: support size must be a power of two");

    QueryDistribution q;
    q.n = n;
    q.entropy_min = entropies.front();
    q.entropy_max = entropies.front();
    long double total = 0.0L;
    for (double s : entropies) {
        if (!(s >= 0.0)) throw std::invalid_argument("query distribution: negative entropy");
        total += s;
        q.entropy_min = std::min(q.entropy_min, s);
        q.entropy_max = std::max(q.entropy_max, s);
    }
    q.entropy_mean = static_cast<double>(total) / static_cast<double>(entropies.size());

    const double uniform = 1.0 / static_cast<double>(entropies.size());
    q.probabilities.resize(entropies.size());
    if (total <= 0.0L) {
        std::fill(q.probabilities.begin(), q.probabilities.end(), uniform);
    } else {
        long double check = 0.0L;
        for (std::size_t i = 0; i < entropies.size(); ++i) {
            q.probabilities[i] =
                mu * static_cast<double>(entropies[i] / total) + (1.0 - mu) * uniform;
            check += q.probabilities[i];
        }
        const double norm = static_cast<double>(check);
        for (auto& p : q.probabilities) p /= norm;
    }
    q.cdf.resize(q.probabilities.size());
    long double acc = 0.0L;
    for (std::size_t i = 0; i < q.probabilities.size(); ++i) {
        acc += q.probabilities[i];
        q.cdf[i] = static_cast<double>(acc);
    }
    q.cdf.back() = 1.0;
    return q;
}

QueryDistribution build_query_distribution(const IsingModel& model_estimate, double mu) {
    const int n = model_estimate.n();
    if (n > 20)
        throw std::invalid_argument("build_query_distribution: exact enumeration limited to n <= 20");

    // Per-node lookup over neighbor sign patterns; direct evaluation when a
    // node's degree makes the table too large.
    const std::size_t size = std::size_t{1} << n;
    std::vector<double> entropies(size, 0.0);
    for (int k = 0; k < n; ++k) {
        const auto& nbrs = model_estimate.neighbors(k);
        const int deg = static_cast<int>(nbrs.size());
        if (deg > 16) {
            SpinConfiguration sigma(static_cast<std::size_t>(n));
            for (std::size_t mask = 0; mask < size; ++mask) {
                for (int i = 0; i < n; ++i)
                    sigma[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : -1;
                entropies[mask] += entropy_term(model_estimate.local_field(k, sigma));
            }
            continue;
        }
        std::vector<double> table(std::size_t{1} << deg);
        for (std::size_t pat = 0; pat < table.size(); ++pat) {
            double a = model_estimate.field(k);
            for (int b = 0; b < deg; ++b)
                a += nbrs[static_cast<std::size_t>(b)].second * ((pat >> b) & 1u ? 1.0 : -1.0);
            table[pat] = entropy_term(a);
        }
        for (std::size_t mask = 0; mask < size; ++mask) {
            std::size_t pat = 0;
            for (int b = 0; b < deg; ++b)
                pat |= ((mask >> nbrs[static_cast<std::size_t>(b)].first) & 1u) << b;
            entropies[mask] += table[pat];
        }
    }
    return query_distribution_from_entropies(entropies, mu);
}

std::size_t ActiveConfig::seed_set_size() const {
    if (initial_count > 0) return initial_count;
    const double batches = static_cast<double>(i_max) * static_cast<double>(m_b);
    return static_cast<std::size_t>(
        std::llround(initial_fraction / (1.0 - initial_fraction) * batches));
}

ActiveConfig ActiveConfig::for_total_budget(std::size_t m_total, int i_max, double initial_fraction) {
    if (m_total < static_cast<std::size_t>(i_max) + 1)
        throw std::invalid_argument("for_total_budget: budget too small");
    ActiveConfig cfg;
    cfg.i_max = i_max;
    cfg.initial_fraction = initial_fraction;
    const auto seed = static_cast<std::size_t>(initial_fraction * static_cast<double>(m_total));
    cfg.m_b = std::max<std::size_t>(1, (m_total - seed) / static_cast<std::size_t>(i_max));
    cfg.initial_count = m_total - static_cast<std::size_t>(i_max) * cfg.m_b;
    return cfg;
}

QueryOracle model_query_oracle(const IsingModel& true_model) {
    return [model = true_model](const SpinConfiguration& sigma0, RngStream& rng) {
        return glauber_step(model, sigma0, rng);
    };
}

namespace {

std::vector<NeighborhoodEstimate> fit_all_nodes(const SampleSet& samples, const ActiveConfig& cfg) {
    const int n = samples.n();
    std::vector<NeighborhoodEstimate> estimates(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), cfg.thread_count, [&](std::size_t u) {
        NeighborhoodEstimate& est = estimates[u];
        const std::size_t m_u = samples.count_for(static_cast<int>(u));
        if (m_u == 0) {
            // no updates yet; keep the zero estimate until data arrives
            est.node = static_cast<int>(u);
            est.couplings.assign(static_cast<std::size_t>(n - 1), 0.0);
            return;
        }
        const double lambda = lambda_value(cfg.reg, n, m_u);
        est = fit_neighborhood(samples, static_cast<int>(u), lambda, cfg.estimator, cfg.solver);
    });
    return estimates;
}

IsingModel estimate_as_model(const std::vector<NeighborhoodEstimate>& estimates) {
    const int n = static_cast<int>(estimates.size());
    std::vector<double> fields(static_cast<std::size_t>(n), 0.0);
    for (const auto& est : estimates) fields[static_cast<std::size_t>(est.node)] = est.field;
    return model_from_estimate(average_couplings(estimates), fields);
}

}  // namespace

ActiveResult active_learn(const QueryOracle& oracle, int n, const ActiveConfig& config,
                          RngStream& rng) {
    if (!oracle) throw std::invalid_argument("active_learn: null oracle");
    if (n < 1 || config.i_max < 1 || config.m_b < 1)
        throw std::invalid_argument("active_learn: invalid configuration");
    if (config.initial_fraction <= 0.0 || config.initial_fraction >= 1.0)
        throw std::invalid_argument("active_learn: initial_fraction must lie in (0,1)");

    ActiveResult result{{}, SampleSet(n, Regime::M), {}};
    const InitialDistribution uniform = InitialDistribution::uniform();
    const std::size_t seed_count = std::max<std::size_t>(1, config.seed_set_size());

    for (std::size_t t = 0; t < seed_count; ++t) {
        const SpinConfiguration sigma0 = uniform.sample(n, rng);
        DynamicsSample sample = oracle(sigma0, rng);
        result.samples.append(sample);
    }
    result.estimates = fit_all_nodes(result.samples, config);

    for (int round = 1; round <= config.i_max; ++round) {
        const double mu =
            config.forced_mu ? *config.forced_mu : mixing_coefficient(result.samples.size());
        QueryDistribution q;
        try {
            q = build_query_distribution(estimate_as_model(result.estimates), mu);
        } catch (const std::exception& e) {
            throw std::runtime_error("active_learn round " + std::to_string(round) + ": " + e.what());
        }

        ActiveRoundLog log;
        log.round = round;
        log.accumulated_samples = result.samples.size();
        log.mu = mu;
        log.entropy_min = q.entropy_min;
        log.entropy_mean = q.entropy_mean;
        log.entropy_max = q.entropy_max;
        log.lambdas.assign(static_cast<std::size_t>(n), 0.0);
        for (int u = 0; u < n; ++u)
            if (result.samples.count_for(u) > 0)
                log.lambdas[static_cast<std::size_t>(u)] =
                    lambda_value(config.reg, n, result.samples.count_for(u));
        result.rounds.push_back(std::move(log));

        for (std::size_t t = 0; t < config.m_b; ++t) {
            const SpinConfiguration sigma0 = q.configuration(q.sample_index(rng));
            DynamicsSample sample;
            try {
                sample = oracle(sigma0, rng);
            } catch (const std::exception& e) {
                throw std::runtime_error("active_learn round " + std::to_string(round) +
                                         ": oracle failed: " + e.what());
            }
            result.samples.append(sample);
        }
        result.estimates = fit_all_nodes(result.samples, config);
    }
    return result;
}

}  // namespace isingdyn
