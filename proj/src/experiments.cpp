#include "isingdyn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "isingdyn/parallel.hpp"
#include "isingdyn/reconstruction.hpp"

namespace isingdyn {

namespace {

std::uint64_t beta_salt(double beta) { return std::bit_cast<std::uint64_t>(beta); }

}  // namespace

bool m_star_trial(const IsingModel& truth, const MStarSpec& spec, std::size_t m, RngStream rng,
                  double* mean_m_i) {
    const ModelStats stats = model_stats(truth);
    std::vector<NeighborhoodEstimate> estimates;
    std::size_t total_updates = 0;

    if (spec.active) {
        ActiveConfig cfg = ActiveConfig::for_total_budget(m, spec.active->i_max,
                                                          spec.active->initial_fraction);
        cfg.estimator = spec.active->estimator;
        cfg.reg = spec.reg;
        cfg.solver = spec.solver;
        cfg.forced_mu = spec.active->forced_mu;
        ActiveResult run = active_learn(model_query_oracle(truth), truth.n(), cfg, rng);
        for (int u = 0; u < truth.n(); ++u) {
            if (run.samples.count_for(u) == 0) return false;  // node never updated
            total_updates += run.samples.count_for(u);
        }
        estimates = std::move(run.estimates);
    } else {
        const InitialDistribution p0 = InitialDistribution::uniform();
        SampleSet samples =
            spec.regime == Regime::T
                ? run_t_regime(truth, p0, m, rng, spec.t_regime_burn_in)
                : run_m_regime(truth, p0, m, rng);
        estimates.resize(static_cast<std::size_t>(truth.n()));
        for (int u = 0; u < truth.n(); ++u) {
            const std::size_t m_u = samples.count_for(u);
            if (m_u == 0) return false;
            total_updates += m_u;
            const std::size_t count = spec.reg.per_node_counts ? m_u : m / truth.n();
            const double lambda = lambda_value(spec.reg, truth.n(), std::max<std::size_t>(1, count));
            estimates[static_cast<std::size_t>(u)] =
                fit_neighborhood(samples, u, lambda, spec.estimator, spec.solver);
        }
    }

    if (mean_m_i) *mean_m_i = static_cast<double>(total_updates) / truth.n();
    const EdgeSetEstimate edges = threshold_edges(average_couplings(estimates), stats.alpha);
    return structure_success(edges, truth);
}

namespace {

struct LevelOutcome {
    bool all_succeeded = false;
    int successes = 0;
    int trials = 0;
    double mean_m_i = 0.0;
};

// Runs the consecutive-success block at one m level. Trials are independent
// (stream derived from master/beta/m/trial) and run in parallel; a failure
// cancels the remaining ones since the level verdict is already fixed.
LevelOutcome run_level(const IsingModel& truth, const MStarSpec& spec, std::size_t m) {
    const int trials = spec.consecutive_successes;
    const RngStream base = RngStream(spec.master_seed)
                               .derive(beta_salt(spec.topology.beta_value))
                               .derive(m);
    std::vector<int> outcome(static_cast<std::size_t>(trials), -1);
    std::vector<double> mean_m_i(static_cast<std::size_t>(trials), 0.0);
    std::atomic<bool> cancel{false};
    parallel_for(static_cast<std::size_t>(trials), spec.thread_count, [&](std::size_t k) {
        const bool ok = m_star_trial(truth, spec, m, base.derive(k), &mean_m_i[k]);
        outcome[k] = ok ? 1 : 0;
        if (!ok) cancel.store(true, std::memory_order_relaxed);
    }, &cancel);

    LevelOutcome level;
    double mi_sum = 0.0;
    for (int k = 0; k < trials; ++k) {
        if (outcome[static_cast<std::size_t>(k)] < 0) continue;  // cancelled before running
        ++level.trials;
        if (outcome[static_cast<std::size_t>(k)] == 1) {
            ++level.successes;
            mi_sum += mean_m_i[static_cast<std::size_t>(k)];
        }
    }
    level.all_succeeded = level.successes == trials;
    if (level.successes > 0) level.mean_m_i = mi_sum / level.successes;
    return level;
}

}  // namespace

MStarResult find_m_star(const MStarSpec& spec) {
    if (spec.consecutive_successes < 1)
        throw std::invalid_argument("find_m_star: consecutive_successes must be >= 1");
    if (spec.m_grid.factor <= 1.0) throw std::invalid_argument("find_m_star: grid factor must exceed 1");

    const IsingModel truth = build_topology(spec.topology);
    MStarResult result;
    result.master_seed = spec.master_seed;

    std::size_t m = spec.m_grid.m_min > 0 ? spec.m_grid.m_min
                                          : 100 * static_cast<std::size_t>(truth.n());
    std::size_t last_failure = 0;
    std::size_t first_success = 0;
    double success_mean_m_i = 0.0;

    while (m <= spec.m_grid.m_max) {
        const LevelOutcome level = run_level(truth, spec, m);
        result.levels.push_back({m, level.successes, level.trials});
        if (level.all_succeeded) {
            first_success = m;
            success_mean_m_i = level.mean_m_i;
            break;
        }
        last_failure = m;
        const auto next = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * spec.m_grid.factor));
        m = std::max(next, m + 1);
    }
    if (first_success == 0) return result;  // grid exhausted: bounded failure, not an exception

    std::size_t lo = last_failure;  // 0 when the very first level succeeded
    std::size_t hi = first_success;
    for (int round = 0; round < spec.m_grid.bisection_rounds && lo > 0; ++round) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (mid == lo || mid == hi) break;
        const LevelOutcome level = run_level(truth, spec, mid);
        result.levels.push_back({mid, level.successes, level.trials});
        if (level.all_succeeded) {
            hi = mid;
            success_mean_m_i = level.mean_m_i;
        } else {
            lo = mid;
        }
    }

    result.found = true;
    result.m_star = hi;
    result.mean_m_i = success_mean_m_i;
    return result;
}

ExponentFit fit_exponent(std::span<const double> betas, std::span<const std::size_t> m_stars, int d) {
    if (betas.size() != m_stars.size()) throw std::invalid_argument("fit_exponent: length mismatch");
    if (betas.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 points");
    const double first = betas.front();
    bool distinct = false;
    for (double b : betas)
        if (b != first) distinct = true;
    if (!distinct) throw std::invalid_argument("fit_exponent: degenerate (all betas equal)");
    for (std::size_t k = 0; k < m_stars.size(); ++k)
        if (m_stars[k] == 0) throw std::invalid_argument("fit_exponent: m* values must be positive");

    const double count = static_cast<double>(betas.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < betas.size(); ++k) {
        const double x = d * betas[k];
        const double y = std::log(static_cast<double>(m_stars[k]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    ExponentFit fit;
    fit.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / count;
    double rss = 0.0;
    for (std::size_t k = 0; k < betas.size(); ++k) {
        const double r = std::log(static_cast<double>(m_stars[k])) -
                         (fit.intercept + fit.slope * d * betas[k]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / count);
    return fit;
}

ScalingResult beta_sweep(const MStarSpec& base, const std::vector<double>& betas,
                         double window_fraction) {
    if (betas.size() < 3) throw std::invalid_argument("beta_sweep: need at least 3 betas");
    if (window_fraction <= 0.0 || window_fraction > 1.0)
        throw std::invalid_argument("beta_sweep: window_fraction must lie in (0,1]");

    ScalingResult result;
    result.beta_values = betas;
    result.d = model_stats(build_topology(base.topology)).d;
    for (double beta : betas) {
        MStarSpec spec = base;
        spec.topology.beta_value = beta;
        MStarResult r = find_m_star(spec);
        result.m_star_values.push_back(r.found ? r.m_star : 0);
        result.details.push_back(std::move(r));
    }

    // fit window: betas at or above the upper window_fraction of the range
    const auto [bmin_it, bmax_it] = std::minmax_element(betas.begin(), betas.end());
    const double cut = *bmax_it - window_fraction * (*bmax_it - *bmin_it);
    std::vector<std::pair<double, std::size_t>> points;
    for (std::size_t k = 0; k < betas.size(); ++k)
        if (result.m_star_values[k] > 0 && betas[k] >= cut)
            points.emplace_back(betas[k], result.m_star_values[k]);
    if (points.size() < 3) {
        points.clear();
        for (std::size_t k = 0; k < betas.size(); ++k)
            if (result.m_star_values[k] > 0) points.emplace_back(betas[k], result.m_star_values[k]);
        std::sort(points.begin(), points.end());
        if (points.size() > 3) points.erase(points.begin(), points.end() - 3);
    }
    if (points.size() >= 3) {
        std::vector<double> bs;
        std::vector<std::size_t> ms;
        for (auto& [b, v] : points) {
            bs.push_back(b);
            ms.push_back(v);
        }
        bool distinct = false;
        for (double b : bs)
            if (b != bs.front()) distinct = true;
        if (distinct) {
            const ExponentFit fit = fit_exponent(bs, ms, result.d);
            result.fitted_exponent = fit.slope;
            result.fit_intercept = fit.intercept;
            result.fit_residual = fit.residual;
            result.fit_valid = true;
        }
    }
    return result;
}

CLambdaSweepResult clambda_sweep(const MStarSpec& spec, const std::vector<double>& c_values) {
    if (c_values.size() < 2) throw std::invalid_argument("clambda_sweep: need at least 2 candidates");
    CLambdaSweepResult result;
    for (double c : c_values) {
        MStarSpec run = spec;
        run.reg.c_lambda = c;
        result.table.emplace_back(c, find_m_star(run));
    }
    std::size_t best_m = 0;
    for (const auto& [c, r] : result.table) {
        if (!r.found) continue;
        // ties go to the smaller c_lambda
        if (!result.any_found || r.m_star < best_m ||
            (r.m_star == best_m && c < result.best_c_lambda)) {
            result.any_found = true;
            result.best_c_lambda = c;
            best_m = r.m_star;
        }
    }
    return result;
}

}  // namespace isingdyn
