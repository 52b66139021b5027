#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "isingdyn/active.hpp"
#include "isingdyn/dynamics.hpp"
#include "isingdyn/estimators.hpp"
#include "isingdyn/model.hpp"

namespace isingdyn {

struct MGridSpec {
    std::size_t m_min = 0;   // 0 means 100 * n
    std::size_t m_max = 50000000;
    double factor = 1.3;
    int bisection_rounds = 1;  // refinement between last failure and first success
};

struct MStarSpec {
    TopologySpec topology;
    Regime regime = Regime::M;
    EstimatorKind estimator = EstimatorKind::DRise;
    RegularizationConfig reg;
    SolverConfig solver;
    // 45 consecutive successes is the paper protocol; 10 is the desk default.
    int consecutive_successes = 10;
    MGridSpec m_grid;
    std::uint64_t master_seed = 0;
    int thread_count = 0;
    std::size_t t_regime_burn_in = 0;
    // When set, each trial is an independent active-learning run on the same
    // total budget instead of a plain regime run.
    std::optional<ActiveConfig> active;
};

struct MStarLevel {
    std::size_t m = 0;
    int successes = 0;
    int trials = 0;
};

struct MStarResult {
    bool found = false;
    std::size_t m_star = 0;       // valid when found
    double mean_m_i = 0.0;        // mean per-node updates observed at m_star
    std::vector<MStarLevel> levels;
    std::uint64_t master_seed = 0;
};

// Smallest m (ascending geometric grid, then bisection refinement) for which
// `consecutive_successes` independent trials at m all reconstruct the exact
// edge set. Exhausting the grid yields found=false rather than a throw.
MStarResult find_m_star(const MStarSpec& spec);

// Runs one seeded trial at sample budget m: generate (or actively query), fit
// every node, average, threshold at the ground-truth alpha. Exposed for
// success-rate diagnostics.
bool m_star_trial(const IsingModel& truth, const MStarSpec& spec, std::size_t m, RngStream rng,
                  double* mean_m_i = nullptr);

struct ExponentFit {
    double slope = 0.0;      // per beta*d
    double intercept = 0.0;
    double residual = 0.0;   // rms of ln m* residuals
};

// Ordinary least squares of ln m* against d*beta. Requires >= 3 points with
// at least two distinct betas.
ExponentFit fit_exponent(std::span<const double> betas, std::span<const std::size_t> m_stars, int d);

struct ScalingResult {
    std::vector<double> beta_values;
    std::vector<std::size_t> m_star_values;  // 0 where the search hit the grid bound
    std::vector<MStarResult> details;
    double fitted_exponent = 0.0;
    double fit_intercept = 0.0;
    double fit_residual = 0.0;
    bool fit_valid = false;
    int d = 0;
};

// find_m_star per beta, then a log-linear fit over the upper part of the beta
// range (slopes are read off the asymptotic regime; window_fraction 0.5 keeps
// the top half, widened to three points when needed).
ScalingResult beta_sweep(const MStarSpec& base, const std::vector<double>& betas,
                         double window_fraction = 0.5);

struct CLambdaSweepResult {
    double best_c_lambda = 0.0;
    bool any_found = false;
    std::vector<std::pair<double, MStarResult>> table;
};

// m* per candidate c_lambda; returns the argmin with ties broken toward the
// smaller candidate. The full table is always populated.
CLambdaSweepResult clambda_sweep(const MStarSpec& spec, const std::vector<double>& c_values);

}  // namespace isingdyn
