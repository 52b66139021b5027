#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isingdyn/dynamics.hpp"
#include "isingdyn/model.hpp"

namespace isingdyn {

enum class EstimatorKind { DRise, DRple };

// Raised when an operation needs updates of a node that has none.
class NoDataError : public std::runtime_error {
public:
    NoDataError(int node, const std::string& what)
        : std::runtime_error("node " + std::to_string(node) + ": " + what), node_(node) {}
    int node() const { return node_; }

private:
    int node_;
};

// Fitted neighborhood of one node. couplings has length n-1 and is indexed by
// j != node via packed index (j < node ? j : j-1).
struct NeighborhoodEstimate {
    int node = 0;
    std::vector<double> couplings;
    double field = 0.0;
    double objective_value = 0.0;  // loss + lambda * l1(couplings) at the output
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t overflow_clamps = 0;  // exponent clamps hit while solving

    double coupling_to(int j) const {
        return couplings[static_cast<std::size_t>(j < node ? j : j - 1)];
    }
};

struct RegularizationConfig {
    double c_lambda = 0.1;
    double delta = 0.05;        // global failure probability
    bool per_node_counts = true;  // lambda from each node's m_i; false uses m/n
};

struct SolverConfig {
    // Auto resolves per estimator: coordinate descent for D-RISE (closed-form
    // coordinate minima), proximal gradient for D-RPLE.
    enum class Method { Auto, CoordinateDescent, ProximalGradient };
    Method method = Method::Auto;
    double tolerance = 1e-6;           // KKT subgradient residual
    std::size_t max_iterations = 100000;
    double cd_clamp = 30.0;            // per-coordinate magnitude cap
    bool fixed_cycle = false;          // CD visits coordinates in index order
    std::uint64_t shuffle_seed = 0x51AB5EED;
};

// lambda = c_lambda * sqrt(log(n^2/delta') / m_u) with delta' = delta/n.
double lambda_value(const RegularizationConfig& config, int n, std::size_t m_u);

// D-ISO: mean over updates of node u of exp(-sigma_u^1 (J_u . sigma^0 + H_u)).
// J_u is packed (length n-1). Exponents are clamped to +-700; clamp events are
// counted into *overflow_clamps when given.
double d_iso_value(const SampleSet& samples, int u, std::span<const double> J_u, double H_u,
                   std::size_t* overflow_clamps = nullptr);

// Gradient of D-ISO, length n: n-1 coupling coordinates then the field.
std::vector<double> d_iso_gradient(const SampleSet& samples, int u, std::span<const double> J_u,
                                   double H_u);

// D-PL: negative mean log conditional likelihood,
// -(1/m_u) sum ln(1 + sigma_u^1 tanh(J_u . sigma^0 + H_u)).
double d_pl_value(const SampleSet& samples, int u, std::span<const double> J_u, double H_u);

std::vector<double> d_pl_gradient(const SampleSet& samples, int u, std::span<const double> J_u,
                                  double H_u);

// Exact minimizer of cosh x - kappa sinh x + mu |x| with kappa = b/a:
// 0 when mu >= |kappa|, else log((sqrt(1-kappa^2+mu^2) - mu sign kappa)/(1-kappa)),
// clamped to +-clamp. Requires a > 0 and |kappa| <= 1 + 1e-12; the objective
// structure guarantees the latter.
double cd_coordinate_minimum(double a, double b, double mu, double clamp = 30.0);

// D-RISE: minimize d_iso_value + lambda * l1(J_u), field unpenalized.
// Coordinate descent (default) uses the closed-form coordinate minimum;
// Method::ProximalGradient runs ISTA with backtracking instead.
NeighborhoodEstimate fit_drise(const SampleSet& samples, int u, double lambda,
                               const SolverConfig& solver = {});

// D-RPLE: minimize d_pl_value + lambda * l1(J_u) by proximal gradient with
// backtracking line search (default). Coordinate descent solves each 1-d
// subproblem by bisection on the derivative.
NeighborhoodEstimate fit_drple(const SampleSet& samples, int u, double lambda,
                               const SolverConfig& solver = {});

NeighborhoodEstimate fit_neighborhood(const SampleSet& samples, int u, double lambda,
                                      EstimatorKind kind, const SolverConfig& solver = {});

enum class GradientTermKind { DIsoX, DPlZ };

struct GradientTermStats {
    double mean = 0.0;
    double second_moment = 0.0;
    double max_abs = 0.0;
};

// Draws m M-regime updates of node u (uniform initial configurations) from a
// zero-field model and returns statistics of the per-sample gradient term at
// the true parameters: X_uk = -s1 s0_k exp(-s1 A_u) for D-ISO, or
// Z_uk = s0_k (tanh A_u - s1) for D-PL.
GradientTermStats gradient_term_statistics(const IsingModel& model, int u, int k, std::size_t m,
                                           RngStream& rng,
                                           GradientTermKind kind = GradientTermKind::DIsoX);

}  // namespace isingdyn
