#include "isingdyn/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "isingdyn/parallel.hpp"

namespace isingdyn {

CouplingMatrixEstimate::CouplingMatrixEstimate(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("CouplingMatrixEstimate: n must be >= 1");
    upper_.assign(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0);
}

std::size_t CouplingMatrixEstimate::index(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n_ || i == j)
        throw std::invalid_argument("CouplingMatrixEstimate: bad pair index");
    return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i + 1) / 2 +
           static_cast<std::size_t>(j - i - 1);
}

double CouplingMatrixEstimate::value(int i, int j) const { return upper_[index(i, j)]; }

void CouplingMatrixEstimate::set(int i, int j, double v) { upper_[index(i, j)] = v; }

std::vector<Edge> CouplingMatrixEstimate::nonzero_entries() const {
    std::vector<Edge> out;
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
            const double v = value(i, j);
            if (v != 0.0) out.push_back({i, j, v});
        }
    return out;
}

bool EdgeSetEstimate::contains(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges.begin(), edges.end(), std::pair{i, j});
}

CouplingMatrixEstimate average_couplings(const std::vector<NeighborhoodEstimate>& estimates) {
    if (estimates.empty()) throw std::invalid_argument("average_couplings: no estimates");
    const int n = static_cast<int>(estimates.size());
    std::vector<const NeighborhoodEstimate*> by_node(static_cast<std::size_t>(n), nullptr);
    for (const auto& est : estimates) {
        if (est.node < 0 || est.node >= n || by_node[static_cast<std::size_t>(est.node)] != nullptr)
            throw std::invalid_argument("average_couplings: need exactly one estimate per node");
        if (static_cast<int>(est.couplings.size()) != n - 1)
            throw std::invalid_argument("average_couplings: estimate for node " +
                                        std::to_string(est.node) + " has wrong length");
        by_node[static_cast<std::size_t>(est.node)] = &est;
    }
    CouplingMatrixEstimate out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.set(i, j, 0.5 * (by_node[static_cast<std::size_t>(i)]->coupling_to(j) +
                                 by_node[static_cast<std::size_t>(j)]->coupling_to(i)));
    return out;
}

EdgeSetEstimate threshold_edges(const CouplingMatrixEstimate& est, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("threshold_edges: alpha must be positive");
    EdgeSetEstimate out;
    for (int i = 0; i < est.n(); ++i)
        for (int j = i + 1; j < est.n(); ++j)
            if (std::abs(est.value(i, j)) >= alpha / 2.0) out.edges.emplace_back(i, j);
    return out;
}

bool structure_success(const EdgeSetEstimate& est, const IsingModel& truth) {
    if (est.edges.size() != truth.edges().size()) return false;
    for (std::size_t k = 0; k < est.edges.size(); ++k)
        if (est.edges[k] != std::pair{truth.edges()[k].i, truth.edges()[k].j}) return false;
    return true;
}

StructureLearnResult learn_structure(const SampleSet& samples, const RegularizationConfig& reg,
                                     const SolverConfig& solver, double alpha, EstimatorKind kind,
                                     int thread_count) {
    const int n = samples.n();
    for (int u = 0; u < n; ++u)
        if (samples.count_for(u) == 0) throw NoDataError(u, "no updates; cannot fit neighborhood");

    std::vector<NeighborhoodEstimate> estimates(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), thread_count, [&](std::size_t u) {
        const std::size_t m_u =
            reg.per_node_counts ? samples.count_for(static_cast<int>(u)) : samples.size() / n;
        const double lambda = lambda_value(reg, n, m_u);
        estimates[u] = fit_neighborhood(samples, static_cast<int>(u), lambda, kind, solver);
    });

    CouplingMatrixEstimate averaged = average_couplings(estimates);
    EdgeSetEstimate edges = threshold_edges(averaged, alpha);
    return {std::move(estimates), std::move(averaged), std::move(edges)};
}

IsingModel model_from_estimate(const CouplingMatrixEstimate& couplings,
                               const std::vector<double>& fields) {
    return IsingModel(couplings.n(), couplings.nonzero_entries(), fields);
}

double info_theoretic_lower_bound(double beta, int d, double alpha, int n) {
    if (beta <= 0.0 || d <= 0 || alpha <= 0.0 || n <= 0)
        throw std::invalid_argument("info_theoretic_lower_bound: all arguments must be positive");
    return std::exp(2.0 * beta * d / 3.0) / (32.0 * d * alpha * std::exp(d + 3.0 * beta + 6.0)) * n *
           std::log(static_cast<double>(n));
}

}  // namespace isingdyn
