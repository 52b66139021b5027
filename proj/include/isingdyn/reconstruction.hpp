#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "isingdyn/estimators.hpp"
#include "isingdyn/model.hpp"

namespace isingdyn {

// Symmetric consensus couplings, stored once per unordered pair.
class CouplingMatrixEstimate {
public:
    explicit CouplingMatrixEstimate(int n);

    int n() const { return n_; }
    double value(int i, int j) const;
    void set(int i, int j, double v);

    // Nonzero entries as (i, j, value) with i < j, sorted.
    std::vector<Edge> nonzero_entries() const;

private:
    std::size_t index(int i, int j) const;
    int n_;
    std::vector<double> upper_;  // n(n-1)/2
};

struct EdgeSetEstimate {
    std::vector<std::pair<int, int>> edges;  // i < j, sorted
    bool contains(int i, int j) const;
};

// J_ij^avg = (J_ij + J_ji)/2, computed once per unordered pair.
// Expects exactly one estimate per node, in any order.
CouplingMatrixEstimate average_couplings(const std::vector<NeighborhoodEstimate>& estimates);

// Keeps (i,j) iff |J_ij^avg| >= alpha/2 (boundary included).
EdgeSetEstimate threshold_edges(const CouplingMatrixEstimate& est, double alpha);

bool structure_success(const EdgeSetEstimate& est, const IsingModel& truth);

struct StructureLearnResult {
    std::vector<NeighborhoodEstimate> node_estimates;
    CouplingMatrixEstimate couplings;
    EdgeSetEstimate edges;
};

// Per-node fit (lambda from each node's update count), coupling averaging,
// and thresholding at alpha/2. Node fits run in parallel.
StructureLearnResult learn_structure(const SampleSet& samples, const RegularizationConfig& reg,
                                     const SolverConfig& solver, double alpha, EstimatorKind kind,
                                     int thread_count = 0);

// Builds a model from averaged couplings (nonzero entries only) plus the
// per-node fitted fields.
IsingModel model_from_estimate(const CouplingMatrixEstimate& couplings,
                               const std::vector<double>& fields);

// e^{2 beta d / 3} / (32 d alpha e^{d + 3 beta + 6}) * n ln n
double info_theoretic_lower_bound(double beta, int d, double alpha, int n);

}  // namespace isingdyn
