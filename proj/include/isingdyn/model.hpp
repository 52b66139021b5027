#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "isingdyn/rng.hpp"

namespace isingdyn {

using Spin = std::int8_t;                      // -1 or +1
using SpinConfiguration = std::vector<Spin>;   // length n

struct Edge {
    int i = 0;  // i < j after normalization
    int j = 0;
    double value = 0.0;
};

// Pairwise binary model: couplings J_ij on an undirected graph plus per-node
// fields H_i. Couplings are stored once per unordered pair; self-loops and
// zero/non-finite values are rejected. Immutable after construction and safe
// to share read-only across threads.
class IsingModel {
public:
    // Edges may arrive in either orientation; they are normalized to i < j
    // and sorted. An empty fields vector means all-zero fields.
    IsingModel(int n, std::vector<Edge> edges, std::vector<double> fields = {});

    int n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<double>& fields() const { return fields_; }
    double field(int i) const { return fields_[static_cast<std::size_t>(i)]; }

    bool has_edge(int i, int j) const;
    double coupling(int i, int j) const;  // 0 when (i,j) is not an edge

    const std::vector<std::pair<int, double>>& neighbors(int i) const {
        return adjacency_[static_cast<std::size_t>(i)];
    }

    // A_i(sigma) = sum_{j in ∂i} J_ij sigma_j + H_i
    double local_field(int i, const SpinConfiguration& sigma) const;

private:
    int n_;
    std::vector<Edge> edges_;
    std::vector<double> fields_;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

struct ModelStats {
    double alpha = 0.0;  // min |J_ij| over stored edges
    double beta = 0.0;   // max |J_ij|
    int d = 0;           // maximum node degree
};

enum class TopologyKind { PeriodicLattice, RandomRegular };
enum class CouplingPattern { Ferromagnetic, SpinGlass, FerroWithImpurity };

// Benchmark topology description. All generated models have zero fields and
// coupling magnitudes in {alpha_value, beta_value}: beta_value everywhere
// except the edges listed in impurity_edges, which carry alpha_value.
// Signs: Ferromagnetic is all-positive, FerroWithImpurity flips the impurity
// edges to -alpha_value, SpinGlass draws i.i.d. uniform signs from sign_seed.
struct TopologySpec {
    TopologyKind kind = TopologyKind::PeriodicLattice;
    int rows = 0;                 // PeriodicLattice
    int cols = 0;
    int n = 0;                    // RandomRegular
    int degree = 0;
    std::uint64_t graph_seed = 0;  // RandomRegular pairing model
    CouplingPattern pattern = CouplingPattern::Ferromagnetic;
    std::uint64_t sign_seed = 0;   // SpinGlass signs
    double beta_value = 0.0;
    double alpha_value = 0.0;
    // Edges carrying magnitude alpha_value. When empty, FerroWithImpurity
    // defaults to the lowest-indexed edge of the generated graph (the figure
    // insets pin the impurity location only pictorially); other patterns get
    // no alpha edges.
    std::vector<std::pair<int, int>> impurity_edges;

    int node_count() const { return kind == TopologyKind::PeriodicLattice ? rows * cols : n; }
};

IsingModel build_topology(const TopologySpec& spec);

// Requires at least one edge.
ModelStats model_stats(const IsingModel& model);

// Unnormalized Gibbs weight exp(sum_E J_ij s_i s_j + sum_V H_i s_i).
double gibbs_weight(const IsingModel& model, const SpinConfiguration& sigma);

// Exhaustive enumeration over all 2^n configurations; requires n <= 24.
double exact_partition_function(const IsingModel& model);

}  // namespace isingdyn
