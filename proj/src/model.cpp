#include "isingdyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace isingdyn {

namespace {

std::string edge_name(int i, int j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

IsingModel::IsingModel(int n, std::vector<Edge> edges, std::vector<double> fields)
    : n_(n), edges_(std::move(edges)), fields_(std::move(fields)) {
    if (n_ < 1) throw std::invalid_argument("IsingModel: n must be >= 1");
    if (fields_.empty()) fields_.assign(static_cast<std::size_t>(n_), 0.0);
    if (static_cast<int>(fields_.size()) != n_)
        throw std::invalid_argument("IsingModel: fields length must equal n");
    for (double h : fields_)
        if (!std::isfinite(h)) throw std::invalid_argument("IsingModel: non-finite field");

    for (auto& e : edges_) {
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i == e.j) throw std::invalid_argument("IsingModel: self-loop " + edge_name(e.i, e.j));
        if (e.i < 0 || e.j >= n_)
            throw std::invalid_argument("IsingModel: edge " + edge_name(e.i, e.j) + " out of range");
        if (!std::isfinite(e.value) || e.value == 0.0)
            throw std::invalid_argument("IsingModel: coupling on " + edge_name(e.i, e.j) +
                                        " must be nonzero and finite");
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::pair{a.i, a.j} < std::pair{b.i, b.j}; });
    for (std::size_t k = 1; k < edges_.size(); ++k)
        if (edges_[k - 1].i == edges_[k].i && edges_[k - 1].j == edges_[k].j)
            throw std::invalid_argument("IsingModel: duplicate edge " +
                                        edge_name(edges_[k].i, edges_[k].j));

    adjacency_.assign(static_cast<std::size_t>(n_), {});
    for (const auto& e : edges_) {
        adjacency_[static_cast<std::size_t>(e.i)].emplace_back(e.j, e.value);
        adjacency_[static_cast<std::size_t>(e.j)].emplace_back(e.i, e.value);
    }
}

bool IsingModel::has_edge(int i, int j) const {
    for (const auto& [k, v] : neighbors(i))
        if (k == j) return true;
    return false;
}

double IsingModel::coupling(int i, int j) const {
    for (const auto& [k, v] : neighbors(i))
        if (k == j) return v;
    return 0.0;
}

double IsingModel::local_field(int i, const SpinConfiguration& sigma) const {
    double a = fields_[static_cast<std::size_t>(i)];
    for (const auto& [j, v] : adjacency_[static_cast<std::size_t>(i)])
        a += v * static_cast<double>(sigma[static_cast<std::size_t>(j)]);
    return a;
}

namespace {

std::vector<std::pair<int, int>> lattice_edges(int rows, int cols) {
    std::set<std::pair<int, int>> out;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int a = id(r, c);
            int right = id(r, (c + 1) % cols);
            int down = id((r + 1) % rows, c);
            if (a != right) out.insert(std::minmax(a, right));
            if (a != down) out.insert(std::minmax(a, down));
        }
    }
    return {out.begin(), out.end()};
}

// Pairing/configuration model with rejection of self-loops and multi-edges.
std::vector<std::pair<int, int>> random_regular_edges(int n, int degree, std::uint64_t seed) {
    RngStream rng = RngStream(seed).derive(0x5247);  // "RG"
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * degree);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        stubs.clear();
        for (int v = 0; v < n; ++v)
            for (int k = 0; k < degree; ++k) stubs.push_back(v);
        for (std::size_t k = stubs.size(); k > 1; --k)
            std::swap(stubs[k - 1], stubs[static_cast<std::size_t>(rng.next_index(static_cast<int>(k)))]);
        std::set<std::pair<int, int>> edges;
        bool ok = true;
        for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
            int a = stubs[k], b = stubs[k + 1];
            if (a == b || !edges.insert(std::minmax(a, b)).second) {
                ok = false;
                break;
            }
        }
        if (ok) return {edges.begin(), edges.end()};
    }
    throw std::runtime_error("random_regular_edges: pairing model failed to produce a simple graph");
}

}  // namespace

IsingModel build_topology(const TopologySpec& spec) {
    if (spec.beta_value <= 0.0 || spec.alpha_value <= 0.0)
        throw std::invalid_argument("build_topology: alpha_value and beta_value must be positive");

    std::vector<std::pair<int, int>> pairs;
    int n = 0;
    if (spec.kind == TopologyKind::PeriodicLattice) {
        if (spec.rows < 1 || spec.cols < 1 || spec.rows * spec.cols < 2)
            throw std::invalid_argument("build_topology: invalid lattice dimensions");
        n = spec.rows * spec.cols;
        pairs = lattice_edges(spec.rows, spec.cols);
    } else {
        if (spec.n < 2 || spec.degree < 1 || spec.degree >= spec.n)
            throw std::invalid_argument("build_topology: invalid random-regular parameters");
        if ((static_cast<long long>(spec.n) * spec.degree) % 2 != 0)
            throw std::invalid_argument("build_topology: n*degree must be even");
        n = spec.n;
        pairs = random_regular_edges(spec.n, spec.degree, spec.graph_seed);
    }

    std::set<std::pair<int, int>> impurities;
    for (auto [i, j] : spec.impurity_edges) impurities.insert(std::minmax(i, j));
    if (impurities.empty() && spec.pattern == CouplingPattern::FerroWithImpurity)
        impurities.insert(pairs.front());
    for (const auto& imp : impurities)
        if (std::find(pairs.begin(), pairs.end(), imp) == pairs.end())
            throw std::invalid_argument("build_topology: impurity edge " +
                                        edge_name(imp.first, imp.second) + " not in generated graph");

    RngStream sign_rng = RngStream(spec.sign_seed).derive(0x5347);  // "SG"
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        const bool weak = impurities.count({i, j}) > 0;
        double value = weak ? spec.alpha_value : spec.beta_value;
        switch (spec.pattern) {
            case CouplingPattern::Ferromagnetic:
                break;
            case CouplingPattern::FerroWithImpurity:
                if (weak) value = -value;
                break;
            case CouplingPattern::SpinGlass:
                if (sign_rng.next_bernoulli(0.5)) value = -value;
                break;
        }
        edges.push_back({i, j, value});
    }
    return IsingModel(n, std::move(edges));
}

ModelStats model_stats(const IsingModel& model) {
    if (model.edges().empty()) throw std::invalid_argument("model_stats: model has no edges");
    ModelStats s;
    s.alpha = std::abs(model.edges().front().value);
    s.beta = s.alpha;
    for (const auto& e : model.edges()) {
        s.alpha = std::min(s.alpha, std::abs(e.value));
        s.beta = std::max(s.beta, std::abs(e.value));
    }
    for (int i = 0; i < model.n(); ++i)
        s.d = std::max(s.d, static_cast<int>(model.neighbors(i).size()));
    return s;
}

double gibbs_weight(const IsingModel& model, const SpinConfiguration& sigma) {
    if (static_cast<int>(sigma.size()) != model.n())
        throw std::invalid_argument("gibbs_weight: configuration length mismatch");
    double energy = 0.0;
    for (const auto& e : model.edges())
        energy += e.value * static_cast<double>(sigma[static_cast<std::size_t>(e.i)]) *
                  static_cast<double>(sigma[static_cast<std::size_t>(e.j)]);
    for (int i = 0; i < model.n(); ++i)
        energy += model.field(i) * static_cast<double>(sigma[static_cast<std::size_t>(i)]);
    return std::exp(energy);
}

double exact_partition_function(const IsingModel& model) {
    const int n = model.n();
    if (n > 24) throw std::invalid_argument("exact_partition_function: n exceeds enumeration limit 24");
    SpinConfiguration sigma(static_cast<std::size_t>(n));
    long double z = 0.0L;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : -1;
        z += gibbs_weight(model, sigma);
    }
    return static_cast<double>(z);
}

}  // namespace isingdyn
