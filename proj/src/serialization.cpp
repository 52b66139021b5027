#include "isingdyn/serialization.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace isingdyn {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

nlohmann::json model_to_json(const IsingModel& model) {
    nlohmann::json j;
    j["n"] = model.n();
    auto edges = nlohmann::json::array();
    for (const auto& e : model.edges()) edges.push_back({e.i, e.j, e.value});
    j["edges"] = std::move(edges);
    j["fields"] = model.fields();
    return j;
}

IsingModel model_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        const int i = e.at(0).get<int>();
        const int k = e.at(1).get<int>();
        if (i >= k)
            throw std::runtime_error("model file: edge [" + std::to_string(i) + "," +
                                     std::to_string(k) + "] violates i < j");
        edges.push_back({i, k, e.at(2).get<double>()});
    }
    std::vector<double> fields = j.at("fields").get<std::vector<double>>();
    return IsingModel(n, std::move(edges), std::move(fields));
}

void save_model(const IsingModel& model, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << model_to_json(model).dump() << '\n';
}

IsingModel load_model(const std::filesystem::path& path) {
    auto in = open_input(path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

std::string regime_name(Regime regime) { return regime == Regime::T ? "T" : "M"; }

Regime regime_from_name(const std::string& name) {
    if (name == "T") return Regime::T;
    if (name == "M") return Regime::M;
    throw std::runtime_error("unknown regime tag: " + name);
}

void save_samples_jsonl(const SampleSet& samples, const std::filesystem::path& path) {
    auto out = open_output(path);
    nlohmann::json header;
    header["n"] = samples.n();
    header["regime"] = regime_name(samples.regime());
    header["m"] = samples.size();
    out << header.dump() << '\n';
    for (std::size_t t = 0; t < samples.size(); ++t) {
        nlohmann::json row;
        auto s0 = samples.sigma0(t);
        row["s0"] = std::vector<int>(s0.begin(), s0.end());
        std::vector<int> s1(s0.begin(), s0.end());
        s1[static_cast<std::size_t>(samples.updated_node(t))] = samples.sigma1_value(t);
        row["s1"] = std::move(s1);
        row["I"] = samples.updated_node(t);
        out << row.dump() << '\n';
    }
}

SampleSet load_samples_jsonl(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("samples file is empty: " + path.string());
    const nlohmann::json header = nlohmann::json::parse(line);
    const int n = header.at("n").get<int>();
    const auto m = header.at("m").get<std::size_t>();
    SampleSet samples(n, regime_from_name(header.at("regime").get<std::string>()));

    SpinConfiguration s0(static_cast<std::size_t>(n));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json row = nlohmann::json::parse(line);
        const auto& js0 = row.at("s0");
        const auto& js1 = row.at("s1");
        if (static_cast<int>(js0.size()) != n || static_cast<int>(js1.size()) != n)
            throw std::runtime_error("samples file: configuration length mismatch");
        const int node = row.at("I").get<int>();
        int flips = 0;
        for (int i = 0; i < n; ++i) {
            const int a = js0.at(static_cast<std::size_t>(i)).get<int>();
            const int b = js1.at(static_cast<std::size_t>(i)).get<int>();
            if ((a != 1 && a != -1) || (b != 1 && b != -1))
                throw std::runtime_error("samples file: spins must be +1 or -1");
            if (a != b) {
                ++flips;
                if (i != node)
                    throw std::runtime_error("samples file: spin changed away from the updated node");
            }
            s0[static_cast<std::size_t>(i)] = static_cast<Spin>(a);
        }
        if (flips > 1) throw std::runtime_error("samples file: multiple spins changed in one sample");
        samples.append(s0, node, static_cast<Spin>(js1.at(static_cast<std::size_t>(node)).get<int>()));
    }
    if (samples.size() != m)
        throw std::runtime_error("samples file: header m=" + std::to_string(m) + " but " +
                                 std::to_string(samples.size()) + " records found");
    return samples;
}

namespace {

constexpr char kSampleMagic[8] = {'I', 'S', 'D', 'Y', 'N', 'S', '0', '1'};

template <class T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("binary samples file truncated");
    return v;
}

}  // namespace

void save_samples_binary(const SampleSet& samples, const std::filesystem::path& path) {
    auto out = open_output(path);
    out.write(kSampleMagic, sizeof(kSampleMagic));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(samples.n()));
    write_raw<std::uint8_t>(out, samples.regime() == Regime::T ? 0 : 1);
    write_raw<std::uint64_t>(out, samples.size());
    const int n = samples.n();
    const int bytes = (n + 7) / 8;
    std::vector<std::uint8_t> packed(static_cast<std::size_t>(bytes));
    for (std::size_t t = 0; t < samples.size(); ++t) {
        std::fill(packed.begin(), packed.end(), 0);
        auto s0 = samples.sigma0(t);
        for (int i = 0; i < n; ++i)
            if (s0[static_cast<std::size_t>(i)] > 0)
                packed[static_cast<std::size_t>(i / 8)] |= static_cast<std::uint8_t>(1u << (i % 8));
        out.write(reinterpret_cast<const char*>(packed.data()), bytes);
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(samples.updated_node(t)));
        write_raw<std::uint8_t>(out, samples.sigma1_value(t) > 0 ? 1 : 0);
    }
}

SampleSet load_samples_binary(const std::filesystem::path& path) {
    auto in = open_input(path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kSampleMagic))
        throw std::runtime_error("not a binary samples file: " + path.string());
    const auto n = static_cast<int>(read_raw<std::uint32_t>(in));
    const auto regime = read_raw<std::uint8_t>(in) == 0 ? Regime::T : Regime::M;
    const auto m = read_raw<std::uint64_t>(in);
    SampleSet samples(n, regime);
    const int bytes = (n + 7) / 8;
    std::vector<std::uint8_t> packed(static_cast<std::size_t>(bytes));
    SpinConfiguration s0(static_cast<std::size_t>(n));
    for (std::uint64_t t = 0; t < m; ++t) {
        in.read(reinterpret_cast<char*>(packed.data()), bytes);
        if (!in) throw std::runtime_error("binary samples file truncated");
        for (int i = 0; i < n; ++i)
            s0[static_cast<std::size_t>(i)] =
                packed[static_cast<std::size_t>(i / 8)] & (1u << (i % 8)) ? 1 : -1;
        const auto node = static_cast<int>(read_raw<std::uint32_t>(in));
        const Spin value = read_raw<std::uint8_t>(in) ? 1 : -1;
        samples.append(s0, node, value);
    }
    return samples;
}

nlohmann::json estimate_to_json(const NeighborhoodEstimate& est) {
    nlohmann::json j;
    j["u"] = est.node;
    j["J"] = est.couplings;
    j["H"] = est.field;
    j["objective"] = est.objective_value;
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    return j;
}

NeighborhoodEstimate estimate_from_json(const nlohmann::json& j) {
    NeighborhoodEstimate est;
    est.node = j.at("u").get<int>();
    est.couplings = j.at("J").get<std::vector<double>>();
    est.field = j.at("H").get<double>();
    est.objective_value = j.at("objective").get<double>();
    est.iterations = j.at("iterations").get<std::size_t>();
    est.converged = j.at("converged").get<bool>();
    return est;
}

nlohmann::json edge_set_to_json(const EdgeSetEstimate& edges) {
    auto j = nlohmann::json::array();
    for (const auto& [i, k] : edges.edges) j.push_back({i, k});
    return j;
}

EdgeSetEstimate edge_set_from_json(const nlohmann::json& j) {
    EdgeSetEstimate out;
    for (const auto& e : j) out.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    std::sort(out.edges.begin(), out.edges.end());
    return out;
}

nlohmann::json coupling_matrix_to_json(const CouplingMatrixEstimate& est) {
    nlohmann::json j;
    j["n"] = est.n();
    auto entries = nlohmann::json::array();
    for (const auto& e : est.nonzero_entries()) entries.push_back({e.i, e.j, e.value});
    j["couplings"] = std::move(entries);
    return j;
}

nlohmann::json correlation_to_json(const CorrelationMatrix& corr) {
    nlohmann::json j;
    j["n"] = corr.n;
    auto rows = nlohmann::json::array();
    for (int i = 0; i < corr.n; ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < corr.n; ++k) row.push_back(corr.at(i, k));
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    j["zero_variance_nodes"] = corr.zero_variance_nodes;
    return j;
}

void save_correlation_csv(const CorrelationMatrix& corr, const std::filesystem::path& path) {
    auto out = open_output(path);
    out.precision(17);
    for (int i = 0; i < corr.n; ++i) {
        for (int k = 0; k < corr.n; ++k) {
            if (k) out << ',';
            out << corr.at(i, k);
        }
        out << '\n';
    }
}

std::vector<std::vector<double>> load_spike_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> spikes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw std::runtime_error("spike csv: malformed line " + std::to_string(line_no));
        if (line_no == 1 && a.find_first_not_of("0123456789 \t") != std::string::npos)
            continue;  // header
        const int neuron = std::stoi(a);
        const double time = std::stod(b);
        if (neuron < 0) throw std::runtime_error("spike csv: negative neuron id");
        if (static_cast<std::size_t>(neuron) >= spikes.size())
            spikes.resize(static_cast<std::size_t>(neuron) + 1);
        spikes[static_cast<std::size_t>(neuron)].push_back(time);
    }
    if (spikes.empty()) throw std::runtime_error("spike csv: no rows in " + path.string());
    return spikes;
}

SpikeRaster load_raster_csv(const std::filesystem::path& path, double bin_ms) {
    auto in = open_input(path);
    std::vector<std::vector<Spin>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<Spin> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            const int v = std::stoi(cell);
            if (v != 1 && v != -1) throw std::runtime_error("raster csv: entries must be +1 or -1");
            row.push_back(static_cast<Spin>(v));
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("raster csv: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("raster csv: no rows in " + path.string());
    SpikeRaster raster;
    raster.n_neurons = static_cast<int>(rows.size());
    raster.n_bins = static_cast<int>(rows.front().size());
    raster.bin_ms = bin_ms;
    raster.spins.reserve(static_cast<std::size_t>(raster.n_neurons) * raster.n_bins);
    for (const auto& row : rows) raster.spins.insert(raster.spins.end(), row.begin(), row.end());
    return raster;
}

namespace {

const char* pattern_name(CouplingPattern p) {
    switch (p) {
        case CouplingPattern::Ferromagnetic: return "ferromagnetic";
        case CouplingPattern::SpinGlass: return "spin_glass";
        case CouplingPattern::FerroWithImpurity: return "ferro_with_impurity";
    }
    return "";
}

}  // namespace

nlohmann::json topology_to_json(const TopologySpec& spec) {
    nlohmann::json j;
    if (spec.kind == TopologyKind::PeriodicLattice) {
        j["kind"] = "periodic_lattice";
        j["rows"] = spec.rows;
        j["cols"] = spec.cols;
    } else {
        j["kind"] = "random_regular";
        j["n"] = spec.n;
        j["degree"] = spec.degree;
        j["graph_seed"] = spec.graph_seed;
    }
    j["pattern"] = pattern_name(spec.pattern);
    if (spec.pattern == CouplingPattern::SpinGlass) j["sign_seed"] = spec.sign_seed;
    j["beta"] = spec.beta_value;
    j["alpha"] = spec.alpha_value;
    auto imp = nlohmann::json::array();
    for (const auto& [a, b] : spec.impurity_edges) imp.push_back({a, b});
    j["impurity_edges"] = std::move(imp);
    return j;
}

TopologySpec topology_from_json(const nlohmann::json& j) {
    TopologySpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "periodic_lattice") {
        spec.kind = TopologyKind::PeriodicLattice;
        spec.rows = j.at("rows").get<int>();
        spec.cols = j.at("cols").get<int>();
    } else if (kind == "random_regular") {
        spec.kind = TopologyKind::RandomRegular;
        spec.n = j.at("n").get<int>();
        spec.degree = j.at("degree").get<int>();
        spec.graph_seed = j.value("graph_seed", std::uint64_t{0});
    } else {
        throw std::runtime_error("unknown topology kind: " + kind);
    }
    const std::string pattern = j.value("pattern", "ferromagnetic");
    if (pattern == "ferromagnetic") spec.pattern = CouplingPattern::Ferromagnetic;
    else if (pattern == "spin_glass") spec.pattern = CouplingPattern::SpinGlass;
    else if (pattern == "ferro_with_impurity") spec.pattern = CouplingPattern::FerroWithImpurity;
    else throw std::runtime_error("unknown coupling pattern: " + pattern);
    spec.sign_seed = j.value("sign_seed", std::uint64_t{0});
    spec.beta_value = j.at("beta").get<double>();
    spec.alpha_value = j.value("alpha", spec.beta_value);
    if (j.contains("impurity_edges"))
        for (const auto& e : j.at("impurity_edges"))
            spec.impurity_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return spec;
}

}  // namespace isingdyn
