#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "isingdyn/serialization.hpp"

using namespace isingdyn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "isingdyn_test_io";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SampleSet make_samples(Regime regime) {
    TopologySpec spec;
    spec.kind = TopologyKind::PeriodicLattice;
    spec.rows = 2;
    spec.cols = 3;
    spec.pattern = CouplingPattern::SpinGlass;
    spec.sign_seed = 5;
    spec.beta_value = 0.9;
    spec.alpha_value = 0.4;
    const IsingModel model = build_topology(spec);
    RngStream rng(8080);
    return regime == Regime::T ? run_t_regime(model, InitialDistribution::uniform(), 64, rng)
                               : run_m_regime(model, InitialDistribution::uniform(), 64, rng);
}

}  // namespace

TEST_CASE("model json round-trips byte-identically") {
    const IsingModel model(4, {{0, 1, 0.5}, {1, 3, -1.25}, {0, 2, 0.125}}, {0.0, 0.5, -0.5, 1.0});
    const fs::path a = temp_dir() / "model_a.json";
    const fs::path b = temp_dir() / "model_b.json";
    save_model(model, a);
    save_model(load_model(a), b);
    CHECK(slurp(a) == slurp(b));

    const IsingModel loaded = load_model(a);
    CHECK(loaded.n() == 4);
    CHECK(loaded.coupling(1, 3) == -1.25);
    CHECK(loaded.field(3) == 1.0);
}

TEST_CASE("model json rejects reversed edges") {
    nlohmann::json j;
    j["n"] = 3;
    j["edges"] = nlohmann::json::array({{1, 0, 0.5}});
    j["fields"] = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(model_from_json(j), std::runtime_error);
}

TEST_CASE("samples jsonl round-trips byte-identically in both regimes") {
    for (Regime regime : {Regime::T, Regime::M}) {
        const SampleSet samples = make_samples(regime);
        const fs::path a = temp_dir() / "samples_a.jsonl";
        const fs::path b = temp_dir() / "samples_b.jsonl";
        save_samples_jsonl(samples, a);
        const SampleSet loaded = load_samples_jsonl(a);
        save_samples_jsonl(loaded, b);
        CHECK(slurp(a) == slurp(b));
        CHECK(loaded.regime() == regime);
        REQUIRE(loaded.size() == samples.size());
        loaded.validate();
        for (std::size_t t = 0; t < samples.size(); ++t) {
            CHECK(loaded.updated_node(t) == samples.updated_node(t));
            CHECK(loaded.sigma1_value(t) == samples.sigma1_value(t));
        }
    }
}

TEST_CASE("jsonl loader rejects corrupted records") {
    const fs::path path = temp_dir() / "bad.jsonl";
    {
        std::ofstream out(path);
        out << R"({"m":1,"n":2,"regime":"M"})" << '\n';
        out << R"({"I":0,"s0":[1,1],"s1":[-1,-1]})" << '\n';  // two coordinates changed
    }
    CHECK_THROWS_AS(load_samples_jsonl(path), std::runtime_error);
}

TEST_CASE("binary mirror stores the same samples") {
    const SampleSet samples = make_samples(Regime::T);
    const fs::path path = temp_dir() / "samples.bin";
    save_samples_binary(samples, path);
    const SampleSet loaded = load_samples_binary(path);
    REQUIRE(loaded.size() == samples.size());
    CHECK(loaded.regime() == samples.regime());
    for (std::size_t t = 0; t < samples.size(); ++t) {
        CHECK(loaded.updated_node(t) == samples.updated_node(t));
        CHECK(loaded.sigma1_value(t) == samples.sigma1_value(t));
        CHECK(std::equal(loaded.sigma0(t).begin(), loaded.sigma0(t).end(),
                         samples.sigma0(t).begin()));
    }
}

TEST_CASE("estimate json carries the spec fields") {
    NeighborhoodEstimate est;
    est.node = 3;
    est.couplings = {0.5, 0.0, -0.25};
    est.field = 0.125;
    est.objective_value = 0.75;
    est.iterations = 12;
    est.converged = true;
    const nlohmann::json j = estimate_to_json(est);
    CHECK(j.at("u") == 3);
    CHECK(j.at("J").size() == 3);
    const NeighborhoodEstimate back = estimate_from_json(j);
    CHECK(back.node == est.node);
    CHECK(back.couplings == est.couplings);
    CHECK(back.field == est.field);
    CHECK(back.objective_value == est.objective_value);
    CHECK(back.iterations == est.iterations);
    CHECK(back.converged == est.converged);
}

TEST_CASE("edge set json is a sorted pair list") {
    EdgeSetEstimate edges{{{0, 1}, {1, 2}}};
    const nlohmann::json j = edge_set_to_json(edges);
    CHECK(j.dump() == "[[0,1],[1,2]]");
    const EdgeSetEstimate back = edge_set_from_json(nlohmann::json::parse("[[1,2],[0,1]]"));
    CHECK(back.edges == edges.edges);
}

TEST_CASE("spike csv loads per-neuron time lists") {
    const fs::path path = temp_dir() / "spikes.csv";
    {
        std::ofstream out(path);
        out << "neuron_id,time_ms\n";
        out << "0,5.5\n0,17.25\n2,3.0\n0,40.0\n";
    }
    const auto spikes = load_spike_csv(path);
    REQUIRE(spikes.size() == 3);
    CHECK(spikes[0] == std::vector<double>{5.5, 17.25, 40.0});
    CHECK(spikes[1].empty());
    CHECK(spikes[2] == std::vector<double>{3.0});
}

TEST_CASE("raster csv loads a +-1 grid") {
    const fs::path path = temp_dir() / "raster.csv";
    {
        std::ofstream out(path);
        out << "1,-1,1\n-1,-1,1\n";
    }
    const SpikeRaster raster = load_raster_csv(path, 20.0);
    CHECK(raster.n_neurons == 2);
    CHECK(raster.n_bins == 3);
    CHECK(raster.at(0, 0) == 1);
    CHECK(raster.at(1, 2) == 1);

    const fs::path bad = temp_dir() / "raster_bad.csv";
    {
        std::ofstream out(bad);
        out << "1,0\n";
    }
    CHECK_THROWS_AS(load_raster_csv(bad, 20.0), std::runtime_error);
}

TEST_CASE("correlation matrix formats") {
    CorrelationMatrix corr;
    corr.n = 2;
    corr.values = {1.0, 0.25, 0.25, 1.0};
    const nlohmann::json j = correlation_to_json(corr);
    CHECK(j.at("values")[0][1] == 0.25);
    const fs::path path = temp_dir() / "corr.csv";
    save_correlation_csv(corr, path);
    CHECK(slurp(path) == "1,0.25\n0.25,1\n");
}

TEST_CASE("topology spec json round-trip") {
    TopologySpec spec;
    spec.kind = TopologyKind::RandomRegular;
    spec.n = 16;
    spec.degree = 3;
    spec.graph_seed = 4;
    spec.pattern = CouplingPattern::SpinGlass;
    spec.sign_seed = 9;
    spec.beta_value = 1.5;
    spec.alpha_value = 0.4;
    spec.impurity_edges = {{0, 3}};
    const TopologySpec back = topology_from_json(topology_to_json(spec));
    CHECK(back.kind == spec.kind);
    CHECK(back.n == spec.n);
    CHECK(back.degree == spec.degree);
    CHECK(back.graph_seed == spec.graph_seed);
    CHECK(back.pattern == spec.pattern);
    CHECK(back.sign_seed == spec.sign_seed);
    CHECK(back.beta_value == spec.beta_value);
    CHECK(back.alpha_value == spec.alpha_value);
    CHECK(back.impurity_edges == spec.impurity_edges);
}
