#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "isingdyn/serialization.hpp"

// end-to-end checks against the built binary
#ifndef ISINGDYN_CLI_PATH
#error "ISINGDYN_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "isingdyn_cli_out.txt";
    const std::string cmd =
        std::string(ISINGDYN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(log);
    std::ostringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    return result;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "isingdyn_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("generate is replayable byte for byte") {
    const fs::path dir = work_dir();
    const std::string base = "generate --kind lattice --rows 3 --cols 3 --pattern ferromagnetic "
                             "--beta 0.4 --regime M --m 500 --seed 99 --binary --out ";
    REQUIRE(run_cli(base + (dir / "gen_a").string()).exit_code == 0);
    REQUIRE(run_cli(base + (dir / "gen_b").string()).exit_code == 0);
    CHECK(slurp(dir / "gen_a" / "samples.jsonl") == slurp(dir / "gen_b" / "samples.jsonl"));
    CHECK(slurp(dir / "gen_a" / "samples.bin") == slurp(dir / "gen_b" / "samples.bin"));
    CHECK(slurp(dir / "gen_a" / "model.json") == slurp(dir / "gen_b" / "model.json"));

    const json manifest = load_json(dir / "gen_a" / "manifest.json");
    CHECK(manifest.at("command") == "generate");
    CHECK(manifest.at("config").at("seed") == 99);
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.contains("wall_clock_sec"));
}

TEST_CASE("generate then learn round-trips the edge set") {
    const fs::path dir = work_dir();
    const fs::path gen = dir / "roundtrip_gen";
    const fs::path out = dir / "roundtrip_learn";
    REQUIRE(run_cli("generate --kind lattice --rows 3 --cols 3 --pattern ferromagnetic --beta 0.4 "
                    "--regime M --m 20000 --seed 4 --out " +
                    gen.string())
                .exit_code == 0);
    for (const std::string estimator : {"drise", "drple"}) {
        REQUIRE(run_cli("learn --samples " + (gen / "samples.jsonl").string() + " --alpha 0.4 " +
                        "--estimator " + estimator + " --threads 2 --out " + out.string())
                    .exit_code == 0);
        const isingdyn::IsingModel truth = isingdyn::load_model(gen / "model.json");
        const isingdyn::EdgeSetEstimate edges =
            isingdyn::edge_set_from_json(load_json(out / "edges.json"));
        CHECK(isingdyn::structure_success(edges, truth));
        const json manifest = load_json(out / "manifest.json");
        CHECK(manifest.at("config").at("estimator") == estimator);
        // Table defaults: lattice D-RISE 0.1, D-RPLE 0.05
        CHECK(manifest.at("config").at("c_lambda") == (estimator == "drise" ? 0.1 : 0.05));
    }
    // explicit override wins
    REQUIRE(run_cli("learn --samples " + (gen / "samples.jsonl").string() +
                    " --alpha 0.4 --c-lambda 0.2 --out " + out.string())
                .exit_code == 0);
    CHECK(load_json(out / "manifest.json").at("config").at("c_lambda") == 0.2);
}

TEST_CASE("missing required input is a config error naming the field") {
    const RunResult no_m = run_cli("generate --kind lattice --rows 2 --cols 2 --beta 0.4");
    CHECK(no_m.exit_code == 2);
    CHECK(no_m.output.find("m") != std::string::npos);

    const RunResult no_samples = run_cli("learn --alpha 0.4");
    CHECK(no_samples.exit_code == 2);
    CHECK(no_samples.output.find("--samples") != std::string::npos);

    const RunResult bad_sub = run_cli("frobnicate");
    CHECK(bad_sub.exit_code == 2);
}

TEST_CASE("learn exits 3 when a node has no updates") {
    const fs::path dir = work_dir();
    const fs::path samples = dir / "starved.jsonl";
    {
        std::ofstream out(samples);
        out << R"({"m":2,"n":3,"regime":"M"})" << '\n';
        out << R"({"I":0,"s0":[1,1,1],"s1":[-1,1,1]})" << '\n';
        out << R"({"I":1,"s0":[1,1,-1],"s1":[1,-1,-1]})" << '\n';
    }
    const RunResult result =
        run_cli("learn --samples " + samples.string() + " --alpha 0.4 --out " + (dir / "x").string());
    CHECK(result.exit_code == 3);
    CHECK(result.output.find("node 2") != std::string::npos);
}

TEST_CASE("mstar emits a csv row and a replayable manifest") {
    const fs::path dir = work_dir() / "mstar";
    const RunResult result =
        run_cli("mstar --kind lattice --rows 1 --cols 2 --pattern ferromagnetic --beta 0.4 "
                "--regime M --seed 5 --threads 2 --out " +
                dir.string());
    REQUIRE(result.exit_code == 0);
    const std::string csv = slurp(dir / "mstar.csv");
    CHECK(csv.find("topology,regime,estimator,c_lambda,beta,m_star,m_i_mean,trials") !=
          std::string::npos);
    CHECK(csv.find("lattice1x2-F,M,drise,0.1,0.4,") != std::string::npos);
    const json report = load_json(dir / "mstar.json");
    CHECK(report.at("found") == true);
    CHECK(report.at("m_star").get<std::size_t>() >= 1);

    // grid bound exhaustion: exit 4
    const RunResult bounded =
        run_cli("mstar --kind lattice --rows 3 --cols 3 --pattern spin_glass --sign-seed 2 "
                "--beta 1.5 --alpha 0.4 --regime M --seed 5 --m-min 10 --m-max 30 --out " +
                (work_dir() / "mstar_bound").string());
    CHECK(bounded.exit_code == 4);
}

TEST_CASE("sweep writes one csv row per beta") {
    const fs::path dir = work_dir() / "sweep";
    const RunResult result =
        run_cli("sweep --kind lattice --rows 1 --cols 2 --pattern ferromagnetic --regime M "
                "--seed 6 --threads 2 --consecutive 5 --betas 0.4,0.6,0.8 --out " +
                dir.string());
    REQUIRE(result.exit_code == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    const json scaling = load_json(dir / "scaling.json");
    CHECK(scaling.at("betas").size() == 3);
    CHECK(scaling.at("fit_valid") == true);
}

TEST_CASE("active run logs exactly i_max rounds") {
    const fs::path dir = work_dir() / "active";
    const RunResult result =
        run_cli("active --kind lattice --rows 2 --cols 2 --pattern ferromagnetic --beta 0.6 "
                "--m-total 3000 --i-max 7 --seed 8 --out " +
                dir.string());
    REQUIRE(result.exit_code == 0);
    std::ifstream rounds(dir / "rounds.jsonl");
    std::string line;
    int count = 0;
    while (std::getline(rounds, line))
        if (!line.empty()) ++count;
    CHECK(count == 7);
    const json manifest = load_json(dir / "manifest.json");
    CHECK(manifest.at("config").at("i_max") == 7);
}

TEST_CASE("neural demo emits the correlation reports") {
    const fs::path dir = work_dir() / "neural";
    const RunResult result = run_cli(
        "neural --demo --demo-bins 4000 --m-sim 40000 --seed 12 --threads 2 --out " + dir.string());
    REQUIRE(result.exit_code == 0);
    for (const char* name :
         {"report.json", "corr_iid.csv", "corr_time.csv", "corr_pred.csv", "corr_diff.csv",
          "estimates.jsonl", "edges.json", "fitted_model.json", "true_model.json"})
        CHECK(fs::exists(dir / name));
    const json report = load_json(dir / "report.json");
    CHECK(report.at("neurons") == 10);
    CHECK(report.at("extracted_samples").get<std::size_t>() > 500);
    CHECK(report.at("frobenius_relative_diff").get<double>() < 0.5);
    CHECK(report.at("adjacent_pairs").get<std::size_t>() ==
          report.at("extracted_samples").get<std::size_t>() +
              report.at("skipped_zero_flip").get<std::size_t>() +
              report.at("skipped_multi_flip").get<std::size_t>());
}

TEST_CASE("neural accepts spike csv input") {
    const fs::path dir = work_dir() / "neural_csv";
    fs::create_directories(dir);
    const fs::path csv = dir / "spikes.csv";
    {
        // three neurons toggling their firing state at staggered bins, so
        // every transition flips exactly one neuron
        std::ofstream out(csv);
        out << "neuron_id,time_ms\n";
        for (int k = 0; k < 3; ++k) {
            bool firing = false;
            for (int b = 0; b < 400; ++b) {
                if (b >= 10 && (b - 10 * (k + 1)) % 30 == 0) firing = !firing;
                if (firing) out << k << ',' << (b * 20.0 + 2.0) << '\n';
            }
        }
    }
    const RunResult result = run_cli("neural --spikes " + csv.string() +
                                     " --duration-ms 8000 --bin-ms 20 --m-sim 20000 --out " +
                                     (dir / "out").string());
    REQUIRE(result.exit_code == 0);
    const json report = load_json(dir / "out" / "report.json");
    CHECK(report.at("neurons") == 3);
    CHECK(report.at("bins") == 400);
    CHECK(report.at("extracted_samples").get<std::size_t>() >= 30);
}
