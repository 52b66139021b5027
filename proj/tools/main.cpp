// Command-line surface for the Ising dynamics learning library: model and
// sample generation, structure learning, sample-complexity experiments,
// active learning, and the spike-train pipeline. Every stochastic run records
// its resolved configuration and seed in a manifest for exact replay.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isingdyn/active.hpp"
#include "isingdyn/experiments.hpp"
#include "isingdyn/neural.hpp"
#include "isingdyn/parallel.hpp"
#include "isingdyn/reconstruction.hpp"
#include "isingdyn/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isingdyn;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitSearchBound = 4;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

fs::path resolve_output_dir(const std::string& flag_value) {
    if (const char* env = std::getenv("ISINGDYN_OUTPUT_DIR"); env && *env) return fs::path(env);
    return fs::path(flag_value);
}

void write_manifest(const fs::path& dir, const std::string& command, const json& resolved,
                    double wall_seconds) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = resolved;
    manifest["config_hash"] = fnv1a(resolved.dump());
    manifest["wall_clock_sec"] = wall_seconds;
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- shared option blocks --------------------------------------------------

struct TopologyOpts {
    std::string kind;
    int rows = 0, cols = 0, nodes = 0, degree = 0;
    std::uint64_t graph_seed = 0;
    std::string pattern;
    std::uint64_t sign_seed = 0;
    double beta = 0.0, alpha = 0.0;
    std::vector<std::string> impurity;

    void attach(CLI::App* cmd) {
        cmd->add_option("--kind", kind, "topology kind: lattice | rr");
        cmd->add_option("--rows", rows, "lattice rows");
        cmd->add_option("--cols", cols, "lattice cols");
        cmd->add_option("--nodes", nodes, "node count (random regular)");
        cmd->add_option("--degree", degree, "degree (random regular)");
        cmd->add_option("--graph-seed", graph_seed, "random-regular pairing seed");
        cmd->add_option("--pattern", pattern, "ferromagnetic | spin_glass | ferro_with_impurity");
        cmd->add_option("--sign-seed", sign_seed, "spin-glass sign seed");
        cmd->add_option("--beta", beta, "strong coupling magnitude");
        cmd->add_option("--alpha", alpha, "weak coupling magnitude");
        cmd->add_option("--impurity-edge", impurity, "edge 'i,j' carrying the weak coupling")
            ->take_all();
    }

    // config block first, flags override
    TopologySpec resolve(const json& config) const {
        TopologySpec spec;
        if (config.contains("topology")) spec = topology_from_json(config.at("topology"));
        if (!kind.empty()) {
            if (kind == "lattice") spec.kind = TopologyKind::PeriodicLattice;
            else if (kind == "rr") spec.kind = TopologyKind::RandomRegular;
            else throw std::invalid_argument("unknown --kind: " + kind);
        }
        if (rows > 0) spec.rows = rows;
        if (cols > 0) spec.cols = cols;
        if (nodes > 0) spec.n = nodes;
        if (degree > 0) spec.degree = degree;
        if (graph_seed != 0) spec.graph_seed = graph_seed;
        if (!pattern.empty()) {
            if (pattern == "ferromagnetic") spec.pattern = CouplingPattern::Ferromagnetic;
            else if (pattern == "spin_glass") spec.pattern = CouplingPattern::SpinGlass;
            else if (pattern == "ferro_with_impurity")
                spec.pattern = CouplingPattern::FerroWithImpurity;
            else throw std::invalid_argument("unknown --pattern: " + pattern);
        }
        if (sign_seed != 0) spec.sign_seed = sign_seed;
        if (beta > 0.0) spec.beta_value = beta;
        if (alpha > 0.0) spec.alpha_value = alpha;
        if (spec.alpha_value <= 0.0) spec.alpha_value = spec.beta_value;
        for (const auto& text : impurity) {
            const auto comma = text.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("impurity edge must be 'i,j': " + text);
            spec.impurity_edges.emplace_back(std::stoi(text.substr(0, comma)),
                                             std::stoi(text.substr(comma + 1)));
        }
        if (spec.beta_value <= 0.0)
            throw std::invalid_argument("missing required field: topology.beta");
        if (spec.kind == TopologyKind::PeriodicLattice && (spec.rows < 1 || spec.cols < 1))
            throw std::invalid_argument("missing required field: topology.rows/cols");
        if (spec.kind == TopologyKind::RandomRegular && (spec.n < 1 || spec.degree < 1))
            throw std::invalid_argument("missing required field: topology.nodes/degree");
        return spec;
    }
};

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "drise") return EstimatorKind::DRise;
    if (name == "drple") return EstimatorKind::DRple;
    throw std::invalid_argument("unknown estimator: " + name + " (expected drise or drple)");
}

// Tuned c_lambda defaults per (estimator, regime, topology class).
double default_c_lambda(EstimatorKind estimator, Regime regime, TopologyKind kind) {
    const bool lattice = kind == TopologyKind::PeriodicLattice;
    if (estimator == EstimatorKind::DRise) {
        if (lattice) return 0.1;
        return regime == Regime::T ? 0.45 : 0.7;
    }
    if (lattice) return 0.05;
    return regime == Regime::T ? 0.1 : 0.3;
}

SolverConfig make_solver(const std::string& method, double tolerance) {
    SolverConfig solver;
    if (method == "auto") solver.method = SolverConfig::Method::Auto;
    else if (method == "cd") solver.method = SolverConfig::Method::CoordinateDescent;
    else if (method == "pg") solver.method = SolverConfig::Method::ProximalGradient;
    else throw std::invalid_argument("unknown solver method: " + method);
    if (tolerance > 0.0) solver.tolerance = tolerance;
    return solver;
}

void write_estimates_jsonl(const std::vector<NeighborhoodEstimate>& estimates,
                           const fs::path& path) {
    std::ofstream out(path);
    for (const auto& est : estimates) out << estimate_to_json(est).dump() << '\n';
}

json mstar_result_to_json(const MStarResult& result) {
    json j;
    j["found"] = result.found;
    if (result.found) {
        j["m_star"] = result.m_star;
        j["mean_m_i"] = result.mean_m_i;
    }
    j["master_seed"] = result.master_seed;
    auto levels = json::array();
    for (const auto& level : result.levels)
        levels.push_back({{"m", level.m}, {"successes", level.successes}, {"trials", level.trials}});
    j["levels"] = std::move(levels);
    return j;
}

std::string topology_label(const TopologySpec& spec) {
    std::ostringstream s;
    if (spec.kind == TopologyKind::PeriodicLattice) s << "lattice" << spec.rows << "x" << spec.cols;
    else s << "rr" << spec.n << "d" << spec.degree;
    switch (spec.pattern) {
        case CouplingPattern::Ferromagnetic: s << "-F"; break;
        case CouplingPattern::SpinGlass: s << "-SG"; break;
        case CouplingPattern::FerroWithImpurity: s << "-FI"; break;
    }
    return s.str();
}

void append_mstar_csv_row(std::ofstream& csv, const TopologySpec& topology, Regime regime,
                          const std::string& estimator, double c_lambda, double beta,
                          const MStarResult& result) {
    std::size_t trials = 0;
    for (const auto& level : result.levels) trials += static_cast<std::size_t>(level.trials);
    csv << topology_label(topology) << ',' << regime_name(regime) << ',' << estimator << ','
        << c_lambda << ',' << beta << ','
        << (result.found ? std::to_string(result.m_star) : "NA") << ',' << result.mean_m_i << ','
        << trials << '\n';
}

// ---- subcommands -------------------------------------------------------

struct GenerateCmd {
    TopologyOpts topology;
    std::string config_path, out_dir = "out", regime = "M";
    std::uint64_t seed = 1;
    std::size_t m = 0;
    std::size_t burn_in = 0;
    bool binary = false;

    int run() {
        const Stopwatch watch;
        const json config = load_config_file(config_path);
        TopologySpec spec = topology.resolve(config);
        if (m == 0 && config.contains("m")) m = config.at("m").get<std::size_t>();
        if (m == 0) throw std::invalid_argument("missing required field: m");
        const Regime reg = regime_from_name(regime);

        const fs::path dir = resolve_output_dir(out_dir);
        fs::create_directories(dir);

        const IsingModel model = build_topology(spec);
        RngStream rng = RngStream(seed).derive(0x6E67);
        const SampleSet samples =
            reg == Regime::T ? run_t_regime(model, InitialDistribution::uniform(), m, rng, burn_in)
                             : run_m_regime(model, InitialDistribution::uniform(), m, rng);

        save_model(model, dir / "model.json");
        save_samples_jsonl(samples, dir / "samples.jsonl");
        if (binary) save_samples_binary(samples, dir / "samples.bin");

        json resolved;
        resolved["topology"] = topology_to_json(spec);
        resolved["regime"] = regime;
        resolved["m"] = m;
        resolved["burn_in"] = burn_in;
        resolved["seed"] = seed;
        write_manifest(dir, "generate", resolved, watch.seconds());
        return 0;
    }
};

struct LearnCmd {
    std::string config_path, out_dir = "out", samples_path;
    std::string estimator = "drise", method = "auto", topology_class = "lattice";
    double c_lambda = 0.0, delta = 0.05, alpha = 0.0, tolerance = 0.0;
    int threads = 0;

    int run() {
        const Stopwatch watch;
        if (alpha <= 0.0) throw std::invalid_argument("missing required field: alpha");
        const SampleSet samples = load_samples_jsonl(samples_path);
        const EstimatorKind kind = parse_estimator(estimator);
        const TopologyKind topo_kind =
            topology_class == "rr" ? TopologyKind::RandomRegular : TopologyKind::PeriodicLattice;
        RegularizationConfig reg;
        reg.c_lambda = c_lambda > 0.0 ? c_lambda : default_c_lambda(kind, samples.regime(), topo_kind);
        reg.delta = delta;
        const SolverConfig solver = make_solver(method, tolerance);

        const fs::path dir = resolve_output_dir(out_dir);
        fs::create_directories(dir);
        const StructureLearnResult result = learn_structure(samples, reg, solver, alpha, kind, threads);

        write_estimates_jsonl(result.node_estimates, dir / "estimates.jsonl");
        {
            std::ofstream out(dir / "couplings.json");
            out << coupling_matrix_to_json(result.couplings).dump() << '\n';
        }
        {
            std::ofstream out(dir / "edges.json");
            out << edge_set_to_json(result.edges).dump() << '\n';
        }
        json resolved;
        resolved["samples"] = samples_path;
        resolved["estimator"] = estimator;
        resolved["c_lambda"] = reg.c_lambda;
        resolved["delta"] = delta;
        resolved["alpha"] = alpha;
        resolved["method"] = method;
        write_manifest(dir, "learn", resolved, watch.seconds());
        return 0;
    }
};

struct MStarCmd {
    TopologyOpts topology;
    std::string config_path, out_dir = "out", regime = "M", estimator = "drise", method = "auto";
    double c_lambda = 0.0, delta = 0.05;
    int consecutive = 10;
    std::size_t m_min = 0, m_max = 0;
    double grid_factor = 0.0;
    int bisection = 1;
    std::uint64_t seed = 1;
    int threads = 0;
    bool active = false;
    int i_max = 15;
    double initial_fraction = 1.0 / 3.0;

    MStarSpec resolve_spec() const {
        const json config = load_config_file(config_path);
        MStarSpec spec;
        spec.topology = topology.resolve(config);
        spec.regime = regime_from_name(regime);
        spec.estimator = parse_estimator(estimator);
        spec.reg.c_lambda =
            c_lambda > 0.0 ? c_lambda : default_c_lambda(spec.estimator, spec.regime, spec.topology.kind);
        spec.reg.delta = delta;
        spec.solver = make_solver(method, 0.0);
        spec.consecutive_successes = consecutive;
        if (m_min > 0) spec.m_grid.m_min = m_min;
        if (m_max > 0) spec.m_grid.m_max = m_max;
        if (grid_factor > 1.0) spec.m_grid.factor = grid_factor;
        spec.m_grid.bisection_rounds = bisection;
        spec.master_seed = seed;
        spec.thread_count = threads;
        if (active) {
            ActiveConfig al;
            al.i_max = i_max;
            al.initial_fraction = initial_fraction;
            spec.active = al;
        }
        return spec;
    }

    json resolved_json(const MStarSpec& spec) const {
        json resolved;
        resolved["topology"] = topology_to_json(spec.topology);
        resolved["regime"] = regime_name(spec.regime);
        resolved["estimator"] = estimator;
        resolved["c_lambda"] = spec.reg.c_lambda;
        resolved["delta"] = spec.reg.delta;
        resolved["consecutive_successes"] = spec.consecutive_successes;
        resolved["m_min"] = spec.m_grid.m_min;
        resolved["m_max"] = spec.m_grid.m_max;
        resolved["grid_factor"] = spec.m_grid.factor;
        resolved["bisection_rounds"] = spec.m_grid.bisection_rounds;
        resolved["master_seed"] = spec.master_seed;
        resolved["active"] = active;
        if (active) resolved["i_max"] = i_max;
        return resolved;
    }

    int run() const {
        const Stopwatch watch;
        const MStarSpec spec = resolve_spec();
        const fs::path dir = resolve_output_dir(out_dir);
        fs::create_directories(dir);

        const MStarResult result = find_m_star(spec);
        {
            std::ofstream out(dir / "mstar.json");
            out << mstar_result_to_json(result).dump(2) << '\n';
        }
        {
            std::ofstream csv(dir / "mstar.csv");
            csv << "topology,regime,estimator,c_lambda,beta,m_star,m_i_mean,trials\n";
            append_mstar_csv_row(csv, spec.topology, spec.regime, estimator, spec.reg.c_lambda,
                                 spec.topology.beta_value, result);
        }
        write_manifest(dir, "mstar", resolved_json(spec), watch.seconds());
        if (!result.found) {
            std::cerr << "m* search exhausted the grid (m_max=" << spec.m_grid.m_max << ")\n";
            return kExitSearchBound;
        }
        std::cout << "m_star " << result.m_star << " (mean m_i " << result.mean_m_i << ")\n";
        return 0;
    }
};

struct SweepCmd {
    MStarCmd base;
    std::vector<double> betas;
    std::vector<double> c_lambdas;
    double window_fraction = 0.5;

    int run() const {
        const Stopwatch watch;
        if (betas.empty() == c_lambdas.empty())
            throw std::invalid_argument("sweep: give exactly one of --betas or --c-lambdas");
        MStarCmd seed_cmd = base;
        if (seed_cmd.topology.beta <= 0.0 && !betas.empty())
            seed_cmd.topology.beta = betas.front();  // beta_sweep overrides per point
        const MStarSpec spec = seed_cmd.resolve_spec();
        const fs::path dir = resolve_output_dir(base.out_dir);
        fs::create_directories(dir);

        json resolved = base.resolved_json(spec);
        bool all_found = true;
        if (!betas.empty()) {
            const ScalingResult result = beta_sweep(spec, betas, window_fraction);
            std::ofstream csv(dir / "sweep.csv");
            csv << "topology,regime,estimator,c_lambda,beta,m_star,m_i_mean,trials\n";
            for (std::size_t k = 0; k < betas.size(); ++k) {
                append_mstar_csv_row(csv, spec.topology, spec.regime, base.estimator,
                                     spec.reg.c_lambda, betas[k], result.details[k]);
                all_found = all_found && result.details[k].found;
            }
            json scaling;
            scaling["betas"] = result.beta_values;
            scaling["m_stars"] = result.m_star_values;
            scaling["d"] = result.d;
            scaling["fit_valid"] = result.fit_valid;
            if (result.fit_valid) {
                scaling["exponent_per_beta_d"] = result.fitted_exponent;
                scaling["intercept"] = result.fit_intercept;
                scaling["residual"] = result.fit_residual;
            }
            std::ofstream out(dir / "scaling.json");
            out << scaling.dump(2) << '\n';
            resolved["betas"] = betas;
            resolved["window_fraction"] = window_fraction;
        } else {
            const CLambdaSweepResult result = clambda_sweep(spec, c_lambdas);
            std::ofstream csv(dir / "clambda.csv");
            csv << "topology,regime,estimator,c_lambda,beta,m_star,m_i_mean,trials\n";
            for (const auto& [c, r] : result.table) {
                append_mstar_csv_row(csv, spec.topology, spec.regime, base.estimator, c,
                                     spec.topology.beta_value, r);
                all_found = all_found && r.found;
            }
            json best;
            best["any_found"] = result.any_found;
            if (result.any_found) best["best_c_lambda"] = result.best_c_lambda;
            std::ofstream out(dir / "clambda.json");
            out << best.dump(2) << '\n';
            resolved["c_lambdas"] = c_lambdas;
            all_found = all_found && result.any_found;
        }
        write_manifest(dir, "sweep", resolved, watch.seconds());
        return all_found ? 0 : kExitSearchBound;
    }
};

struct ActiveCmd {
    TopologyOpts topology;
    std::string config_path, out_dir = "out", estimator = "drise", method = "auto";
    double c_lambda = 0.0, delta = 0.05;
    std::size_t m_total = 0;
    int i_max = 15;
    double initial_fraction = 1.0 / 3.0;
    std::uint64_t seed = 1;
    int threads = 0;

    int run() const {
        const Stopwatch watch;
        const json config = load_config_file(config_path);
        const TopologySpec spec = topology.resolve(config);
        std::size_t budget = m_total;
        if (budget == 0 && config.contains("m_total"))
            budget = config.at("m_total").get<std::size_t>();
        if (budget == 0) throw std::invalid_argument("missing required field: m_total");

        const IsingModel truth = build_topology(spec);
        ActiveConfig cfg = ActiveConfig::for_total_budget(budget, i_max, initial_fraction);
        cfg.estimator = parse_estimator(estimator);
        cfg.reg.c_lambda =
            c_lambda > 0.0 ? c_lambda : default_c_lambda(cfg.estimator, Regime::M, spec.kind);
        cfg.reg.delta = delta;
        cfg.solver = make_solver(method, 0.0);
        cfg.thread_count = threads;

        RngStream rng = RngStream(seed).derive(0xAC71);
        const ActiveResult result = active_learn(model_query_oracle(truth), truth.n(), cfg, rng);

        const fs::path dir = resolve_output_dir(out_dir);
        fs::create_directories(dir);
        {
            std::ofstream out(dir / "rounds.jsonl");
            for (const auto& round : result.rounds) {
                json j;
                j["round"] = round.round;
                j["samples"] = round.accumulated_samples;
                j["mu"] = round.mu;
                j["entropy_min"] = round.entropy_min;
                j["entropy_mean"] = round.entropy_mean;
                j["entropy_max"] = round.entropy_max;
                j["lambda"] = round.lambdas;
                out << j.dump() << '\n';
            }
        }
        write_estimates_jsonl(result.estimates, dir / "estimates.jsonl");
        const EdgeSetEstimate edges =
            threshold_edges(average_couplings(result.estimates), model_stats(truth).alpha);
        {
            std::ofstream out(dir / "edges.json");
            out << edge_set_to_json(edges).dump() << '\n';
        }
        save_samples_jsonl(result.samples, dir / "samples.jsonl");

        json resolved;
        resolved["topology"] = topology_to_json(spec);
        resolved["m_total"] = budget;
        resolved["i_max"] = i_max;
        resolved["initial_fraction"] = initial_fraction;
        resolved["estimator"] = estimator;
        resolved["c_lambda"] = cfg.reg.c_lambda;
        resolved["seed"] = seed;
        write_manifest(dir, "active", resolved, watch.seconds());
        std::cout << "recovered " << edges.edges.size() << " edges vs " << truth.edges().size()
                  << " true (match: " << (structure_success(edges, truth) ? "yes" : "no") << ")\n";
        return 0;
    }
};

struct NeuralCmd {
    std::string config_path, out_dir = "out";
    std::string spikes_path, raster_path;
    double duration_ms = 0.0, bin_ms = 20.0;
    bool demo = false;
    int demo_n = 10;
    int demo_bins = 20000;
    std::uint64_t seed = 1;
    std::string estimator = "drise", method = "auto";
    double c_lambda = 0.1, delta = 0.05;
    std::size_t m_sim = 200000;
    double threshold_override = -1.0;
    std::vector<int> neurons;
    int threads = 0;

    SpikeRaster demo_raster(const fs::path& dir) const {
        std::vector<Edge> edges;
        for (int i = 0; i < demo_n; ++i)
            edges.push_back({i, (i + 1) % demo_n, (i % 3) == 1 ? -0.7 : 0.7});
        if (demo_n >= 8) {
            edges.push_back({0, demo_n / 2, 0.7});
            edges.push_back({2, demo_n / 2 + 2, -0.7});
        }
        const IsingModel truth(demo_n, std::move(edges));
        save_model(truth, dir / "true_model.json");

        // Short chains from fresh uniform starts. Restarts keep the recorded
        // configurations out of equilibrium; on a mixed chain the flip filter
        // cancels the local Gibbs factor and the samples lose the couplings.
        const int seg_bins = 5;
        const int segments = demo_bins / seg_bins;
        RngStream rng = RngStream(seed).derive(0xDE30);
        SpikeRaster raster;
        raster.n_neurons = demo_n;
        raster.n_bins = segments * seg_bins;
        raster.bin_ms = bin_ms;
        raster.spins.resize(static_cast<std::size_t>(demo_n) * raster.n_bins);
        const InitialDistribution uniform = InitialDistribution::uniform();
        int col = 0;
        for (int s = 0; s < segments; ++s) {
            SpinConfiguration sigma = uniform.sample(demo_n, rng);
            for (int b = 0; b < seg_bins; ++b) {
                for (int i = 0; i < demo_n; ++i)
                    raster.spins[static_cast<std::size_t>(i) * raster.n_bins + col] =
                        sigma[static_cast<std::size_t>(i)];
                ++col;
                if (b + 1 < seg_bins) {
                    auto [node, value] = glauber_update(truth, sigma, rng);
                    sigma[static_cast<std::size_t>(node)] = value;
                }
            }
        }
        return raster;
    }

    SpikeRaster subset_raster(SpikeRaster raster) const {
        if (neurons.empty()) return raster;
        SpikeRaster out;
        out.n_neurons = static_cast<int>(neurons.size());
        out.n_bins = raster.n_bins;
        out.bin_ms = raster.bin_ms;
        out.spins.reserve(static_cast<std::size_t>(out.n_neurons) * out.n_bins);
        for (int id : neurons) {
            if (id < 0 || id >= raster.n_neurons)
                throw std::invalid_argument("neuron subset index out of range: " + std::to_string(id));
            for (int t = 0; t < raster.n_bins; ++t) out.spins.push_back(raster.at(id, t));
        }
        return out;
    }

    int run() const {
        const Stopwatch watch;
        const fs::path dir = resolve_output_dir(out_dir);
        fs::create_directories(dir);

        SpikeRaster raster;
        if (demo) raster = demo_raster(dir);
        else if (!raster_path.empty()) raster = load_raster_csv(raster_path, bin_ms);
        else if (!spikes_path.empty()) {
            if (duration_ms <= 0.0) throw std::invalid_argument("missing required field: duration-ms");
            raster = bin_spikes(load_spike_csv(spikes_path), duration_ms, bin_ms);
        } else {
            throw std::invalid_argument("neural: give --spikes, --raster, or --demo");
        }
        raster = subset_raster(std::move(raster));

        ExtractionReport report;
        const SampleSet samples = extract_single_flip_samples(raster, &report);
        const int n = raster.n_neurons;
        for (int u = 0; u < n; ++u)
            if (samples.count_for(u) == 0)
                throw NoDataError(u, "no single-flip updates extracted for this neuron");

        const EstimatorKind kind = parse_estimator(estimator);
        RegularizationConfig reg;
        reg.c_lambda = c_lambda;
        reg.delta = delta;
        const SolverConfig solver = make_solver(method, 0.0);
        std::vector<NeighborhoodEstimate> estimates(static_cast<std::size_t>(n));
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t u) {
            const double lambda = lambda_value(reg, n, samples.count_for(static_cast<int>(u)));
            estimates[u] = fit_neighborhood(samples, static_cast<int>(u), lambda, kind, solver);
        });
        const CouplingMatrixEstimate avg = average_couplings(estimates);

        std::vector<double> all_pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) all_pairs.push_back(avg.value(i, j));
        GapThresholdResult gap{0.0, false};
        if (threshold_override >= 0.0) gap = {threshold_override, true};
        else gap = gap_threshold(all_pairs);

        EdgeSetEstimate edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (avg.value(i, j) != 0.0 && std::abs(avg.value(i, j)) >= gap.threshold)
                    edges.edges.emplace_back(i, j);

        const CorrelationMatrix iid = iid_correlations(raster);
        const CorrelationMatrix timed = time_correlations(samples);
        std::vector<double> fields(static_cast<std::size_t>(n), 0.0);
        for (const auto& est : estimates) fields[static_cast<std::size_t>(est.node)] = est.field;
        const IsingModel fitted = model_from_estimate(avg, fields);
        RngStream rng = RngStream(seed).derive(0x9E44);
        const CorrelationMatrix predicted =
            predict_time_correlations(fitted, empirical_context(samples), m_sim, rng);
        const double frob = frobenius_relative_diff(predicted, timed);

        save_model(fitted, dir / "fitted_model.json");
        write_estimates_jsonl(estimates, dir / "estimates.jsonl");
        {
            std::ofstream out(dir / "edges.json");
            out << edge_set_to_json(edges).dump() << '\n';
        }
        save_correlation_csv(iid, dir / "corr_iid.csv");
        save_correlation_csv(timed, dir / "corr_time.csv");
        save_correlation_csv(predicted, dir / "corr_pred.csv");
        {
            // figure data: difference between predicted and empirical matrices
            CorrelationMatrix diff = predicted;
            for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= timed.values[k];
            save_correlation_csv(diff, dir / "corr_diff.csv");
        }
        json rep;
        rep["neurons"] = n;
        rep["bins"] = raster.n_bins;
        rep["bin_ms"] = raster.bin_ms;
        rep["adjacent_pairs"] = report.adjacent_pairs;
        rep["extracted_samples"] = report.extracted;
        rep["skipped_zero_flip"] = report.zero_flip_skipped;
        rep["skipped_multi_flip"] = report.multi_flip_skipped;
        rep["gap_threshold"] = gap.threshold;
        rep["gap_found"] = gap.gap_found;
        rep["kept_edges"] = edges.edges.size();
        rep["frobenius_relative_diff"] = frob;
        rep["m_sim"] = m_sim;
        {
            std::ofstream out(dir / "report.json");
            out << rep.dump(2) << '\n';
        }
        json resolved;
        resolved["demo"] = demo;
        resolved["spikes"] = spikes_path;
        resolved["raster"] = raster_path;
        resolved["bin_ms"] = bin_ms;
        resolved["estimator"] = estimator;
        resolved["c_lambda"] = c_lambda;
        resolved["m_sim"] = m_sim;
        resolved["seed"] = seed;
        write_manifest(dir, "neural", resolved, watch.seconds());
        std::cout << "extracted " << report.extracted << " samples; frobenius diff " << frob << '\n';
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning Ising models from Glauber dynamics"};
    app.require_subcommand(1);

    GenerateCmd generate;
    auto* gen_cmd = app.add_subcommand("generate", "build a benchmark model and sample it");
    generate.topology.attach(gen_cmd);
    gen_cmd->add_option("--config", generate.config_path, "JSON config file");
    gen_cmd->add_option("--out", generate.out_dir, "output directory");
    gen_cmd->add_option("--regime", generate.regime, "T | M");
    gen_cmd->add_option("--m", generate.m, "number of samples");
    gen_cmd->add_option("--burn-in", generate.burn_in, "discarded T-regime prefix steps");
    gen_cmd->add_option("--seed", generate.seed, "master seed");
    gen_cmd->add_flag("--binary", generate.binary, "also write bit-packed samples.bin");

    LearnCmd learn;
    auto* learn_cmd = app.add_subcommand("learn", "reconstruct structure from a sample file");
    learn_cmd->add_option("--samples", learn.samples_path, "samples.jsonl path")->required();
    learn_cmd->add_option("--out", learn.out_dir, "output directory");
    learn_cmd->add_option("--estimator", learn.estimator, "drise | drple");
    learn_cmd->add_option("--method", learn.method, "auto | cd | pg");
    learn_cmd->add_option("--c-lambda", learn.c_lambda,
                          "regularization prefactor (default: tuned table)");
    learn_cmd->add_option("--delta", learn.delta, "global failure probability");
    learn_cmd->add_option("--alpha", learn.alpha, "threshold coupling magnitude")->required();
    learn_cmd->add_option("--tolerance", learn.tolerance, "KKT tolerance");
    learn_cmd->add_option("--topology-class", learn.topology_class,
                          "lattice | rr (picks the default c_lambda)");
    learn_cmd->add_option("--threads", learn.threads, "worker threads (0 = auto)");

    MStarCmd mstar;
    auto* mstar_cmd = app.add_subcommand("mstar", "minimal sample count for perfect recovery");
    mstar.topology.attach(mstar_cmd);
    mstar_cmd->add_option("--config", mstar.config_path, "JSON config file");
    mstar_cmd->add_option("--out", mstar.out_dir, "output directory");
    mstar_cmd->add_option("--regime", mstar.regime, "T | M");
    mstar_cmd->add_option("--estimator", mstar.estimator, "drise | drple");
    mstar_cmd->add_option("--method", mstar.method, "auto | cd | pg");
    mstar_cmd->add_option("--c-lambda", mstar.c_lambda, "regularization prefactor");
    mstar_cmd->add_option("--delta", mstar.delta, "failure probability");
    mstar_cmd->add_option("--consecutive", mstar.consecutive, "required consecutive successes");
    mstar_cmd->add_option("--m-min", mstar.m_min, "grid start (default 100n)");
    mstar_cmd->add_option("--m-max", mstar.m_max, "grid bound");
    mstar_cmd->add_option("--grid-factor", mstar.grid_factor, "geometric grid factor");
    mstar_cmd->add_option("--bisection", mstar.bisection, "bisection refinement rounds");
    mstar_cmd->add_option("--seed", mstar.seed, "master seed");
    mstar_cmd->add_option("--threads", mstar.threads, "worker threads (0 = auto)");
    mstar_cmd->add_flag("--active", mstar.active, "trials run the active learner");
    mstar_cmd->add_option("--i-max", mstar.i_max, "active mini-batches");
    mstar_cmd->add_option("--initial-fraction", mstar.initial_fraction, "active seed-set share");

    SweepCmd sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "beta or c_lambda sweeps of m*");
    sweep.base.topology.attach(sweep_cmd);
    sweep_cmd->add_option("--config", sweep.base.config_path, "JSON config file");
    sweep_cmd->add_option("--out", sweep.base.out_dir, "output directory");
    sweep_cmd->add_option("--regime", sweep.base.regime, "T | M");
    sweep_cmd->add_option("--estimator", sweep.base.estimator, "drise | drple");
    sweep_cmd->add_option("--method", sweep.base.method, "auto | cd | pg");
    sweep_cmd->add_option("--c-lambda", sweep.base.c_lambda, "regularization prefactor");
    sweep_cmd->add_option("--delta", sweep.base.delta, "failure probability");
    sweep_cmd->add_option("--consecutive", sweep.base.consecutive, "required consecutive successes");
    sweep_cmd->add_option("--m-min", sweep.base.m_min, "grid start");
    sweep_cmd->add_option("--m-max", sweep.base.m_max, "grid bound");
    sweep_cmd->add_option("--grid-factor", sweep.base.grid_factor, "geometric grid factor");
    sweep_cmd->add_option("--bisection", sweep.base.bisection, "bisection rounds");
    sweep_cmd->add_option("--seed", sweep.base.seed, "master seed");
    sweep_cmd->add_option("--threads", sweep.base.threads, "worker threads");
    sweep_cmd->add_option("--betas", sweep.betas, "beta grid")->delimiter(',');
    sweep_cmd->add_option("--c-lambdas", sweep.c_lambdas, "c_lambda candidates")->delimiter(',');
    sweep_cmd->add_option("--window-fraction", sweep.window_fraction, "upper beta fit window");

    ActiveCmd active;
    auto* active_cmd = app.add_subcommand("active", "one active-learning run against a known model");
    active.topology.attach(active_cmd);
    active_cmd->add_option("--config", active.config_path, "JSON config file");
    active_cmd->add_option("--out", active.out_dir, "output directory");
    active_cmd->add_option("--m-total", active.m_total, "total query budget");
    active_cmd->add_option("--i-max", active.i_max, "mini-batches");
    active_cmd->add_option("--initial-fraction", active.initial_fraction, "seed-set share");
    active_cmd->add_option("--estimator", active.estimator, "drise | drple");
    active_cmd->add_option("--method", active.method, "auto | cd | pg");
    active_cmd->add_option("--c-lambda", active.c_lambda, "regularization prefactor");
    active_cmd->add_option("--delta", active.delta, "failure probability");
    active_cmd->add_option("--seed", active.seed, "master seed");
    active_cmd->add_option("--threads", active.threads, "worker threads");

    NeuralCmd neural;
    auto* neural_cmd = app.add_subcommand("neural", "spike-train pipeline");
    neural_cmd->add_option("--config", neural.config_path, "JSON config file");
    neural_cmd->add_option("--out", neural.out_dir, "output directory");
    neural_cmd->add_option("--spikes", neural.spikes_path, "CSV of neuron_id,time_ms rows");
    neural_cmd->add_option("--raster", neural.raster_path, "CSV of +-1 rows per neuron");
    neural_cmd->add_option("--duration-ms", neural.duration_ms, "recording length for --spikes");
    neural_cmd->add_option("--bin-ms", neural.bin_ms, "bin width");
    neural_cmd->add_flag("--demo", neural.demo, "run the synthetic fixture");
    neural_cmd->add_option("--demo-n", neural.demo_n, "fixture neuron count");
    neural_cmd->add_option("--demo-bins", neural.demo_bins, "fixture bin count");
    neural_cmd->add_option("--estimator", neural.estimator, "drise | drple");
    neural_cmd->add_option("--method", neural.method, "auto | cd | pg");
    neural_cmd->add_option("--c-lambda", neural.c_lambda, "regularization prefactor");
    neural_cmd->add_option("--delta", neural.delta, "failure probability");
    neural_cmd->add_option("--m-sim", neural.m_sim, "simulated steps for predicted correlations");
    neural_cmd->add_option("--threshold", neural.threshold_override, "manual gap threshold");
    neural_cmd->add_option("--neurons", neural.neurons, "neuron subset")->delimiter(',');
    neural_cmd->add_option("--seed", neural.seed, "master seed");
    neural_cmd->add_option("--threads", neural.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        if (gen_cmd->parsed()) return generate.run();
        if (learn_cmd->parsed()) return learn.run();
        if (mstar_cmd->parsed()) return mstar.run();
        if (sweep_cmd->parsed()) return sweep.run();
        if (active_cmd->parsed()) return active.run();
        if (neural_cmd->parsed()) return neural.run();
    } catch (const NoDataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitDataError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return 0;
}
