#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "isingdyn/dynamics.hpp"
#include "isingdyn/estimators.hpp"
#include "isingdyn/model.hpp"
#include "isingdyn/neural.hpp"
#include "isingdyn/reconstruction.hpp"

namespace isingdyn {

// Model file: {"n": int, "edges": [[i, j, J], ...], "fields": [...]},
// 0-indexed, i < j required on read.
nlohmann::json model_to_json(const IsingModel& model);
IsingModel model_from_json(const nlohmann::json& j);
void save_model(const IsingModel& model, const std::filesystem::path& path);
IsingModel load_model(const std::filesystem::path& path);

// Samples as JSON-lines: a header {"n","regime","m"} then one
// {"s0": [...], "s1": [...], "I": int} per sample.
void save_samples_jsonl(const SampleSet& samples, const std::filesystem::path& path);
SampleSet load_samples_jsonl(const std::filesystem::path& path);

// Compact mirror of the JSONL format: bit-packed sigma0 plus the updated
// node and its new value per sample.
void save_samples_binary(const SampleSet& samples, const std::filesystem::path& path);
SampleSet load_samples_binary(const std::filesystem::path& path);

// {"u": int, "J": [...], "H": h, "objective": v, "iterations": k, "converged": flag}
nlohmann::json estimate_to_json(const NeighborhoodEstimate& est);
NeighborhoodEstimate estimate_from_json(const nlohmann::json& j);

// Sorted list of [i, j] pairs.
nlohmann::json edge_set_to_json(const EdgeSetEstimate& edges);
EdgeSetEstimate edge_set_from_json(const nlohmann::json& j);

nlohmann::json coupling_matrix_to_json(const CouplingMatrixEstimate& est);

nlohmann::json correlation_to_json(const CorrelationMatrix& corr);
void save_correlation_csv(const CorrelationMatrix& corr, const std::filesystem::path& path);

// CSV rows "neuron_id,time_ms" (optional header); neuron ids are 0-based and
// rows need not be grouped. Returns per-neuron time lists.
std::vector<std::vector<double>> load_spike_csv(const std::filesystem::path& path);

// Pre-binned raster: one CSV row of +-1 entries per neuron.
SpikeRaster load_raster_csv(const std::filesystem::path& path, double bin_ms);

nlohmann::json topology_to_json(const TopologySpec& spec);
TopologySpec topology_from_json(const nlohmann::json& j);

std::string regime_name(Regime regime);
Regime regime_from_name(const std::string& name);

}  // namespace isingdyn
