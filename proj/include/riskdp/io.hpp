#pragma once
// File formats: model JSON, risk spec JSON, dataset CSV (17 significant
// digits so doubles round-trip exactly), solution JSON, and the FNV-1a
// content hashes embedded in every output so a file pins its inputs.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskdp/learner.hpp"
#include "riskdp/mdp.hpp"
#include "riskdp/oracle.hpp"
#include "riskdp/risk.hpp"

namespace riskdp {

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

std::string format_g17(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json model_to_json(const MdpModel& model);
MdpModel model_from_json(const nlohmann::json& j);
void save_model(const MdpModel& model, const std::string& path);
MdpModel load_model(const std::string& path);
std::string model_hash(const MdpModel& model);

/// Risk spec JSON is a list of measures, each a list of {xi, weight} pairs.
/// Measures whose weights do not sum to 1 within 1e-9 are rejected with the
/// offending index named, unless `normalize` is set, in which case they are
/// rescaled and a note is recorded.
RiskSpec risk_spec_from_json(const nlohmann::json& j, bool normalize = false,
                             std::vector<std::string>* notes = nullptr);
nlohmann::json risk_spec_to_json(const RiskSpec& spec);
RiskSpec load_risk_spec(const std::string& path, bool normalize = false,
                        std::vector<std::string>* notes = nullptr);
std::string risk_spec_hash(const RiskSpec& spec);

/// Dataset CSV: header `t,x,a,x_next,c`, one row per transition, costs with
/// 17 significant digits.
std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& csv, int n_states, int n_actions);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path, int n_states, int n_actions);
std::string dataset_hash(const Dataset& dataset);

nlohmann::json search_to_json(const SimplexSearch& search);
SimplexSearch search_from_json(const nlohmann::json& j);

nlohmann::json oracle_solution_to_json(const OracleSolution& sol,
                                       const std::string& model_hash,
                                       const std::string& risk_hash);
OracleSolution oracle_solution_from_json(const nlohmann::json& j);

nlohmann::json learned_solution_to_json(const LearnedSolution& sol,
                                        const AlgoConfig& config,
                                        const std::string& dataset_hash,
                                        const std::string& risk_hash);
LearnedSolution learned_solution_from_json(const nlohmann::json& j,
                                           AlgoConfig* config = nullptr);

}  // namespace riskdp
