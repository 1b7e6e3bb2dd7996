#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpt/branching.hpp"
#include "fpt/chain.hpp"
#include "fpt/exponentiality.hpp"
#include "fpt/lumping.hpp"
#include "fpt/simulate.hpp"

namespace fpt {

/// A parsed and validated model file. Every parse error names the offending
/// JSON path.
struct ModelDocument {
    std::vector<std::string> states;
    std::vector<std::string> target;
    std::vector<RateTriple> rates;
    std::optional<std::map<std::string, double>> initial;
    std::optional<std::vector<std::vector<std::string>>> partition;
    std::map<std::string, std::string> metadata;

    Generator to_generator() const;
    /// The `initial` map as a Distribution over the generator's E space.
    Distribution initial_distribution(const Generator& gen) const;
    nlohmann::json to_json() const;
};

ModelDocument parse_model(const std::filesystem::path& path);
ModelDocument parse_model_json(const nlohmann::json& j, const std::string& source);

/// Partition file: a JSON array of arrays of state labels, first block = D.
Partition parse_partition(const std::filesystem::path& path, const Generator& gen);

/// Distribution flag syntax: "uniform", "point:LABEL", or a path to a JSON
/// object mapping state labels to probabilities over E.
Distribution parse_mu_spec(const std::string& spec, const Generator& gen);

/// Grid flag syntax: "a:b:n" followed by "geom" or "lin", e.g. "0.05:5:32geom".
TimeGrid parse_grid_spec(const std::string& spec);

/// Two-type branching spec from {"offspring":[[k1,k2,p],...], "branch_rate":r}.
TwoTypeSpec parse_two_type(const std::filesystem::path& path);

/// Birth-death spec from {"lambda": ..., "nu": ...}.
BirthDeathSpec parse_birth_death(const std::filesystem::path& path);

/// FNV-1a 64 digest of the concatenated bytes of the given files, as a
/// 16-digit hex string. Stable across platforms for identical file bytes.
std::string digest_files(const std::vector<std::filesystem::path>& paths);

struct RunReport {
    std::string command;
    std::string inputs_digest;
    nlohmann::json result;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// Canonical serialization: sorted keys, shortest round-trip floats, 2-space
/// indent, trailing newline. Identical inputs always produce identical bytes.
void emit_report(const RunReport& report, std::ostream& os);
void emit_report(const RunReport& report, const std::filesystem::path& path);

/// JSON shapes for the analysis records the CLI emits.
nlohmann::json to_json(const ExponentialityReport& rep);
nlohmann::json to_json(const LadderResult& lad);
nlohmann::json to_json(const LumpedQsd& qsd, const LumpedGenerator& lg);
nlohmann::json to_json(const Envelope& env);
nlohmann::json to_json(const ExpTest& test, const SampleSet& s);

const char* to_string(ExpVerdict v);
const char* to_string(LadderStop r);
const char* to_string(Scheme s);
const char* to_string(BdClassification c);

}  // namespace fpt
