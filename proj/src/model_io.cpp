#include "fpt/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fpt/errors.hpp"

namespace fpt {

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return j;
}

std::string at(const std::string& source, const std::string& path) {
    return source.empty() ? path : source + ": " + path;
}

double require_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<double>();
}

std::string require_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw ValidationError(where + ": expected a string");
    return j.get<std::string>();
}

}  // namespace

ModelDocument parse_model_json(const json& j, const std::string& source) {
    if (!j.is_object()) throw ValidationError(at(source, "$") + ": expected an object");

    ModelDocument doc;
    if (!j.contains("states") || !j["states"].is_array() || j["states"].empty())
        throw ValidationError(at(source, "states") + ": expected a nonempty array");
    std::unordered_set<std::string> known;
    for (std::size_t i = 0; i < j["states"].size(); ++i) {
        const std::string where = at(source, "states[" + std::to_string(i) + "]");
        std::string label = require_string(j["states"][i], where);
        if (!known.insert(label).second)
            throw ValidationError(where + ": duplicate state label '" + label + "'");
        doc.states.push_back(std::move(label));
    }

    if (!j.contains("target") || !j["target"].is_array() || j["target"].empty())
        throw ValidationError(at(source, "target") + ": expected a nonempty array");
    for (std::size_t i = 0; i < j["target"].size(); ++i) {
        const std::string where = at(source, "target[" + std::to_string(i) + "]");
        std::string label = require_string(j["target"][i], where);
        if (!known.contains(label))
            throw ValidationError(where + ": unknown state label '" + label + "'");
        doc.target.push_back(std::move(label));
    }

    if (!j.contains("rates") || !j["rates"].is_array())
        throw ValidationError(at(source, "rates") + ": expected an array");
    for (std::size_t i = 0; i < j["rates"].size(); ++i) {
        const std::string where = at(source, "rates[" + std::to_string(i) + "]");
        const json& triple = j["rates"][i];
        if (!triple.is_array() || triple.size() != 3)
            throw ValidationError(where + ": expected [from, to, rate]");
        RateTriple t;
        t.from = require_string(triple[0], where + "[0]");
        t.to = require_string(triple[1], where + "[1]");
        t.rate = require_number(triple[2], where + "[2]");
        if (t.rate < 0.0) throw ValidationError(where + "[2]: negative rate");
        doc.rates.push_back(std::move(t));
    }

    if (j.contains("initial")) {
        if (!j["initial"].is_object())
            throw ValidationError(at(source, "initial") + ": expected an object");
        std::map<std::string, double> init;
        for (const auto& [label, value] : j["initial"].items())
            init[label] = require_number(value, at(source, "initial." + label));
        doc.initial = std::move(init);
    }

    if (j.contains("partition")) {
        if (!j["partition"].is_array())
            throw ValidationError(at(source, "partition") + ": expected an array of arrays");
        std::vector<std::vector<std::string>> blocks;
        for (std::size_t k = 0; k < j["partition"].size(); ++k) {
            const std::string where = at(source, "partition[" + std::to_string(k) + "]");
            if (!j["partition"][k].is_array()) throw ValidationError(where + ": expected an array");
            std::vector<std::string> block;
            for (std::size_t i = 0; i < j["partition"][k].size(); ++i)
                block.push_back(require_string(j["partition"][k][i],
                                               where + "[" + std::to_string(i) + "]"));
            blocks.push_back(std::move(block));
        }
        doc.partition = std::move(blocks);
    }

    if (j.contains("metadata")) {
        if (!j["metadata"].is_object())
            throw ValidationError(at(source, "metadata") + ": expected an object");
        for (const auto& [key, value] : j["metadata"].items())
            doc.metadata[key] = require_string(value, at(source, "metadata." + key));
    }

    // Surface structural problems with the source's JSON paths attached.
    try {
        const Generator gen = doc.to_generator();
        if (doc.initial) doc.initial_distribution(gen);
    } catch (const ValidationError& e) {
        throw ValidationError(at(source, e.what()));
    }
    return doc;
}

ModelDocument parse_model(const std::filesystem::path& path) {
    return parse_model_json(load_json(path), path.string());
}

Generator ModelDocument::to_generator() const {
    return Generator::create(states, target, rates);
}

Distribution ModelDocument::initial_distribution(const Generator& gen) const {
    if (!initial) throw ValidationError("model document has no initial distribution");
    std::vector<double> mass(gen.e_size(), 0.0);
    for (const auto& [label, p] : *initial) {
        const auto idx = gen.index_of(label);
        if (!idx) throw ValidationError("initial." + label + ": unknown state label");
        if (gen.is_target(*idx))
            throw ValidationError("initial." + label + ": state is in the target set");
        if (!(p >= 0.0)) throw ValidationError("initial." + label + ": negative probability");
        mass[gen.e_index_of(*idx)] = p;
    }
    return Distribution::over_e(std::move(mass));
}

json ModelDocument::to_json() const {
    json j;
    j["states"] = states;
    j["target"] = target;
    json r = json::array();
    for (const auto& t : rates) r.push_back(json::array({t.from, t.to, t.rate}));
    j["rates"] = std::move(r);
    if (initial) j["initial"] = *initial;
    if (partition) j["partition"] = *partition;
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

Partition parse_partition(const std::filesystem::path& path, const Generator& gen) {
    const json j = load_json(path);
    if (!j.is_array()) throw ValidationError(path.string() + ": expected an array of arrays");
    std::vector<std::vector<std::string>> blocks;
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_array())
            throw ValidationError(path.string() + ": [" + std::to_string(k) +
                                  "]: expected an array of state labels");
        std::vector<std::string> block;
        for (std::size_t i = 0; i < j[k].size(); ++i)
            block.push_back(require_string(j[k][i], path.string() + ": [" + std::to_string(k) +
                                                        "][" + std::to_string(i) + "]"));
        blocks.push_back(std::move(block));
    }
    return Partition::create(gen, blocks);
}

Distribution parse_mu_spec(const std::string& spec, const Generator& gen) {
    if (spec == "uniform") return Distribution::uniform(gen.e_size());
    if (spec.rfind("point:", 0) == 0) {
        const std::string label = spec.substr(6);
        const auto idx = gen.index_of(label);
        if (!idx) throw ValidationError("point mass at unknown state label '" + label + "'");
        if (gen.is_target(*idx))
            throw ValidationError("point mass state '" + label + "' is in the target set");
        return Distribution::point(gen.e_size(), gen.e_index_of(*idx));
    }
    const std::filesystem::path path(spec);
    const json j = load_json(path);
    if (!j.is_object())
        throw ValidationError(path.string() + ": expected an object of state -> probability");
    std::vector<double> mass(gen.e_size(), 0.0);
    for (const auto& [label, value] : j.items()) {
        const double p = require_number(value, path.string() + ": " + label);
        const auto idx = gen.index_of(label);
        if (!idx) throw ValidationError(path.string() + ": " + label + ": unknown state label");
        if (gen.is_target(*idx))
            throw ValidationError(path.string() + ": " + label + ": state is in the target set");
        if (!(p >= 0.0))
            throw ValidationError(path.string() + ": " + label + ": negative probability");
        mass[gen.e_index_of(*idx)] = p;
    }
    return Distribution::over_e(std::move(mass));
}

TimeGrid parse_grid_spec(const std::string& spec) {
    std::string kind;
    if (spec.size() >= 4 && spec.substr(spec.size() - 4) == "geom") {
        kind = "geom";
    } else if (spec.size() >= 3 && spec.substr(spec.size() - 3) == "lin") {
        kind = "lin";
    } else {
        throw ValidationError("grid spec '" + spec + "' must end in 'geom' or 'lin'");
    }
    const std::string head = spec.substr(0, spec.size() - kind.size());
    std::istringstream in(head);
    double a = 0.0, b = 0.0;
    std::size_t n = 0;
    char c1 = 0, c2 = 0;
    if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || !in.eof())
        throw ValidationError("grid spec '" + spec + "' is not of the form a:b:n(geom|lin)");
    return kind == "geom" ? TimeGrid::geometric(a, b, n) : TimeGrid::linear(a, b, n);
}

TwoTypeSpec parse_two_type(const std::filesystem::path& path) {
    const json j = load_json(path);
    if (!j.is_object()) throw ValidationError(path.string() + ": expected an object");
    if (!j.contains("offspring") || !j["offspring"].is_array())
        throw ValidationError(path.string() + ": offspring: expected an array");
    std::vector<TwoTypeSpec::Offspring> offspring;
    for (std::size_t i = 0; i < j["offspring"].size(); ++i) {
        const std::string where = path.string() + ": offspring[" + std::to_string(i) + "]";
        const json& row = j["offspring"][i];
        if (!row.is_array() || row.size() != 3)
            throw ValidationError(where + ": expected [k1, k2, p]");
        const double k1 = require_number(row[0], where + "[0]");
        const double k2 = require_number(row[1], where + "[1]");
        if (k1 < 0 || k2 < 0 || k1 != std::floor(k1) || k2 != std::floor(k2))
            throw ValidationError(where + ": offspring counts must be nonnegative integers");
        offspring.push_back({static_cast<unsigned>(k1), static_cast<unsigned>(k2),
                             require_number(row[2], where + "[2]")});
    }
    double rate = 1.0;
    if (j.contains("branch_rate"))
        rate = require_number(j["branch_rate"], path.string() + ": branch_rate");
    return TwoTypeSpec::create(std::move(offspring), rate);
}

BirthDeathSpec parse_birth_death(const std::filesystem::path& path) {
    const json j = load_json(path);
    if (!j.is_object() || !j.contains("lambda") || !j.contains("nu"))
        throw ValidationError(path.string() + ": expected {\"lambda\": ..., \"nu\": ...}");
    return BirthDeathSpec::create(require_number(j["lambda"], path.string() + ": lambda"),
                                  require_number(j["nu"], path.string() + ": nu"));
}

std::string digest_files(const std::vector<std::filesystem::path>& paths) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open '" + path.string() + "'");
        char buf[4096];
        while (in.read(buf, sizeof buf), in.gcount() > 0) {
            for (std::streamsize i = 0; i < in.gcount(); ++i) {
                h ^= static_cast<unsigned char>(buf[i]);
                h *= 1099511628211ull;
            }
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

json RunReport::to_json() const {
    json j;
    j["command"] = command;
    j["inputs_digest"] = inputs_digest;
    j["result"] = result;
    j["warnings"] = warnings;
    return j;
}

void emit_report(const RunReport& report, std::ostream& os) {
    os << report.to_json().dump(2) << '\n';
}

void emit_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
    emit_report(report, out);
    if (!out) throw std::ios_base::failure("write failed for '" + path.string() + "'");
}

const char* to_string(ExpVerdict v) {
    return v == ExpVerdict::exponential ? "exponential" : "not_exponential";
}

const char* to_string(LadderStop r) {
    switch (r) {
        case LadderStop::requested_n: return "requested_n";
        case LadderStop::negativity: return "negativity";
        case LadderStop::exceeds_alpha_power: return "exceeds_alpha_power";
        case LadderStop::converged: return "converged";
    }
    return "?";
}

const char* to_string(Scheme s) {
    return s == Scheme::direct ? "direct" : "two_clock";
}

const char* to_string(BdClassification c) {
    return c == BdClassification::qsd ? "qsd" : "exponential_only";
}

json to_json(const ExponentialityReport& rep) {
    json j;
    j["alpha"] = rep.alpha;
    j["max_abs_dev"] = rep.max_abs_dev;
    j["verdict"] = to_string(rep.verdict);
    j["grid"] = rep.grid;
    j["deviations"] = rep.deviations;
    j["high_confidence"] = rep.high_confidence;
    if (!rep.reason.empty()) j["reason"] = rep.reason;
    return j;
}

json to_json(const LadderResult& lad) {
    json levels = json::array();
    for (const auto& level : lad.levels) {
        levels.push_back(std::vector<double>(level.e_mass().begin(), level.e_mass().end()));
    }
    json j;
    j["levels"] = std::move(levels);
    j["valid_up_to"] = lad.valid_up_to;
    j["terminated_reason"] = to_string(lad.terminated_reason);
    return j;
}

json to_json(const LumpedQsd& qsd, const LumpedGenerator& lg) {
    json j;
    j["qbar"] = lg.qbar();
    j["mu_bar"] = qsd.mu_bar;
    j["alpha"] = qsd.alpha;
    return j;
}

json to_json(const Envelope& env) {
    json j;
    j["alpha0"] = env.alpha0;
    j["alpha1"] = env.alpha1;
    return j;
}

json to_json(const ExpTest& test, const SampleSet& s) {
    json j;
    j["scheme"] = to_string(s.scheme);
    j["n"] = s.values.size();
    j["alpha"] = test.alpha;
    j["ks"] = test.statistic;
    j["p"] = test.p_value;
    j["verdict"] = test.exponential ? "exponential" : "not_exponential";
    return j;
}

}  // namespace fpt
