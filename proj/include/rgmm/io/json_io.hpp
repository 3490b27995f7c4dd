#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/tv.hpp"
#include "rgmm/decode/candidates.hpp"
#include "rgmm/pipeline/learn.hpp"

namespace rgmm::io {

using Json = nlohmann::ordered_json;

inline Json vector_json(const VectorXd& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json matrix_json(const MatrixXd& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

inline VectorXd vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + ": expected an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidInput(what + ": non-numeric entry");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

/// Row-major nested arrays.
inline MatrixXd matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + ": expected an array of rows");
    auto rows = static_cast<Index>(j.size());
    MatrixXd m(rows, rows == 0 ? 0 : static_cast<Index>(j[0].size()));
    for (Index i = 0; i < rows; ++i) {
        VectorXd r = vector_from_json(j[static_cast<std::size_t>(i)], what);
        if (r.size() != m.cols()) throw InvalidInput(what + ": ragged rows");
        m.row(i) = r.transpose();
    }
    return m;
}

inline Json mixture_json(const GaussianMixture& m) {
    Json j;
    j["weights"] = m.weights;
    Json comps = Json::array();
    for (const auto& c : m.components) comps.push_back({{"mean", vector_json(c.mean)}, {"cov", matrix_json(c.cov)}});
    j["components"] = comps;
    return j;
}

/// Parses and validates {"weights": [...], "components": [{"mean": [...], "cov": [[...]]}, ...]}.
inline GaussianMixture mixture_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("weights") || !j.contains("components")) throw InvalidInput("mixture: missing weights or components");
    if (!j["components"].is_array()) throw InvalidInput("mixture: components must be an array");
    GaussianMixture m;
    VectorXd w = vector_from_json(j["weights"], "mixture weights");
    m.weights.assign(w.data(), w.data() + w.size());
    for (const auto& c : j["components"]) {
        if (!c.is_object() || !c.contains("mean") || !c.contains("cov")) throw InvalidInput("mixture: component needs mean and cov");
        m.components.push_back({vector_from_json(c["mean"], "component mean"), matrix_from_json(c["cov"], "component cov")});
    }
    m.validate();
    return m;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Mixture file with the seed that produced it.
inline void save_mixture(const std::string& path, const GaussianMixture& m, std::optional<std::uint64_t> seed = std::nullopt) {
    Json j = mixture_json(m);
    if (seed) j["seed"] = *seed;
    write_json_file(path, j);
}

inline GaussianMixture load_mixture(const std::string& path) { return mixture_from_json(read_json_file(path)); }

/// JSON array of {"mean", "cov", "tags"}.
inline Json candidates_json(const CandidateList& list) {
    Json a = Json::array();
    for (const auto& c : list.entries) {
        Json tags = Json::object();
        for (const auto& [k, v] : c.tags) tags[k] = v;
        a.push_back({{"mean", vector_json(c.mean)}, {"cov", matrix_json(c.cov)}, {"tags", tags}});
    }
    return a;
}

inline CandidateList candidates_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidInput("candidate list: expected an array");
    CandidateList list;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("mean") || !e.contains("cov")) throw InvalidInput("candidate list: entry needs mean and cov");
        Candidate c{vector_from_json(e["mean"], "candidate mean"), matrix_from_json(e["cov"], "candidate cov"), {}};
        if (c.cov.rows() != c.mean.size() || c.cov.cols() != c.mean.size()) throw InvalidInput("candidate list: shape mismatch");
        if (e.contains("tags"))
            for (const auto& [k, v] : e["tags"].items()) c.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
        list.entries.push_back(std::move(c));
    }
    list.budget = list.entries.size();
    return list;
}

inline Json config_json(const PipelineConfig& cfg) {
    Json j;
    j["k"] = cfg.k;
    j["eps"] = cfg.eps;
    j["mode"] = to_string(cfg.mode);
    j["weight_mode"] = to_string(cfg.weight_mode);
    j["oracle"] = to_string(cfg.oracle);
    j["outer_budget"] = cfg.outer_budget;
    j["collapse_budget"] = cfg.collapse_budget;
    j["cover_budget"] = cfg.cover_budget;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    Json c = Json::object();
    for (const auto& [key, value] : cfg.constants) c[key] = value;
    j["constants"] = c;
    return j;
}

/// Fields absent from `j` keep their defaults; unknown constants are rejected.
inline PipelineConfig config_from_json(const Json& j, PipelineConfig cfg = {}) {
    if (!j.is_object()) throw InvalidInput("config: expected an object");
    try {
        if (j.contains("k")) cfg.k = j["k"].get<int>();
        if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
        if (j.contains("mode")) cfg.mode = parse_pipeline_mode(j["mode"].get<std::string>());
        if (j.contains("weight_mode")) cfg.weight_mode = parse_weight_mode(j["weight_mode"].get<std::string>());
        if (j.contains("oracle")) cfg.oracle = parse_oracle_mode(j["oracle"].get<std::string>());
        if (j.contains("outer_budget")) cfg.outer_budget = j["outer_budget"].get<int>();
        if (j.contains("collapse_budget")) cfg.collapse_budget = j["collapse_budget"].get<int>();
        if (j.contains("cover_budget")) cfg.cover_budget = j["cover_budget"].get<int>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
        if (j.contains("constants")) {
            for (const auto& [key, value] : j["constants"].items()) {
                if (!cfg.constants.contains(key)) throw InvalidInput("config: unknown constant " + key);
                cfg.constants[key] = value.get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    return cfg;
}

/// Node as {"step", "k", "eps", "n", "ok", "note", "values", "children": [...]}.
inline Json trace_json(const BranchNode& node) {
    Json j;
    j["step"] = node.step;
    j["k"] = node.k;
    j["eps"] = node.eps;
    j["n"] = node.n;
    j["ok"] = node.ok;
    if (!node.note.empty()) j["note"] = node.note;
    Json v = Json::object();
    for (const auto& [key, value] : node.values) v[key] = value;
    j["values"] = v;
    Json children = Json::array();
    for (const auto& c : node.children) children.push_back(trace_json(c));
    j["children"] = children;
    return j;
}

inline Json report_json(const RunReport& r) {
    Json j;
    j["success"] = r.success;
    if (!r.failure.empty()) j["failure"] = r.failure;
    j["seed"] = r.seed;
    j["k"] = r.k;
    j["eps"] = r.eps;
    if (r.chosen) {
        j["chosen"] = {{"index", r.chosen_index},
                       {"provenance", r.chosen->provenance},
                       {"raw_weight_sum", r.chosen->raw_weight_sum},
                       {"mixture", mixture_json(r.chosen->mixture)}};
    }
    if (r.tv) j["tv_vs_truth"] = {{"value", r.tv->value}, {"std_error", r.tv->std_error}};
    Json sizes = Json::object();
    for (const auto& [key, value] : r.list_sizes) sizes[key] = value;
    j["list_sizes"] = sizes;
    j["config"] = config_json(r.config);
    j["constants"] = j["config"]["constants"];
    Json sched = Json::array();
    for (const auto& s : r.schedule.sites) sched.push_back({{"site", s.name}, {"formula", s.formula}, {"used", s.used}, {"floored", s.floored}});
    j["exponent_schedule"] = sched;
    j["error_exponent"] = r.error_exponent;
    Json tournament = Json::array();
    for (const auto& c : r.tournament.ledger)
        tournament.push_back({{"i", c.i}, {"j", c.j}, {"empirical", c.empirical}, {"deficit_i", c.deficit_i}, {"deficit_j", c.deficit_j},
                              {"winner", c.winner}, {"recheck", c.recheck}});
    j["tournament"] = {{"winner", r.tournament.winner}, {"cycled", r.tournament.cycled}, {"ledger", tournament}};
    Json traces = Json::array();
    for (const auto& t : r.traces) traces.push_back(trace_json(t));
    j["branch_trace"] = traces;
    Json timings = Json::object();
    for (const auto& [key, value] : r.timings) timings[key] = value;
    j["timings_seconds"] = timings;
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace rgmm::io
