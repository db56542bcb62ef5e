#ifndef KMODES_IO_HPP
#define KMODES_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "algorithms.hpp"
#include "dataset.hpp"
#include "simulate.hpp"
#include "stats.hpp"

/**
 * @file io.hpp
 *
 * @brief Serialization of results and datasets: JSON-lines run records, CSV
 * summaries, dataset summaries and manifests.
 *
 * Machine-readable numeric output is full precision: doubles are written
 * with enough digits to round-trip exactly.
 */

namespace kmodes {

/// Shortest exact decimal form of a double (%.17g round-trips).
inline std::string double_to_string(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json run_result_to_json(const RunResult& r, bool strip_timing = false,
                                         bool include_assignment = true) {
    nlohmann::json j{
        {"algorithm", to_string(r.algorithm)},
        {"k", r.k},
        {"init_id", r.init_id},
        {"seed", r.seed},
        {"objective", r.final_objective},
        {"main_passes", r.main_passes},
        {"quick_passes", r.quick_passes},
        {"transfers", r.transfers},
        {"wall_seconds", strip_timing ? 0.0 : r.wall_seconds},
        {"empty_cluster", r.empty_cluster_flag},
    };
    if (r.ari) j["ari"] = *r.ari;
    if (include_assignment) j["assignment"] = r.assignment;
    return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
    RunResult r;
    const auto alg = algorithm_from_string(j.at("algorithm").get<std::string>());
    if (!alg) throw std::runtime_error("unknown algorithm in results file");
    r.algorithm = *alg;
    r.k = j.at("k").get<std::int32_t>();
    r.init_id = j.at("init_id").get<std::int32_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.final_objective = j.at("objective").get<std::int64_t>();
    r.main_passes = j.at("main_passes").get<std::int32_t>();
    r.quick_passes = j.at("quick_passes").get<std::int32_t>();
    r.transfers = j.at("transfers").get<std::int64_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.empty_cluster_flag = j.at("empty_cluster").get<bool>();
    if (j.contains("ari")) r.ari = j.at("ari").get<double>();
    if (j.contains("assignment")) r.assignment = j.at("assignment").get<std::vector<std::int32_t>>();
    return r;
}

inline nlohmann::json dataset_summary_json(const Dataset& ds) {
    nlohmann::json cols = nlohmann::json::array();
    for (std::int32_t j = 0; j < ds.p(); ++j) {
        cols.push_back({{"name", ds.column_names()[static_cast<std::size_t>(j)]},
                        {"categories", ds.category_count(j)}});
    }
    nlohmann::json drops = nlohmann::json::array();
    for (const auto& d : ds.dropped_columns()) {
        drops.push_back({{"name", d.name}, {"reason", to_string(d.reason)}});
    }
    nlohmann::json j{{"n", ds.n()}, {"p", ds.p()}, {"columns", cols}, {"dropped", drops},
                     {"has_labels", ds.has_labels()}};
    if (ds.has_labels()) j["label_names"] = ds.label_names();
    return j;
}

inline nlohmann::json state_snapshot_json(const ClusterState& st) {
    nlohmann::json modes = nlohmann::json::array();
    for (std::int32_t k = 0; k < st.k_count(); ++k) {
        const auto row = st.mode_row(k);
        modes.push_back(std::vector<std::int32_t>(row.begin(), row.end()));
    }
    return nlohmann::json{{"k", st.k_count()},
                          {"objective", st.objective()},
                          {"assignments", st.assignments()},
                          {"modes", modes}};
}

inline nlohmann::json comparison_report_json(const ComparisonReport& rep) {
    nlohmann::json j{
        {"k", rep.k},
        {"first", to_string(rep.first)},
        {"second", to_string(rep.second)},
        {"accuracy",
         {{"target", rep.target},
          {"target_mode", to_string(rep.target_mode)},
          {"n10", rep.n10},
          {"n01", rep.n01},
          {"left_tail", rep.left_tail},
          {"holm_adjusted", rep.holm_adjusted},
          {"probit", rep.probit_value},
          {"rate_ratio", rep.rate_ratio.ratio},
          {"rate_ratio_ci", {rep.rate_ratio.lo, rep.rate_ratio.hi}}}},
    };
    nlohmann::json timing{{"strikes_first", rep.strikes1}, {"strikes_second", rep.strikes2}};
    if (rep.wald) {
        timing["mean_wait_first"] = rep.wald->mean1;
        timing["mean_wait_second"] = rep.wald->mean2;
        timing["wald_statistic"] = rep.wald->statistic;
        timing["wald_p"] = rep.wald->p_value;
    }
    if (rep.fieller) {
        timing["fieller_bounded"] = rep.fieller->bounded;
        if (rep.fieller->bounded) timing["fieller_ci"] = {rep.fieller->lo, rep.fieller->hi};
    }
    if (!rep.wait_note.empty()) timing["note"] = rep.wait_note;
    j["timing"] = timing;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Dataset rows decoded back to category names, one CSV line per row.
inline std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    for (std::int32_t i = 0; i < ds.n(); ++i) {
        for (std::int32_t j = 0; j < ds.p(); ++j) {
            if (j) out += ',';
            out += ds.category_name(j, ds.code(i, j));
        }
        out += '\n';
    }
    return out;
}

inline std::string runs_csv(const std::vector<RunResult>& results, bool strip_timing) {
    std::string out = "algorithm,k,init_id,objective,wall_seconds,ari\n";
    for (const auto& r : results) {
        out += to_string(r.algorithm);
        out += ',' + std::to_string(r.k);
        out += ',' + std::to_string(r.init_id);
        out += ',' + std::to_string(r.final_objective);
        out += ',' + double_to_string(strip_timing ? 0.0 : r.wall_seconds);
        out += ',' + (r.ari ? double_to_string(*r.ari) : std::string{});
        out += '\n';
    }
    return out;
}

inline std::string comparisons_csv(const std::vector<ComparisonReport>& reps) {
    std::string out =
        "k,first,second,target,target_mode,n10,n01,left_tail,holm_adjusted,probit,"
        "rate_ratio,rr_lo,rr_hi,strikes_first,strikes_second,wald_statistic,wald_p,"
        "fieller_lo,fieller_hi\n";
    for (const auto& r : reps) {
        out += std::to_string(r.k);
        out += ',';
        out += to_string(r.first);
        out += ',';
        out += to_string(r.second);
        out += ',' + std::to_string(r.target);
        out += ',';
        out += to_string(r.target_mode);
        out += ',' + std::to_string(r.n10);
        out += ',' + std::to_string(r.n01);
        out += ',' + double_to_string(r.left_tail);
        out += ',' + double_to_string(r.holm_adjusted);
        out += ',' + double_to_string(r.probit_value);
        out += ',' + double_to_string(r.rate_ratio.ratio);
        out += ',' + double_to_string(r.rate_ratio.lo);
        out += ',' + double_to_string(r.rate_ratio.hi);
        out += ',' + std::to_string(r.strikes1);
        out += ',' + std::to_string(r.strikes2);
        out += ',' + (r.wald ? double_to_string(r.wald->statistic) : std::string{});
        out += ',' + (r.wald ? double_to_string(r.wald->p_value) : std::string{});
        out += ',' + (r.fieller && r.fieller->bounded ? double_to_string(r.fieller->lo) : std::string{});
        out += ',' + (r.fieller && r.fieller->bounded ? double_to_string(r.fieller->hi) : std::string{});
        out += '\n';
    }
    return out;
}

}

#endif
