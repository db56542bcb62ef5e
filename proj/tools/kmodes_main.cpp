// kmodes: categorical-data clustering experiments from the command line.
//
// Subcommands:
//   cluster   fit k-modes on a delimited dataset over repeated initializations
//   simulate  generate a synthetic categorical dataset (nested CTMC design)
//   bench     shared-initialization benchmark of several algorithms, with
//             paired accuracy and wait-time statistics
//   compare   recompute paired statistics from an existing results file
//
// Every command writes a manifest.json sufficient to reproduce its
// non-timing outputs; rerun with --from-manifest <file>.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kmodes/algorithms.hpp"
#include "kmodes/dataset.hpp"
#include "kmodes/io.hpp"
#include "kmodes/simulate.hpp"
#include "kmodes/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ParseFlags {
    std::string input;
    std::string delimiter = ",";
    std::string label_col;
    std::string missing_token = "?";
    bool has_header = false;
    bool drop_missing_rows = false;
};

struct RunFlags {
    std::int32_t k = 0;
    std::int32_t k_min = 0;
    std::int32_t k_max = 0;
    std::int32_t inits = 100;
    std::string algorithms = "h97,ot,otqt";
    std::uint64_t seed = 0;
    std::int32_t threads = 0;
    std::string out_dir;
    bool strip_timing = false;
    std::string target = "exact";
    std::int32_t min_hits = 30;
    bool alpha_rule_flag = false;
    double p_prime = 0.0;
};

void add_parse_flags(CLI::App* cmd, ParseFlags& pf) {
    cmd->add_option("--input,-i", pf.input, "delimited categorical data file")->required();
    cmd->add_option("--delimiter", pf.delimiter, "field delimiter (default ,)");
    cmd->add_option("--label-col", pf.label_col, "true-class column (header name or 0-based index)");
    cmd->add_option("--missing-token", pf.missing_token, "missing-value token (default ?)");
    cmd->add_flag("--header", pf.has_header, "first row is a header");
    auto* rows = cmd->add_flag("--drop-missing-rows", pf.drop_missing_rows,
                               "drop rows containing the missing token instead of columns");
    cmd->add_flag("--drop-missing-cols", "drop columns containing the missing token (the default)")
        ->excludes(rows);
}

void add_run_flags(CLI::App* cmd, RunFlags& rf, bool with_target) {
    cmd->add_option("--k", rf.k, "number of clusters");
    cmd->add_option("--k-min", rf.k_min, "first K of a range");
    cmd->add_option("--k-max", rf.k_max, "last K of a range");
    cmd->add_option("--inits", rf.inits, "initializations per K (default 100)");
    cmd->add_option("--algorithms", rf.algorithms, "comma list from {h97,ot,otqt}");
    cmd->add_option("--seed", rf.seed, "master seed (default 0)");
    cmd->add_option("--threads", rf.threads, "worker threads (default: all cores)");
    cmd->add_option("--out-dir", rf.out_dir, "output directory")->envname("KMODES_OUT_DIR");
    cmd->add_flag("--strip-timing", rf.strip_timing,
                  "write zero wall times for bit-reproducible outputs");
    cmd->add_flag("--alpha-rule", rf.alpha_rule_flag,
                  "print the suggested number of initializations (needs --p-prime)");
    cmd->add_option("--p-prime", rf.p_prime, "effective dimension for the alpha rule");
    if (with_target) {
        cmd->add_option("--target", rf.target, "target definition: exact | p5 (default exact)");
        cmd->add_option("--min-hits", rf.min_hits,
                        "minimum hits on the exact minimum before the percentile fallback");
    }
}

std::vector<std::int32_t> k_list(const RunFlags& rf) {
    std::vector<std::int32_t> ks;
    if (rf.k > 0) ks.push_back(rf.k);
    if (rf.k_min > 0 && rf.k_max >= rf.k_min) {
        for (std::int32_t k = rf.k_min; k <= rf.k_max; ++k) ks.push_back(k);
    }
    if (ks.empty()) throw std::runtime_error("no K given: use --k or --k-min/--k-max");
    return ks;
}

std::vector<kmodes::Algorithm> algorithm_list(const std::string& csv) {
    std::vector<kmodes::Algorithm> algs;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const auto token = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!token.empty()) {
            const auto a = kmodes::algorithm_from_string(token);
            if (!a) throw std::runtime_error("unknown algorithm '" + token + "'");
            for (const auto seen : algs) {
                if (seen == *a) throw std::runtime_error("duplicate algorithm '" + token + "'");
            }
            algs.push_back(*a);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (algs.empty()) throw std::runtime_error("no algorithms requested");
    return algs;
}

kmodes::TargetMode target_mode_from(const std::string& s) {
    if (s == "exact") return kmodes::TargetMode::exact_min;
    if (s == "p5") return kmodes::TargetMode::percentile_5;
    throw std::runtime_error("unknown target mode '" + s + "' (use exact or p5)");
}

fs::path ensure_out_dir(const std::string& dir) {
    if (dir.empty()) throw std::runtime_error("no output directory: use --out-dir or KMODES_OUT_DIR");
    fs::create_directories(dir);
    return fs::path(dir);
}

json parse_flags_json(const ParseFlags& pf) {
    return json{{"input", pf.input},        {"delimiter", pf.delimiter},
                {"label_col", pf.label_col}, {"missing_token", pf.missing_token},
                {"header", pf.has_header},   {"drop_missing_rows", pf.drop_missing_rows}};
}

void parse_flags_from_json(const json& j, ParseFlags& pf) {
    pf.input = j.at("input").get<std::string>();
    pf.delimiter = j.at("delimiter").get<std::string>();
    pf.label_col = j.at("label_col").get<std::string>();
    pf.missing_token = j.at("missing_token").get<std::string>();
    pf.has_header = j.at("header").get<bool>();
    pf.drop_missing_rows = j.at("drop_missing_rows").get<bool>();
}

json run_flags_json(const RunFlags& rf) {
    return json{{"k", rf.k},
                {"k_min", rf.k_min},
                {"k_max", rf.k_max},
                {"inits", rf.inits},
                {"algorithms", rf.algorithms},
                {"seed", rf.seed},
                {"strip_timing", rf.strip_timing},
                {"target", rf.target},
                {"min_hits", rf.min_hits}};
}

void run_flags_from_json(const json& j, RunFlags& rf) {
    rf.k = j.at("k").get<std::int32_t>();
    rf.k_min = j.at("k_min").get<std::int32_t>();
    rf.k_max = j.at("k_max").get<std::int32_t>();
    rf.inits = j.at("inits").get<std::int32_t>();
    rf.algorithms = j.at("algorithms").get<std::string>();
    rf.seed = j.at("seed").get<std::uint64_t>();
    rf.strip_timing = j.at("strip_timing").get<bool>();
    rf.target = j.at("target").get<std::string>();
    rf.min_hits = j.at("min_hits").get<std::int32_t>();
}

kmodes::Dataset load_dataset(const ParseFlags& pf) {
    kmodes::ParseOptions opts;
    if (pf.delimiter.size() != 1) throw std::runtime_error("delimiter must be one character");
    opts.delimiter = pf.delimiter[0];
    if (!pf.label_col.empty()) opts.label_column = pf.label_col;
    opts.missing_token = pf.missing_token;
    opts.has_header = pf.has_header;
    opts.drop_missing_rows = pf.drop_missing_rows;
    return kmodes::parse_delimited(kmodes::read_text_file(pf.input), opts);
}

int effective_threads(const RunFlags& rf) {
    if (rf.threads > 0) return rf.threads;
    const auto hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void maybe_print_alpha_rule(const RunFlags& rf, std::int64_t n, std::int32_t max_k) {
    if (!rf.alpha_rule_flag) return;
    if (rf.p_prime <= 0) throw std::runtime_error("--alpha-rule needs --p-prime");
    const auto rule = kmodes::alpha_rule(n, rf.p_prime, max_k);
    std::cout << "alpha rule: alpha = " << rule.alpha << ", suggested initializations = "
              << rule.suggested_runs << " (smallest multiple of n*p'*maxK above 500000)\n";
}

std::vector<kmodes::RunResult> batch(const kmodes::Dataset& ds, const RunFlags& rf) {
    kmodes::BatchOptions opts;
    opts.k_values = k_list(rf);
    opts.n_inits = rf.inits;
    opts.algorithms = algorithm_list(rf.algorithms);
    opts.master_seed = rf.seed;
    opts.threads = effective_threads(rf);
    return kmodes::run_batch(ds, opts, [](const std::vector<std::int32_t>& a,
                                          const std::vector<std::int32_t>& b) {
        return kmodes::ari(a, b);
    });
}

void write_results_jsonl(const fs::path& dir, const std::vector<kmodes::RunResult>& results,
                         bool strip_timing) {
    std::string lines;
    for (const auto& r : results) {
        lines += kmodes::run_result_to_json(r, strip_timing).dump();
        lines += '\n';
    }
    kmodes::write_text_file((dir / "results.jsonl").string(), lines);
}

/// Per (algorithm, K): best objective, how often it was hit, mean ARI among
/// the hitting runs, total wall time.
void write_summary_csv(const fs::path& dir, const std::vector<kmodes::RunResult>& results,
                       bool strip_timing) {
    std::map<std::pair<std::string, std::int32_t>, std::vector<const kmodes::RunResult*>> groups;
    for (const auto& r : results) groups[{kmodes::to_string(r.algorithm), r.k}].push_back(&r);
    std::string out = "algorithm,k,best_objective,best_hits,mean_ari_best,total_seconds\n";
    for (const auto& [key, runs] : groups) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (const auto* r : runs) best = std::min(best, r->final_objective);
        std::int64_t hits = 0;
        double ari_sum = 0.0, seconds = 0.0;
        std::int64_t ari_n = 0;
        for (const auto* r : runs) {
            seconds += r->wall_seconds;
            if (r->final_objective == best) {
                ++hits;
                if (r->ari) {
                    ari_sum += *r->ari;
                    ++ari_n;
                }
            }
        }
        out += key.first + ',' + std::to_string(key.second) + ',' + std::to_string(best) + ',' +
               std::to_string(hits) + ',' +
               (ari_n ? kmodes::double_to_string(ari_sum / static_cast<double>(ari_n)) : std::string{}) +
               ',' + kmodes::double_to_string(strip_timing ? 0.0 : seconds) + '\n';
    }
    kmodes::write_text_file((dir / "summary.csv").string(), out);
}

/// Best run per K (lowest objective, first in (init, algorithm) order on
/// ties): assignment and decoded modes.
void write_best_artifacts(const fs::path& dir, const kmodes::Dataset& ds,
                          const std::vector<kmodes::RunResult>& results) {
    std::map<std::int32_t, const kmodes::RunResult*> best;
    for (const auto& r : results) {
        auto& slot = best[r.k];
        if (!slot || r.final_objective < slot->final_objective) slot = &r;
    }
    for (const auto& [k, run] : best) {
        std::string assign_csv = "obs,cluster\n";
        for (std::size_t i = 0; i < run->assignment.size(); ++i) {
            assign_csv += std::to_string(i) + ',' + std::to_string(run->assignment[i]) + '\n';
        }
        kmodes::write_text_file((dir / ("assignment_k" + std::to_string(k) + ".csv")).string(), assign_csv);

        const auto st = kmodes::ClusterState::build(ds, run->assignment, k);
        std::string modes_csv = "cluster";
        for (const auto& name : ds.column_names()) modes_csv += ',' + name;
        modes_csv += '\n';
        for (std::int32_t kk = 0; kk < k; ++kk) {
            modes_csv += std::to_string(kk);
            for (std::int32_t l = 0; l < ds.p(); ++l) {
                modes_csv += ',' + ds.category_name(l, st.mode(kk, l));
            }
            modes_csv += '\n';
        }
        kmodes::write_text_file((dir / ("modes_k" + std::to_string(k) + ".csv")).string(), modes_csv);
    }
}

std::vector<kmodes::ComparisonReport> build_comparisons(const std::vector<kmodes::RunResult>& results,
                                                        const std::vector<kmodes::Algorithm>& algs,
                                                        kmodes::TargetMode mode, std::int32_t min_hits) {
    // Group runs by (K, algorithm), ordered by init id. Batch output is
    // already ordered, but results files may have been filtered or merged.
    std::map<std::int32_t, std::map<kmodes::Algorithm, std::vector<kmodes::RunResult>>> by_k;
    std::map<std::int32_t, std::vector<kmodes::RunResult>> all_by_k;
    for (const auto& r : results) {
        by_k[r.k][r.algorithm].push_back(r);
        all_by_k[r.k].push_back(r);
    }
    for (auto& [k, groups] : by_k) {
        for (auto& [alg, runs] : groups) {
            std::stable_sort(runs.begin(), runs.end(),
                             [](const kmodes::RunResult& a, const kmodes::RunResult& b) {
                                 return a.init_id < b.init_id;
                             });
        }
    }
    std::vector<kmodes::ComparisonReport> reports;
    for (std::size_t a = 0; a < algs.size(); ++a) {
        for (std::size_t b = a + 1; b < algs.size(); ++b) {
            std::vector<kmodes::ComparisonReport> family;
            for (auto& [k, groups] : by_k) {
                auto fit = groups.find(algs[a]);
                auto sit = groups.find(algs[b]);
                if (fit == groups.end() || sit == groups.end()) continue;
                const auto [target, mode_used] = kmodes::target_objective(all_by_k[k], mode, min_hits);
                family.push_back(kmodes::compare_pair(fit->second, sit->second, target, mode_used));
            }
            kmodes::finish_probits(family);
            for (auto& rep : family) reports.push_back(std::move(rep));
        }
    }
    return reports;
}

void write_comparisons(const fs::path& dir, const std::vector<kmodes::ComparisonReport>& reports) {
    json arr = json::array();
    for (const auto& rep : reports) arr.push_back(kmodes::comparison_report_json(rep));
    kmodes::write_text_file((dir / "comparisons.json").string(), arr.dump(2) + "\n");
    kmodes::write_text_file((dir / "comparisons.csv").string(), kmodes::comparisons_csv(reports));
}

int cmd_cluster_or_bench(const std::string& command, ParseFlags& pf, RunFlags& rf,
                         const std::string& manifest_path) {
    if (!manifest_path.empty()) {
        const auto m = json::parse(kmodes::read_text_file(manifest_path));
        if (m.at("command").get<std::string>() != command) {
            throw std::runtime_error("manifest was written by a different command");
        }
        parse_flags_from_json(m.at("parse"), pf);
        run_flags_from_json(m.at("run"), rf);
    }
    const bool bench = (command == "bench");
    const auto algs = algorithm_list(rf.algorithms);
    if (bench && algs.size() < 2) throw std::runtime_error("bench needs at least two algorithms");

    const auto dir = ensure_out_dir(rf.out_dir);
    const auto ds = load_dataset(pf);
    const auto ks = k_list(rf);
    maybe_print_alpha_rule(rf, ds.n(), *std::max_element(ks.begin(), ks.end()));

    const auto results = batch(ds, rf);

    kmodes::write_text_file((dir / "dataset_summary.json").string(),
                            kmodes::dataset_summary_json(ds).dump(2) + "\n");
    write_results_jsonl(dir, results, rf.strip_timing);
    kmodes::write_text_file((dir / "runs.csv").string(), kmodes::runs_csv(results, rf.strip_timing));
    write_summary_csv(dir, results, rf.strip_timing);
    write_best_artifacts(dir, ds, results);
    if (bench) {
        const auto reports = build_comparisons(results, algs, target_mode_from(rf.target), rf.min_hits);
        write_comparisons(dir, reports);
    }

    const json manifest{{"command", command}, {"parse", parse_flags_json(pf)}, {"run", run_flags_json(rf)}};
    kmodes::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << command << ": wrote " << results.size() << " runs to " << dir.string() << "\n";
    return 0;
}

struct SimFlags {
    kmodes::SimConfig cfg;
    std::string out_dir;
};

int cmd_simulate(SimFlags& sf, const std::string& manifest_path) {
    if (!manifest_path.empty()) {
        const auto m = json::parse(kmodes::read_text_file(manifest_path));
        if (m.at("command").get<std::string>() != "simulate") {
            throw std::runtime_error("manifest was written by a different command");
        }
        const auto& c = m.at("config");
        sf.cfg.n = c.at("n").get<std::int32_t>();
        sf.cfg.p = c.at("p").get<std::int32_t>();
        sf.cfg.k = c.at("k").get<std::int32_t>();
        sf.cfg.categories = c.at("categories").get<std::int32_t>();
        sf.cfg.t = c.at("t").get<double>();
        sf.cfg.inner_change_prob = c.at("inner_change_prob").get<double>();
        sf.cfg.seed = c.at("seed").get<std::uint64_t>();
    }
    const auto dir = ensure_out_dir(sf.out_dir);
    const auto out = kmodes::simulate(sf.cfg);

    kmodes::write_text_file((dir / "dataset.csv").string(), kmodes::dataset_to_csv(out.dataset));

    std::string labels = "obs,cluster\n";
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        labels += std::to_string(i) + ',' + std::to_string(out.labels[i]) + '\n';
    }
    kmodes::write_text_file((dir / "labels.csv").string(), labels);

    std::string modes = "cluster";
    for (std::int32_t l = 0; l < out.dataset.p(); ++l) modes += ",c" + std::to_string(l);
    modes += '\n';
    for (std::size_t k = 0; k < out.true_modes.size(); ++k) {
        modes += std::to_string(k);
        for (const auto v : out.true_modes[k].values) modes += ',' + std::to_string(v);
        modes += '\n';
    }
    kmodes::write_text_file((dir / "modes.csv").string(), modes);

    json manifest{{"command", "simulate"},
                  {"config",
                   {{"n", sf.cfg.n},
                    {"p", sf.cfg.p},
                    {"k", sf.cfg.k},
                    {"categories", sf.cfg.categories},
                    {"t", sf.cfg.t},
                    {"inner_change_prob", sf.cfg.inner_change_prob},
                    {"seed", sf.cfg.seed}}},
                  {"t0", out.t0},
                  {"realized_proportions", out.proportions},
                  {"rejections",
                   {{"empty_cluster", out.rejections.empty_cluster},
                    {"duplicate_modes", out.rejections.duplicate_modes}}}};
    kmodes::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "simulate: wrote " << sf.cfg.n << " observations to " << dir.string() << "\n";
    return 0;
}

struct CompareFlags {
    std::string results_path;
    std::string algorithms;
    std::string target = "exact";
    std::int32_t min_hits = 30;
    std::string out_dir;
};

int cmd_compare(const CompareFlags& cf) {
    const auto dir = ensure_out_dir(cf.out_dir);
    std::vector<kmodes::RunResult> results;
    {
        std::istringstream in(kmodes::read_text_file(cf.results_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            results.push_back(kmodes::run_result_from_json(json::parse(line)));
        }
    }
    if (results.empty()) throw std::runtime_error("no runs in " + cf.results_path);

    std::vector<kmodes::Algorithm> algs;
    if (!cf.algorithms.empty()) {
        algs = algorithm_list(cf.algorithms);
    } else {
        for (const auto& r : results) {
            if (std::find(algs.begin(), algs.end(), r.algorithm) == algs.end()) algs.push_back(r.algorithm);
        }
    }
    if (algs.size() < 2) throw std::runtime_error("compare needs results from at least two algorithms");

    const auto reports = build_comparisons(results, algs, target_mode_from(cf.target), cf.min_hits);
    write_comparisons(dir, reports);

    const json manifest{{"command", "compare"},
                        {"results", cf.results_path},
                        {"algorithms", cf.algorithms},
                        {"target", cf.target},
                        {"min_hits", cf.min_hits}};
    kmodes::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "compare: wrote " << reports.size() << " reports to " << dir.string() << "\n";
    return 0;
}

}

int main(int argc, char** argv) {
    CLI::App app{"k-modes clustering toolkit"};
    app.require_subcommand(1);

    ParseFlags cluster_pf, bench_pf;
    RunFlags cluster_rf, bench_rf;
    std::string cluster_manifest, bench_manifest, sim_manifest;

    auto* cluster = app.add_subcommand("cluster", "cluster a categorical dataset");
    add_parse_flags(cluster, cluster_pf);
    add_run_flags(cluster, cluster_rf, false);
    cluster->add_option("--from-manifest", cluster_manifest, "reproduce a previous run");
    cluster->get_option("--input")->required(false);

    auto* bench = app.add_subcommand("bench", "paired benchmark on shared initializations");
    add_parse_flags(bench, bench_pf);
    add_run_flags(bench, bench_rf, true);
    bench->add_option("--from-manifest", bench_manifest, "reproduce a previous run");
    bench->get_option("--input")->required(false);

    SimFlags sim;
    auto* simulate = app.add_subcommand("simulate", "generate synthetic categorical data");
    simulate->add_option("--n", sim.cfg.n, "observations (default 1000)");
    simulate->add_option("--p", sim.cfg.p, "coordinates (default 10)");
    simulate->add_option("--k", sim.cfg.k, "clusters (default 5)");
    simulate->add_option("--categories", sim.cfg.categories, "categories per coordinate (default 4)");
    simulate->add_option("--t", sim.cfg.t, "outer separation time (default 1.0)");
    simulate->add_option("--seed", sim.cfg.seed, "seed (default 0)");
    simulate->add_option("--out-dir", sim.out_dir, "output directory")->envname("KMODES_OUT_DIR");
    simulate->add_option("--from-manifest", sim_manifest, "reproduce a previous run");

    CompareFlags cmp;
    auto* compare = app.add_subcommand("compare", "paired statistics from a results file");
    compare->add_option("--results", cmp.results_path, "results.jsonl from cluster/bench")->required();
    compare->add_option("--algorithms", cmp.algorithms, "pair order (default: order of appearance)");
    compare->add_option("--target", cmp.target, "target definition: exact | p5");
    compare->add_option("--min-hits", cmp.min_hits, "exact-minimum hit threshold");
    compare->add_option("--out-dir", cmp.out_dir, "output directory")->envname("KMODES_OUT_DIR");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cluster->parsed()) {
            if (cluster_manifest.empty() && cluster_pf.input.empty()) {
                throw std::runtime_error("cluster: --input (or --from-manifest) is required");
            }
            return cmd_cluster_or_bench("cluster", cluster_pf, cluster_rf, cluster_manifest);
        }
        if (bench->parsed()) {
            if (bench_manifest.empty() && bench_pf.input.empty()) {
                throw std::runtime_error("bench: --input (or --from-manifest) is required");
            }
            return cmd_cluster_or_bench("bench", bench_pf, bench_rf, bench_manifest);
        }
        if (simulate->parsed()) return cmd_simulate(sim, sim_manifest);
        if (compare->parsed()) return cmd_compare(cmp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
