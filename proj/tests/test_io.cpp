#include "doctest.h"

#include "kmodes/io.hpp"
#include "oracles.hpp"

using namespace kmodes;

TEST_CASE("run results round-trip through json lines") {
    RunResult r;
    r.algorithm = Algorithm::OTQT;
    r.k = 4;
    r.init_id = 17;
    r.seed = 0xdeadbeefcafe1234ULL;
    r.final_objective = 123;
    r.main_passes = 3;
    r.quick_passes = 2;
    r.transfers = 19;
    r.wall_seconds = 0.25;
    r.assignment = {0, 1, 2, 3, 0};
    r.ari = 0.875;

    const auto j = run_result_to_json(r);
    const auto back = run_result_from_json(j);
    CHECK(back.algorithm == r.algorithm);
    CHECK(back.k == r.k);
    CHECK(back.init_id == r.init_id);
    CHECK(back.seed == r.seed);
    CHECK(back.final_objective == r.final_objective);
    CHECK(back.transfers == r.transfers);
    CHECK(back.wall_seconds == r.wall_seconds);
    CHECK(back.assignment == r.assignment);
    REQUIRE(back.ari.has_value());
    CHECK(*back.ari == *r.ari);

    const auto stripped = run_result_to_json(r, /*strip_timing=*/true);
    CHECK(stripped.at("wall_seconds").get<double>() == 0.0);
}

TEST_CASE("doubles round-trip at full precision") {
    for (const double v : {0.1, 1.0 / 3.0, 5.851298876620447, 1e-17, 123456.789012345678}) {
        CHECK(std::stod(double_to_string(v)) == v);
    }
}

TEST_CASE("dataset summary reports drops and sizes") {
    ParseOptions opts;
    opts.label_column = "2";
    const auto ds = parse_delimited("a,x,yes\nb,x,no\nc,y,yes\n", opts);
    const auto j = dataset_summary_json(ds);
    CHECK(j.at("n") == 3);
    CHECK(j.at("p") == 2);
    CHECK(j.at("has_labels") == true);
    CHECK(j.at("columns")[0].at("categories") == 3);
}

TEST_CASE("state snapshot carries assignments, modes, objective") {
    auto inst = oracles::tie_move_instance();
    const auto st = ClusterState::build(inst.dataset, inst.assign, 2);
    const auto j = state_snapshot_json(st);
    CHECK(j.at("objective") == 6);
    CHECK(j.at("k") == 2);
    CHECK(j.at("assignments").size() == 7);
    CHECK(j.at("modes").size() == 2);
}

TEST_CASE("csv writers emit one line per record") {
    std::vector<RunResult> results(2);
    results[0].algorithm = Algorithm::H97;
    results[0].k = 2;
    results[0].final_objective = 9;
    results[1].algorithm = Algorithm::OT;
    results[1].k = 2;
    results[1].init_id = 1;
    results[1].final_objective = 8;
    const auto csv = runs_csv(results, false);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("h97,2,0,9,") != std::string::npos);
}
