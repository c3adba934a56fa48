#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "doatrack/io.hpp"

// Integration tests driving the built command-line binary.

namespace {

#ifndef DOATRACK_CLI_PATH
#error "DOATRACK_CLI_PATH must point at the doatrack binary"
#endif

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DOATRACK_CLI_PATH) + " " + args + " >cli_stdout.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("simulate is deterministic per seed and writes 101 frames") {
    REQUIRE(run_cli("simulate --seed 11 --out cli_a") == 0);
    REQUIRE(run_cli("simulate --seed 11 --out cli_b") == 0);
    CHECK(slurp("cli_a_detections.jsonl") == slurp("cli_b_detections.jsonl"));
    CHECK(slurp("cli_a_truth.jsonl") == slurp("cli_b_truth.jsonl"));

    const auto frames = doatrack::read_detection_frames("cli_a_detections.jsonl");
    CHECK(frames.size() == 101);
}

TEST_CASE("perfect-sensor simulation matches truth counts per line") {
    std::ofstream("cli_perfect.json") << R"({"sensor": {"pd": 1.0, "lambda_c": 0.0}})";
    REQUIRE(run_cli("simulate --seed 2 --config cli_perfect.json --out cli_p") == 0);
    const auto det = doatrack::read_detection_frames("cli_p_detections.jsonl");
    const auto truth = doatrack::read_truth_frames("cli_p_truth.jsonl");
    REQUIRE(det.size() == truth.size());
    for (std::size_t i = 0; i < det.size(); ++i)
        CHECK(det[i].doas->size() == truth[i].states.size());
}

TEST_CASE("track produces trajectories inside the FoV footprint and reruns identically") {
    REQUIRE(run_cli("simulate --seed 5 --out cli_t") == 0);
    std::ofstream("cli_fast.json") << R"({"scenario": {"steps": 40}})";
    REQUIRE(run_cli("track cli_t_detections.jsonl --out cli_r1") == 0);
    REQUIRE(run_cli("track cli_t_detections.jsonl --out cli_r2") == 0);
    CHECK(slurp("cli_r1_trajectories.json") == slurp("cli_r2_trajectories.json"));

    // Every estimated position must project inside the camera footprint,
    // checked loosely via the ground bounding box of the FoV corners.
    const auto ests = doatrack::read_estimates("cli_r1_trajectories.json");
    CHECK(!ests.empty());
    for (const auto& e : ests) {
        for (const auto& x : e.states) {
            CHECK(x(0) > -40.0);
            CHECK(x(0) < 130.0);
            CHECK(x(2) > -40.0);
            CHECK(x(2) < 130.0);
        }
    }
}

TEST_CASE("track on an empty measurement file yields no trajectories") {
    const auto frames = doatrack::read_detection_frames("cli_t_detections.jsonl");
    std::vector<doatrack::DetectionFrame> empty;
    for (int k = 0; k < 10; ++k) {
        doatrack::DetectionFrame f = frames[static_cast<std::size_t>(k)];
        f.doas = std::vector<Eigen::Vector3d>{};
        empty.push_back(std::move(f));
    }
    doatrack::write_detection_frames("cli_empty.jsonl", empty);
    REQUIRE(run_cli("track cli_empty.jsonl --out cli_e") == 0);
    CHECK(doatrack::read_estimates("cli_e_trajectories.json").empty());
}

TEST_CASE("evaluate on truth equals zero and matches its own CSV") {
    // Build an estimates file straight from the truth states.
    const auto truth = doatrack::read_truth_frames("cli_t_truth.jsonl");
    std::vector<doatrack::TrajectoryEstimate> ests;
    for (const auto& tf : truth) {
        for (std::size_t i = 0; i < tf.states.size(); ++i) {
            const int id = tf.ids[i];
            auto it = std::find_if(ests.begin(), ests.end(),
                                   [&](const auto& e) { return e.track_id == id; });
            if (it == ests.end()) {
                ests.push_back({id, tf.frame, tf.frame, {}});
                it = std::prev(ests.end());
            }
            it->end_step = tf.frame;
            it->states.push_back(tf.states[i]);
        }
    }
    doatrack::write_estimates("cli_truth_est.json", ests);
    REQUIRE(run_cli("evaluate --truth cli_t_truth.jsonl --estimates cli_truth_est.json "
                    "--out cli_zero.csv") == 0);
    const std::string text = slurp("cli_zero.csv");
    CHECK(text.find("rms,0,") != std::string::npos);

    // RMS from the per-step rows must match the summary line.
    REQUIRE(run_cli("evaluate --truth cli_t_truth.jsonl --estimates cli_r1_trajectories.json "
                    "--out cli_g.csv") == 0);
    std::ifstream csv("cli_g.csv");
    std::string line;
    std::getline(csv, line);  // header
    double sum2 = 0.0;
    int count = 0;
    double rms_reported = -1.0;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string first, second;
        std::getline(ss, first, ',');
        std::getline(ss, second, ',');
        if (first == "rms") {
            rms_reported = std::stod(second);
        } else {
            sum2 += std::stod(second) * std::stod(second);
            ++count;
        }
    }
    REQUIRE(count > 0);
    CHECK(rms_reported == doctest::Approx(std::sqrt(sum2 / count)).epsilon(1e-6));
}

TEST_CASE("calibrate recovers clean-data parameters") {
    std::ofstream("cli_clean.json") << R"({"sensor": {"pd": 1.0, "lambda_c": 0.0}})";
    REQUIRE(run_cli("simulate --seed 7 --config cli_clean.json --out cli_c") == 0);
    REQUIRE(run_cli("calibrate --truth cli_c_truth_doas.jsonl "
                    "--detections cli_c_detections.jsonl --out cli_cal.json") == 0);
    nlohmann::json report;
    std::ifstream("cli_cal.json") >> report;
    CHECK(report["pd"].get<double>() >= 0.99);
    const auto trace = report["bound_trace"].get<std::vector<double>>();
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

TEST_CASE("schema violations exit with code 2") {
    std::ofstream("cli_bad.jsonl") << "{broken\n";
    CHECK(run_cli("track cli_bad.jsonl --out cli_x") == 2);
    CHECK(run_cli("evaluate --truth cli_bad.jsonl --estimates cli_r1_trajectories.json "
                  "--out cli_y.csv") == 2);
    std::ofstream("cli_badcfg.json") << R"({"sensor": {"pd": 1.5}})";
    CHECK(run_cli("simulate --config cli_badcfg.json --out cli_z") == 2);
    std::ofstream("cli_unknown.json") << R"({"sensor": {"unknown_key": 1.0}})";
    CHECK(run_cli("simulate --config cli_unknown.json --out cli_z") == 2);
    CHECK(run_cli("bogus-subcommand") == 2);
}
