#include <doctest.h>

#include <cmath>

#include "doatrack/sim.hpp"

using namespace doatrack;

namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;
}

TEST_CASE("default_paper_scenario constants") {
    const ScenarioConfig cfg = default_paper_scenario();
    CHECK(cfg.steps == 101);
    CHECK(cfg.sensor.kappa == 700.0);
    CHECK(cfg.sensor.lambda_c == 5.0);
    CHECK(cfg.ps == 0.99);
    CHECK(cfg.sigma_q2 == 0.5);
    CHECK(cfg.tau == doctest::Approx(1.0 / 6.0));
    CHECK(cfg.birth.lambda_bar_b_initial == 1.0);
    CHECK(cfg.birth.lambda_bar_b == 0.025);
    CHECK(cfg.birth.sigma_v2 == 400.0);
    CHECK(cfg.scripted.size() == 4);
    CHECK(cfg.scripted[3].death_step == 50);
}

TEST_CASE("scripted objects stay inside the FoV while alive") {
    const ScenarioConfig cfg = default_paper_scenario();
    RandomStream rng(1);
    const SimOutput out = generate(cfg, rng);
    REQUIRE(out.frames.size() == 101);
    for (const auto& f : out.frames) {
        for (const auto& x : f.truth_states)
            CHECK(cfg.sensor.fov.contains(doa_mean(x, f.pose)));
    }
    // Death at step 50: the fourth object is absent from then on.
    CHECK(out.frames[49].truth_states.size() == 4);
    CHECK(out.frames[50].truth_states.size() == 3);
    CHECK(out.frames[100].truth_states.size() == 3);
    REQUIRE(out.truth.size() == 4);
    CHECK(out.truth[3].states.size() == 50);
}

TEST_CASE("perfect sensor yields one measurement per alive object") {
    ScenarioConfig cfg = default_paper_scenario();
    cfg.sensor.pd = 1.0;
    cfg.sensor.lambda_c = 0.0;
    RandomStream rng(2);
    const SimOutput out = generate(cfg, rng);
    for (const auto& f : out.frames)
        CHECK(f.measurements.size() == f.truth_states.size());
}

TEST_CASE("all measurements satisfy the FoV indicator") {
    const ScenarioConfig cfg = default_paper_scenario();
    RandomStream rng(3);
    const SimOutput out = generate(cfg, rng);
    for (const auto& f : out.frames)
        for (const auto& z : f.measurements) CHECK(cfg.sensor.fov.contains(z));
}

TEST_CASE("clutter count concentrates at the configured rate") {
    ScenarioConfig cfg = default_paper_scenario();
    cfg.steps = 10'000;
    cfg.sensor.pd = 0.0;  // clutter only
    cfg.mode = TruthMode::Scripted;
    cfg.scripted.clear();
    RandomStream rng(4);
    const SimOutput out = generate(cfg, rng);
    double total = 0.0;
    for (const auto& f : out.frames) total += static_cast<double>(f.measurements.size());
    CHECK(std::abs(total / cfg.steps - 5.0) / 5.0 < 0.02);
}

TEST_CASE("detection directions concentrate per the VMF model") {
    ScenarioConfig cfg = default_paper_scenario();
    cfg.steps = 3000;
    cfg.sensor.pd = 1.0;
    cfg.sensor.lambda_c = 0.0;
    // A single static object so h(x) is fixed per frame.
    cfg.scripted = {{0, 3000, {25.0, 0.0, 25.0, 0.0}}};
    RandomStream rng(5);
    const SimOutput out = generate(cfg, rng);
    double dot_sum = 0.0;
    long n = 0;
    for (const auto& f : out.frames) {
        const Eigen::Vector3d h = doa_mean(f.truth_states[0], f.pose);
        for (const auto& z : f.measurements) {
            dot_sum += h.dot(z);
            ++n;
        }
    }
    // Mean cosine toward h equals the mean resultant length.
    CHECK(std::abs(dot_sum / n - bessel_ratio(700.0)) < 5e-3);
}

TEST_CASE("generation is bit-identical per seed") {
    const ScenarioConfig cfg = default_paper_scenario();
    RandomStream a(9), b(9);
    const SimOutput ra = generate(cfg, a);
    const SimOutput rb = generate(cfg, b);
    REQUIRE(ra.frames.size() == rb.frames.size());
    for (std::size_t k = 0; k < ra.frames.size(); ++k) {
        REQUIRE(ra.frames[k].measurements.size() == rb.frames[k].measurements.size());
        for (std::size_t j = 0; j < ra.frames[k].measurements.size(); ++j)
            CHECK(ra.frames[k].measurements[j] == rb.frames[k].measurements[j]);
    }
}

TEST_CASE("sampled mode produces births and deaths") {
    ScenarioConfig cfg = default_paper_scenario();
    cfg.mode = TruthMode::Sampled;
    cfg.scripted.clear();
    cfg.steps = 60;
    cfg.birth.lambda_bar_b_initial = 3.0;
    cfg.birth.lambda_bar_b = 0.2;
    cfg.ps = 0.95;
    RandomStream rng(6);
    const SimOutput out = generate(cfg, rng);
    CHECK(out.truth.size() > 3);  // initial births plus later ones
    bool any_death = false;
    for (const auto& t : out.truth)
        any_death = any_death || (t.birth_step + static_cast<int>(t.states.size()) < cfg.steps);
    CHECK(any_death);
}

TEST_CASE("scripted object outside the FoV is a config error") {
    ScenarioConfig cfg = default_paper_scenario();
    cfg.scripted.push_back({0, 101, {-500.0, 0.0, -500.0, 0.0}});
    RandomStream rng(7);
    CHECK_THROWS_AS(generate(cfg, rng), std::invalid_argument);
}

TEST_CASE("make_pose_looking_at aims the boresight") {
    const CameraPose pose =
        make_pose_looking_at({0, 0, -25}, {25, 25, 0}, 69 * kDeg, 42.27 * kDeg, 1920, 1080);
    const Eigen::Vector3d h = doa_mean(Eigen::Vector4d(25, 0, 25, 0), pose);
    CHECK((h - Eigen::Vector3d(1, 0, 0)).norm() < 1e-9);  // camera x-axis
    // Image right axis is horizontal: its local z-component is zero.
    const Eigen::Matrix3d r = rotation_matrix(pose.quat);
    CHECK(std::abs(r(1, 2)) < 1e-12);
}
