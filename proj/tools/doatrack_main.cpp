// doatrack command line: simulate / track / calibrate / evaluate.
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "doatrack/calibration.hpp"
#include "doatrack/io.hpp"
#include "doatrack/metrics.hpp"
#include "doatrack/sim.hpp"
#include "doatrack/tpmbm.hpp"

namespace {

using doatrack::IoError;
using nlohmann::json;

constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct RunConfig {
    doatrack::FilterConfig filter;
    double tau = 1.0 / 6.0;
    double sigma_q2 = 0.5;
    double ps = 0.99;
    doatrack::BirthModel birth{0.025, 1.0, 400.0};
    doatrack::MeasurementModel sensor{700.0, 0.9, 5.0,
                                      {69.0 * kDeg, 42.27 * kDeg}};
    doatrack::ScenarioConfig scenario = doatrack::default_paper_scenario();
};

[[noreturn]] void config_error(const std::string& message) {
    throw IoError(0, "config: " + message);
}

double number_field(const json& j, const char* key, double fallback, double lo, double hi) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) config_error(std::string(key) + " must be numeric");
    const double v = j[key].get<double>();
    if (!(v >= lo && v <= hi))
        config_error(std::string(key) + " out of range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
    return v;
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || (key == k);
        if (!ok) config_error("unknown key '" + key + "' in " + where);
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw IoError(0, "cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(0, std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, {"filter", "motion", "birth", "sensor", "scenario"}, "config root");

    if (j.contains("filter")) {
        const json& f = j["filter"];
        check_keys(f,
                   {"mode", "lscan", "iplf_iters", "likelihood", "kld_threshold",
                    "gate_threshold", "max_globals", "prune_bernoulli_r", "prune_global_w",
                    "prune_ppp_w", "estimator_r_threshold", "gamma_absent"},
                   "filter");
        if (f.contains("mode")) {
            const std::string mode = f["mode"].get<std::string>();
            if (mode == "pmbm") cfg.filter.mode = doatrack::FilterMode::Pmbm;
            else if (mode == "tpmbm") cfg.filter.mode = doatrack::FilterMode::Tpmbm;
            else config_error("filter.mode must be 'pmbm' or 'tpmbm'");
        }
        cfg.filter.lscan = static_cast<int>(number_field(f, "lscan", cfg.filter.lscan, 1, 1e6));
        cfg.filter.iplf.max_iters =
            static_cast<int>(number_field(f, "iplf_iters", cfg.filter.iplf.max_iters, 1, 1000));
        if (f.contains("likelihood")) {
            const std::string lm = f["likelihood"].get<std::string>();
            if (lm == "l0") cfg.filter.iplf.likelihood = doatrack::LikelihoodMode::L0;
            else if (lm == "l1") cfg.filter.iplf.likelihood = doatrack::LikelihoodMode::L1;
            else config_error("filter.likelihood must be 'l0' or 'l1'");
        }
        cfg.filter.iplf.kld_threshold =
            number_field(f, "kld_threshold", cfg.filter.iplf.kld_threshold, 0, 1e9);
        cfg.filter.gate_threshold =
            number_field(f, "gate_threshold", cfg.filter.gate_threshold, 0, 1e12);
        cfg.filter.max_globals =
            static_cast<int>(number_field(f, "max_globals", cfg.filter.max_globals, 1, 1e6));
        cfg.filter.prune_bernoulli_r =
            number_field(f, "prune_bernoulli_r", cfg.filter.prune_bernoulli_r, 0, 1);
        cfg.filter.prune_global_w =
            number_field(f, "prune_global_w", cfg.filter.prune_global_w, 0, 1);
        cfg.filter.prune_ppp_w = number_field(f, "prune_ppp_w", cfg.filter.prune_ppp_w, 0, 1);
        cfg.filter.estimator_r_threshold =
            number_field(f, "estimator_r_threshold", cfg.filter.estimator_r_threshold, 0, 1);
        cfg.filter.gamma_absent = number_field(f, "gamma_absent", cfg.filter.gamma_absent, 0, 1);
    }
    if (j.contains("motion")) {
        const json& m = j["motion"];
        check_keys(m, {"tau_s", "sigma_q2", "ps"}, "motion");
        cfg.tau = number_field(m, "tau_s", cfg.tau, 1e-9, 1e6);
        cfg.sigma_q2 = number_field(m, "sigma_q2", cfg.sigma_q2, 0, 1e9);
        cfg.ps = number_field(m, "ps", cfg.ps, 0, 1);
    }
    if (j.contains("birth")) {
        const json& b = j["birth"];
        check_keys(b, {"lambda0", "lambda", "sigma_v"}, "birth");
        cfg.birth.lambda_bar_b_initial = number_field(b, "lambda0", cfg.birth.lambda_bar_b_initial, 0, 1e9);
        cfg.birth.lambda_bar_b = number_field(b, "lambda", cfg.birth.lambda_bar_b, 0, 1e9);
        const double sigma_v = number_field(b, "sigma_v", std::sqrt(cfg.birth.sigma_v2), 0, 1e9);
        cfg.birth.sigma_v2 = sigma_v * sigma_v;
    }
    if (j.contains("sensor")) {
        const json& s = j["sensor"];
        check_keys(s, {"kappa", "pd", "lambda_c", "fov_deg"}, "sensor");
        cfg.sensor.kappa = number_field(s, "kappa", cfg.sensor.kappa, 0, 1e9);
        cfg.sensor.pd = number_field(s, "pd", cfg.sensor.pd, 0, 1);
        cfg.sensor.lambda_c = number_field(s, "lambda_c", cfg.sensor.lambda_c, 0, 1e9);
        if (s.contains("fov_deg")) {
            const auto v = s["fov_deg"].get<std::vector<double>>();
            if (v.size() != 2) config_error("sensor.fov_deg must have 2 entries");
            cfg.sensor.fov = {v[0] * kDeg, v[1] * kDeg};
        }
    }
    if (j.contains("scenario")) {
        const json& s = j["scenario"];
        check_keys(s, {"steps", "image_px", "drone", "aim", "mode", "tracks"}, "scenario");
        cfg.scenario.steps = static_cast<int>(number_field(s, "steps", cfg.scenario.steps, 1, 1e7));
        int image_w = 1920, image_h = 1080;
        if (s.contains("image_px")) {
            const auto v = s["image_px"].get<std::vector<int>>();
            if (v.size() != 2) config_error("scenario.image_px must have 2 entries");
            image_w = v[0];
            image_h = v[1];
        }
        Eigen::Vector3d drone(0, 0, -25), aim(25, 25, 0);
        if (s.contains("drone")) {
            const auto v = s["drone"].get<std::vector<double>>();
            if (v.size() != 3) config_error("scenario.drone must have 3 entries");
            drone = Eigen::Vector3d(v[0], v[1], v[2]);
        }
        if (s.contains("aim")) {
            const auto v = s["aim"].get<std::vector<double>>();
            if (v.size() != 3) config_error("scenario.aim must have 3 entries");
            aim = Eigen::Vector3d(v[0], v[1], v[2]);
        }
        cfg.scenario.poses = {doatrack::make_pose_looking_at(drone, aim, cfg.sensor.fov.fx,
                                                             cfg.sensor.fov.fy, image_w, image_h)};
        if (s.contains("mode")) {
            const std::string mode = s["mode"].get<std::string>();
            if (mode == "scripted") cfg.scenario.mode = doatrack::TruthMode::Scripted;
            else if (mode == "sampled") cfg.scenario.mode = doatrack::TruthMode::Sampled;
            else config_error("scenario.mode must be 'scripted' or 'sampled'");
        }
        if (s.contains("tracks")) {
            cfg.scenario.scripted.clear();
            for (const auto& t : s["tracks"]) {
                check_keys(t, {"birth_step", "death_step", "state"}, "scenario.tracks[]");
                doatrack::ScriptedTrack st;
                st.birth_step = static_cast<int>(number_field(t, "birth_step", 0, 0, 1e7));
                st.death_step =
                    static_cast<int>(number_field(t, "death_step", cfg.scenario.steps, 0, 1e7));
                const auto v = t["state"].get<std::vector<double>>();
                if (v.size() != 4) config_error("track state must have 4 entries [px,vx,py,vy]");
                st.initial = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
                cfg.scenario.scripted.push_back(st);
            }
        }
    }
    // keep the scenario sections coherent with the shared model blocks
    cfg.scenario.tau = cfg.tau;
    cfg.scenario.sigma_q2 = cfg.sigma_q2;
    cfg.scenario.ps = cfg.ps;
    cfg.scenario.birth = cfg.birth;
    const auto fov = cfg.sensor.fov;
    cfg.scenario.sensor = cfg.sensor;
    if (!cfg.scenario.poses.empty()) {
        for (auto& pose : cfg.scenario.poses) {
            pose.fov_x = fov.fx;
            pose.fov_y = fov.fy;
        }
    }
    return cfg;
}

doatrack::DetectionFrame frame_line(int step, double time_s, const doatrack::CameraPose& pose) {
    doatrack::DetectionFrame f;
    f.frame = step;
    f.time_s = time_s;
    f.local_xyz = pose.position_local;
    f.quat = pose.quat;
    f.fov_deg_x = pose.fov_x / kDeg;
    f.fov_deg_y = pose.fov_y / kDeg;
    f.image_w = pose.image_w;
    f.image_h = pose.image_h;
    return f;
}

int cmd_simulate(const std::string& config_path, const std::string& out_prefix,
                 std::uint64_t seed) {
    RunConfig cfg = load_config(config_path);
    cfg.scenario.seed = seed;
    doatrack::RandomStream rng(seed);
    const doatrack::SimOutput sim = doatrack::generate(cfg.scenario, rng);

    std::vector<doatrack::DetectionFrame> detections, truth_doas;
    std::vector<doatrack::TruthFrame> truth;
    for (const auto& fr : sim.frames) {
        doatrack::DetectionFrame d = frame_line(fr.step, fr.step * cfg.tau, fr.pose);
        d.doas = fr.measurements;
        detections.push_back(std::move(d));

        doatrack::DetectionFrame td = frame_line(fr.step, fr.step * cfg.tau, fr.pose);
        std::vector<Eigen::Vector3d> doas;
        for (const auto& x : fr.truth_states) doas.push_back(doatrack::doa_mean(x, fr.pose));
        td.doas = std::move(doas);
        truth_doas.push_back(std::move(td));

        truth.push_back({fr.step, fr.truth_ids, fr.truth_states});
    }
    doatrack::write_detection_frames(out_prefix + "_detections.jsonl", detections);
    doatrack::write_detection_frames(out_prefix + "_truth_doas.jsonl", truth_doas);
    doatrack::write_truth_frames(out_prefix + "_truth.jsonl", truth);
    std::cout << "wrote " << sim.frames.size() << " frames to " << out_prefix << "_*.jsonl\n";
    return 0;
}

int cmd_track(const std::string& data_path, const std::string& config_path,
              const std::string& out_prefix, int pixel_method) {
    const RunConfig cfg = load_config(config_path);
    const auto lines = doatrack::read_detection_frames(data_path);
    const auto inputs = doatrack::to_frame_inputs(
        lines, pixel_method == 1 ? doatrack::PixelMethod::FovLinear : doatrack::PixelMethod::Pinhole);

    const doatrack::MotionModel motion = doatrack::build_cv(cfg.tau, cfg.sigma_q2, cfg.ps);
    doatrack::Filter filter(motion, cfg.birth, cfg.sensor, cfg.filter);

    std::ofstream diag(out_prefix + "_diagnostics.csv");
    if (!diag) throw IoError(0, "cannot write " + out_prefix + "_diagnostics.csv");
    diag << "step,hypothesis_count,bernoulli_count,runtime_ms\n";

    int last_frame = -1;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        int gap = last_frame < 0 ? 1 : lines[i].frame - last_frame;
        if (gap > 1)
            std::cerr << "warning: frame gap of " << gap << " before frame " << lines[i].frame
                      << "; predicting through it\n";
        last_frame = lines[i].frame;
        const auto start = std::chrono::steady_clock::now();
        filter.process(inputs[i], gap);
        const auto stop = std::chrono::steady_clock::now();
        std::size_t bernoullis = 0;
        for (const auto& t : filter.posterior().tracks) bernoullis += t.locals.size();
        diag << filter.posterior().step << ',' << filter.posterior().globals.size() << ','
             << bernoullis << ','
             << std::chrono::duration<double, std::milli>(stop - start).count() << '\n';
    }
    doatrack::write_estimates(out_prefix + "_trajectories.json", filter.estimates());
    std::cout << "wrote " << out_prefix << "_trajectories.json\n";
    return 0;
}

int cmd_calibrate(const std::string& truth_path, const std::string& detections_path,
                  const std::string& out_path) {
    const auto truth_lines = doatrack::read_detection_frames(truth_path);
    const auto det_lines = doatrack::read_detection_frames(detections_path);
    if (truth_lines.size() != det_lines.size())
        throw IoError(0, "truth and detection files have different frame counts");
    const auto truth_inputs = doatrack::to_frame_inputs(truth_lines);
    const auto det_inputs = doatrack::to_frame_inputs(det_lines);

    std::vector<doatrack::AnnotatedFrame> frames;
    for (std::size_t i = 0; i < det_lines.size(); ++i) {
        if (truth_lines[i].frame != det_lines[i].frame)
            throw IoError(0, "frame mismatch at index " + std::to_string(i));
        doatrack::AnnotatedFrame f;
        f.fov = {det_inputs[i].pose.fov_x, det_inputs[i].pose.fov_y};
        f.truth_doas = truth_inputs[i].measurements;
        f.measured_doas = det_inputs[i].measurements;
        frames.push_back(std::move(f));
    }

    const doatrack::CalibrationResult res = doatrack::coordinate_ascent(frames, {});
    json report;
    report["pd"] = res.pd;
    report["kappa"] = res.kappa;
    report["lambda_c"] = res.lambda_c;
    report["lower_bound"] = res.lower_bound;
    report["iterations"] = res.iterations;
    report["bound_trace"] = res.bound_trace;
    report["degenerate"] = res.degenerate;
    json assignments = json::array();
    for (const auto& a : res.assignments) assignments.push_back(a.labels);
    report["assignments"] = std::move(assignments);

    std::ofstream out(out_path);
    if (!out) throw IoError(0, "cannot write " + out_path);
    out << report.dump(2) << '\n';
    std::cout << "pd=" << res.pd << " kappa=" << res.kappa << " lambda_c=" << res.lambda_c
              << " rounds=" << res.iterations << '\n';
    return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& estimates_path,
                 const std::string& out_path, double gospa_c, double gospa_p) {
    const auto truth = doatrack::read_truth_frames(truth_path);
    const auto estimates = doatrack::read_estimates(estimates_path);
    if (truth.empty()) throw IoError(0, "empty truth file");
    const int first = truth.front().frame;
    const int last = truth.back().frame;
    for (const auto& e : estimates) {
        if (e.birth_step < first || e.end_step > last)
            throw IoError(0, "estimate steps [" + std::to_string(e.birth_step) + ", " +
                                 std::to_string(e.end_step) + "] outside truth range");
    }

    const doatrack::GospaParams params{gospa_c, gospa_p, 2.0};
    std::ofstream out(out_path);
    if (!out) throw IoError(0, "cannot write " + out_path);
    out << "step,total,localization,missed,false\n";
    std::vector<doatrack::GospaResult> per_step;
    for (const auto& tf : truth) {
        std::vector<Eigen::Vector2d> truth_pos;
        for (const auto& x : tf.states) truth_pos.push_back({x(0), x(2)});
        std::vector<Eigen::Vector2d> est_pos;
        for (const auto& e : estimates) {
            if (tf.frame < e.birth_step || tf.frame > e.end_step) continue;
            const auto& x = e.states[static_cast<std::size_t>(tf.frame - e.birth_step)];
            est_pos.push_back({x(0), x(2)});
        }
        const doatrack::GospaResult g = doatrack::gospa(truth_pos, est_pos, params);
        per_step.push_back(g);
        out << tf.frame << ',' << g.total << ',' << g.localization << ',' << g.missed << ','
            << g.false_ << '\n';
    }
    const double rms = doatrack::rms_gospa_over_time(per_step);
    out << "rms," << rms << ",,,\n";
    std::cout << "rms_gospa=" << rms << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drone DOA multi-object tracking toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_prefix = "run", data_path, truth_path, detections_path;
    std::string estimates_path, out_path;
    std::uint64_t seed = 0;
    int pixel_method = 2;
    double gospa_c = 3.0, gospa_p = 2.0;

    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
    sim->add_option("--config", config_path, "run configuration JSON");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--out", out_prefix, "output file prefix")->required();

    CLI::App* track = app.add_subcommand("track", "run the tracker over a detection file");
    track->add_option("data", data_path, "detection frames (JSONL)")->required();
    track->add_option("--config", config_path, "run configuration JSON");
    track->add_option("--out", out_prefix, "output file prefix")->required();
    track->add_option("--method", pixel_method, "pixel conversion method (1 or 2)")
        ->check(CLI::IsMember({1, 2}));

    CLI::App* cal = app.add_subcommand("calibrate", "estimate pd, kappa and the clutter rate");
    cal->add_option("--truth", truth_path, "annotated truth DOAs/boxes (JSONL)")->required();
    cal->add_option("--detections", detections_path, "detector DOAs/boxes (JSONL)")->required();
    cal->add_option("--out", out_path, "calibration report JSON")->required();

    CLI::App* ev = app.add_subcommand("evaluate", "per-step GOSPA against ground truth");
    ev->add_option("--truth", truth_path, "ground-truth states (JSONL)")->required();
    ev->add_option("--estimates", estimates_path, "trajectory estimates JSON")->required();
    ev->add_option("--out", out_path, "per-step GOSPA CSV")->required();
    ev->add_option("--gospa-c", gospa_c, "GOSPA cutoff (m)");
    ev->add_option("--gospa-p", gospa_p, "GOSPA exponent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_prefix, seed);
        if (track->parsed()) return cmd_track(data_path, config_path, out_prefix, pixel_method);
        if (cal->parsed()) return cmd_calibrate(truth_path, detections_path, out_path);
        if (ev->parsed()) return cmd_evaluate(truth_path, estimates_path, out_path, gospa_c, gospa_p);
    } catch (const IoError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
