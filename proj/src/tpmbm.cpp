#include "doatrack/tpmbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "doatrack/assignment.hpp"

namespace doatrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBetaFloor = 1e-8;  // end-time components below this are dropped

double log_sum_exp(const std::vector<double>& v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Detection probability of a state mean: the model pd when the predicted
/// direction lies inside the FoV, 0 otherwise (objects outside the image
/// cannot be detected, so they must not be penalized as missed).
double effective_pd(const Eigen::Vector4d& state_mean, const MeasurementModel& model,
                    const CameraPose& pose) {
    try {
        return model.fov.contains(doa_mean(state_mean, pose)) ? model.pd : 0.0;
    } catch (const std::domain_error&) {
        return 0.0;
    }
}

/// Cached SLR linearization at a component's end state, for gating many
/// measurements against one component.
struct GateCache {
    bool valid = false;
    Eigen::Vector3d z_pred;
    Eigen::Matrix3d s_inv;

    void build(const GaussianDensity& prior, const MomentMap& map, double ut_w0) {
        const LinearizationResult lin = slr(map, prior, ut_w0);
        z_pred = lin.A * prior.mean + lin.b;
        const Eigen::Matrix3d s =
            regularized_covariance(lin.A * prior.cov * lin.A.transpose() + lin.Omega);
        s_inv = s.inverse();
        valid = true;
    }

    double distance2(const Eigen::Vector3d& z) const {
        const Eigen::Vector3d d = z - z_pred;
        return d.dot(s_inv * d);
    }
};

/// Detection branch of a trajectory: keep only the alive component and
/// condition its window on the IPLF posterior of the last state.
TrajectoryGaussian detected_trajectory(const TrajectoryGaussian& tg, int k,
                                       const GaussianDensity& posterior) {
    const TrajectoryComponent* alive = tg.component_ending(k);
    if (alive == nullptr) throw std::logic_error("detected_trajectory: no alive component");
    TrajectoryGaussian out;
    out.birth_step = tg.birth_step;
    out.components.push_back(*alive);
    out.components[0].beta = 1.0;
    return trajectory_update(out, k, posterior);
}

GaussianDensity moment_match(const std::vector<double>& w, const std::vector<GaussianDensity>& g) {
    double total = 0.0;
    for (double x : w) total += x;
    GaussianDensity out;
    out.mean = Eigen::VectorXd::Zero(g.front().dim());
    for (std::size_t i = 0; i < g.size(); ++i) out.mean += (w[i] / total) * g[i].mean;
    out.cov = Eigen::MatrixXd::Zero(g.front().dim(), g.front().dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Eigen::VectorXd d = g[i].mean - out.mean;
        out.cov += (w[i] / total) * (g[i].cov + d * d.transpose());
    }
    return out;
}

struct LocalChildren {
    int miss_index = -1;
    double log_w_miss = 0.0;
    std::vector<int> det_index;      // per measurement; -1 when not gated
    std::vector<double> log_w_det;   // per measurement; -inf when not gated
};

struct CandidateHypothesis {
    double log_weight;
    std::vector<int> locals;

    bool operator<(const CandidateHypothesis& o) const { return locals < o.locals; }
};

}  // namespace

PmbmPosterior empty_posterior() {
    PmbmPosterior post;
    post.globals.push_back({1.0, {}});
    return post;
}

PmbmPosterior predict(const PmbmPosterior& post, const MotionModel& motion,
                      const BirthComponents& birth, const FilterConfig& cfg) {
    PmbmPosterior out;
    out.step = post.step + 1;
    out.next_track_id = post.next_track_id;
    out.globals = post.globals;

    const bool pmbm = cfg.mode == FilterMode::Pmbm;
    out.ppp.reserve(post.ppp.size() + 1);
    for (const auto& c : post.ppp) {
        PppComponent next;
        next.weight = c.weight * motion.ps;
        if (pmbm) {
            const GaussianDensity last = c.tg.components.front().last_state();
            next.tg = make_single_state(out.step,
                                        {motion.F * last.mean,
                                         motion.F * last.cov * motion.F.transpose() + motion.Q});
        } else {
            // PPP intensity covers alive trajectories only: extend and keep
            // the surviving branch.
            TrajectoryGaussian ext = trajectory_predict(c.tg, motion, post.step);
            TrajectoryGaussian alive;
            alive.birth_step = ext.birth_step;
            const TrajectoryComponent* a = ext.component_ending(out.step);
            alive.components.push_back(*a);
            alive.components[0].beta = 1.0;
            next.tg = std::move(alive);
        }
        out.ppp.push_back(std::move(next));
    }
    if (birth.lambda_bar > 0.0) {
        out.ppp.push_back(
            {birth.lambda_bar, make_single_state(out.step, {birth.mean, birth.cov})});
    }

    out.tracks.reserve(post.tracks.size());
    for (const auto& t : post.tracks) {
        Track next;
        next.id = t.id;
        next.locals.reserve(t.locals.size());
        for (const auto& b : t.locals) {
            BernoulliComponent nb;
            if (pmbm) {
                nb.r = b.r * motion.ps;
                const GaussianDensity last = b.tg.components.front().last_state();
                nb.tg = make_single_state(out.step,
                                          {motion.F * last.mean,
                                           motion.F * last.cov * motion.F.transpose() + motion.Q});
            } else {
                nb.r = b.r;
                nb.tg = trajectory_predict(b.tg, motion, post.step);
                nb.tg.prune_components(kBetaFloor);
            }
            next.locals.push_back(std::move(nb));
        }
        out.tracks.push_back(std::move(next));
    }
    return out;
}

bool gate(const GaussianDensity& end_state, const Eigen::Vector3d& z,
          const MeasurementModel& model, const CameraPose& pose, double threshold) {
    if (threshold <= 0.0) throw std::invalid_argument("gate: threshold must be > 0");
    return gate_distance2(end_state, z, vmf_moment_map(model, pose)) <= threshold;
}

PmbmPosterior update(const PmbmPosterior& post, const std::vector<Eigen::Vector3d>& measurements,
                     const MeasurementModel& model, const CameraPose& pose,
                     const FilterConfig& cfg) {
    const int k = post.step;
    const int m = static_cast<int>(measurements.size());
    const bool pmbm = cfg.mode == FilterMode::Pmbm;
    const MomentMap map = vmf_moment_map(model, pose);

    PmbmPosterior out;
    out.step = k;
    out.next_track_id = post.next_track_id;

    // ---- New tracks: one candidate Bernoulli per measurement, merging the
    // gated PPP components by moment matching. ----
    std::vector<BernoulliComponent> new_bernoullis(m);
    std::vector<double> log_e(m, kNegInf);  // new-track-or-clutter weight

    std::vector<GateCache> ppp_gate(post.ppp.size());
    std::vector<double> ppp_pd(post.ppp.size(), 0.0);
    for (std::size_t c = 0; c < post.ppp.size(); ++c) {
        const GaussianDensity last = post.ppp[c].tg.components.front().last_state();
        ppp_pd[c] = effective_pd(last.mean, model, pose);
        if (ppp_pd[c] > 0.0 && m > 0) ppp_gate[c].build(last, map, cfg.iplf.ut_w0);
    }

    for (int j = 0; j < m; ++j) {
        const Eigen::Vector3d& z = measurements[j];
        std::vector<double> log_w;
        std::vector<GaussianDensity> posteriors;
        std::vector<std::size_t> comp_index;
        for (std::size_t c = 0; c < post.ppp.size(); ++c) {
            if (ppp_pd[c] <= 0.0) continue;
            if (ppp_gate[c].distance2(z) > cfg.gate_threshold) continue;
            const GaussianDensity last = post.ppp[c].tg.components.front().last_state();
            const IplfResult res =
                iplf_update(last, z, map, cfg.iplf,
                            cfg.iplf.likelihood == LikelihoodMode::L1
                                ? vmf_log_likelihood_fn(z, model, pose)
                                : LogLikelihoodFn());
            log_w.push_back(std::log(post.ppp[c].weight) + std::log(ppp_pd[c]) +
                            res.log_marginal);
            posteriors.push_back(res.posterior);
            comp_index.push_back(c);
        }

        const double clutter = clutter_intensity(z, model.fov, model.lambda_c);
        double log_detected = log_w.empty() ? kNegInf : log_sum_exp(log_w);
        std::vector<double> e_terms = log_w;
        if (clutter > 0.0) e_terms.push_back(std::log(clutter));
        log_e[j] = e_terms.empty() ? std::log(1e-300) : log_sum_exp(e_terms);

        BernoulliComponent nb;
        nb.r = std::isfinite(log_detected) ? std::exp(log_detected - log_e[j]) : 0.0;
        if (!posteriors.empty()) {
            std::vector<double> lin_w(log_w.size());
            double max_w = *std::max_element(log_w.begin(), log_w.end());
            std::size_t best = 0;
            for (std::size_t i = 0; i < log_w.size(); ++i) {
                lin_w[i] = std::exp(log_w[i] - max_w);
                if (log_w[i] == max_w) best = i;
            }
            const GaussianDensity merged = moment_match(lin_w, posteriors);
            if (pmbm) {
                nb.tg = make_single_state(k, merged);
            } else {
                nb.tg = detected_trajectory(post.ppp[comp_index[best]].tg, k, merged);
            }
        } else {
            // Nothing gated: clutter-only component, pruned immediately by r.
            GaussianDensity g;
            g.mean = Eigen::Vector4d::Zero();
            try {
                const Eigen::Vector2d ground = project_doa_to_ground(z, pose);
                g.mean << ground.x(), 0.0, ground.y(), 0.0;
            } catch (const std::domain_error&) {
            }
            g.cov = Eigen::Vector4d(1e6, 1e4, 1e6, 1e4).asDiagonal();
            nb.tg = make_single_state(k, g);
        }
        new_bernoullis[j] = std::move(nb);
    }

    // ---- Undetected PPP scaling. ----
    out.ppp.reserve(post.ppp.size());
    for (std::size_t c = 0; c < post.ppp.size(); ++c) {
        PppComponent scaled = post.ppp[c];
        scaled.weight *= (1.0 - ppp_pd[c]);
        out.ppp.push_back(std::move(scaled));
    }

    // ---- Children of every referenced track local hypothesis. ----
    const int n_tracks = static_cast<int>(post.tracks.size());
    std::vector<std::vector<char>> referenced(n_tracks);
    for (int i = 0; i < n_tracks; ++i)
        referenced[i].assign(post.tracks[i].locals.size(), 0);
    for (const auto& gh : post.globals)
        for (int i = 0; i < n_tracks; ++i)
            if (i < static_cast<int>(gh.locals.size()) && gh.locals[i] >= 0)
                referenced[i][gh.locals[i]] = 1;

    std::vector<Track> updated_tracks(n_tracks);
    std::vector<std::vector<LocalChildren>> children(n_tracks);
    for (int i = 0; i < n_tracks; ++i) {
        updated_tracks[i].id = post.tracks[i].id;
        children[i].resize(post.tracks[i].locals.size());
        for (std::size_t a = 0; a < post.tracks[i].locals.size(); ++a) {
            if (!referenced[i][a]) continue;
            const BernoulliComponent& bern = post.tracks[i].locals[a];
            LocalChildren& ch = children[i][a];
            ch.det_index.assign(m, -1);
            ch.log_w_det.assign(m, kNegInf);

            const TrajectoryComponent* alive = bern.tg.component_ending(k);
            const double beta_alive = alive ? alive->beta : 0.0;
            const double pd_eff =
                alive ? effective_pd(alive->last_state().mean, model, pose) : 0.0;
            const double detectable = bern.r * beta_alive * pd_eff;

            // Missed-detection child: only the alive mass is scaled by 1 - pd.
            BernoulliComponent miss;
            const double w_miss = 1.0 - detectable;
            const double survive_frac = 1.0 - beta_alive * pd_eff;
            miss.r = w_miss > 0.0 ? bern.r * survive_frac / w_miss : 0.0;
            miss.tg = bern.tg;
            if (pd_eff > 0.0 && beta_alive > 0.0 && survive_frac > 1e-300) {
                TrajectoryComponent* a_comp = miss.tg.component_ending(k);
                a_comp->beta *= (1.0 - pd_eff);
                miss.tg.normalize();
                miss.tg.prune_components(kBetaFloor);
            }
            // survive_frac == 0 forces r = 0; the stale density is harmless.
            ch.log_w_miss = std::log(std::max(w_miss, 1e-300));
            ch.miss_index = static_cast<int>(updated_tracks[i].locals.size());
            updated_tracks[i].locals.push_back(std::move(miss));

            // Detection children. Tracks whose alive mass has collapsed are
            // frozen: no further branching.
            if (detectable <= 0.0 || bern.r * beta_alive < cfg.gamma_absent || m == 0) continue;
            const GaussianDensity prior = alive->last_state();
            GateCache gc;
            gc.build(prior, map, cfg.iplf.ut_w0);
            for (int j = 0; j < m; ++j) {
                if (gc.distance2(measurements[j]) > cfg.gate_threshold) continue;
                const IplfResult res =
                    iplf_update(prior, measurements[j], map, cfg.iplf,
                                cfg.iplf.likelihood == LikelihoodMode::L1
                                    ? vmf_log_likelihood_fn(measurements[j], model, pose)
                                    : LogLikelihoodFn());
                BernoulliComponent det;
                det.r = 1.0;
                det.tg = pmbm ? make_single_state(k, res.posterior)
                              : detected_trajectory(bern.tg, k, res.posterior);
                ch.det_index[j] = static_cast<int>(updated_tracks[i].locals.size());
                ch.log_w_det[j] = std::log(detectable) + res.log_marginal;
                updated_tracks[i].locals.push_back(std::move(det));
            }
        }
    }

    // ---- Per-parent k-best association. ----
    std::vector<CandidateHypothesis> candidates;
    for (const auto& parent : post.globals) {
        std::vector<int> present;  // track indices active in this parent
        for (int i = 0; i < n_tracks; ++i)
            if (i < static_cast<int>(parent.locals.size()) && parent.locals[i] >= 0)
                present.push_back(i);
        const int n_p = static_cast<int>(present.size());

        double log_base = std::log(std::max(parent.weight, 1e-300));
        for (int idx : present)
            log_base += children[idx][parent.locals[idx]].log_w_miss;

        CostMatrix cost = CostMatrix::Constant(
            m, n_p + m, std::numeric_limits<double>::infinity());
        for (int col = 0; col < n_p; ++col) {
            const LocalChildren& ch = children[present[col]][parent.locals[present[col]]];
            for (int j = 0; j < m; ++j)
                if (ch.det_index[j] >= 0) cost(j, col) = -(ch.log_w_det[j] - ch.log_w_miss);
        }
        for (int j = 0; j < m; ++j) cost(j, n_p + j) = -log_e[j];

        const int budget = std::clamp(
            static_cast<int>(std::ceil(cfg.max_globals * parent.weight)), 1, cfg.max_globals);
        std::vector<Assignment> solutions;
        try {
            solutions = solve_k_best(cost, budget);
        } catch (const NoFeasibleAssignment&) {
            continue;  // cannot happen: dummy columns keep every row feasible
        }

        for (const Assignment& s : solutions) {
            CandidateHypothesis cand;
            cand.log_weight = log_base - s.cost;
            cand.locals.assign(n_tracks + m, -1);
            for (int i = 0; i < n_tracks; ++i)
                if (i < static_cast<int>(parent.locals.size()) && parent.locals[i] >= 0)
                    cand.locals[i] = children[i][parent.locals[i]].miss_index;
            for (int j = 0; j < m; ++j) {
                const int col = s.col_of_row[j];
                if (col < n_p) {
                    const int i = present[col];
                    cand.locals[i] = children[i][parent.locals[i]].det_index[j];
                } else {
                    cand.locals[n_tracks + (col - n_p)] = 0;  // new track j present
                }
            }
            candidates.push_back(std::move(cand));
        }
    }

    // ---- Merge duplicate children and normalize. ----
    std::map<std::vector<int>, double> merged;
    for (auto& cand : candidates) {
        auto [it, inserted] = merged.try_emplace(std::move(cand.locals), cand.log_weight);
        if (!inserted) {
            const double hi = std::max(it->second, cand.log_weight);
            it->second = hi + std::log(std::exp(it->second - hi) +
                                       std::exp(cand.log_weight - hi));
        }
    }
    std::vector<double> log_weights;
    log_weights.reserve(merged.size());
    for (const auto& [locals, lw] : merged) log_weights.push_back(lw);
    const double norm = log_sum_exp(log_weights);
    if (!std::isfinite(norm)) throw std::runtime_error("update: all hypotheses have zero weight");

    out.tracks = std::move(updated_tracks);
    for (int j = 0; j < m; ++j) {
        Track t;
        t.id = out.next_track_id++;
        t.locals.push_back(std::move(new_bernoullis[j]));
        out.tracks.push_back(std::move(t));
    }
    for (const auto& [locals, lw] : merged)
        out.globals.push_back({std::exp(lw - norm), locals});
    return out;
}

PmbmPosterior prune(const PmbmPosterior& post, const FilterConfig& cfg) {
    PmbmPosterior out;
    out.step = post.step;
    out.next_track_id = post.next_track_id;

    // Global hypotheses: threshold, cap, merge duplicates after marking
    // low-existence Bernoullis absent.
    std::vector<GlobalHypothesis> globals = post.globals;
    double total = 0.0;
    for (const auto& g : globals) total += g.weight;
    if (total <= 0.0) throw std::runtime_error("prune: zero total hypothesis weight");
    for (auto& g : globals) g.weight /= total;

    std::erase_if(globals, [&](const GlobalHypothesis& g) { return g.weight < cfg.prune_global_w; });
    if (globals.empty()) {
        // keep the single best hypothesis if thresholding removed everything
        const auto best = std::max_element(
            post.globals.begin(), post.globals.end(),
            [](const auto& a, const auto& b) { return a.weight < b.weight; });
        globals.push_back(*best);
    }
    std::sort(globals.begin(), globals.end(), [](const auto& a, const auto& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.locals < b.locals;
    });
    if (static_cast<int>(globals.size()) > cfg.max_globals) globals.resize(cfg.max_globals);

    const int n_tracks = static_cast<int>(post.tracks.size());
    for (auto& g : globals) {
        g.locals.resize(n_tracks, -1);
        for (int i = 0; i < n_tracks; ++i) {
            if (g.locals[i] >= 0 &&
                post.tracks[i].locals[g.locals[i]].r < cfg.prune_bernoulli_r)
                g.locals[i] = -1;
        }
    }
    std::map<std::vector<int>, double> dedup;
    for (const auto& g : globals) dedup[g.locals] += g.weight;

    // Keep referenced locals only; drop tracks absent from every hypothesis.
    std::vector<std::vector<int>> local_map(n_tracks);
    std::vector<int> track_map(n_tracks, -1);
    for (int i = 0; i < n_tracks; ++i)
        local_map[i].assign(post.tracks[i].locals.size(), -1);
    for (const auto& [locals, w] : dedup)
        for (int i = 0; i < n_tracks; ++i)
            if (locals[i] >= 0) local_map[i][locals[i]] = 0;
    for (int i = 0; i < n_tracks; ++i) {
        bool any = false;
        for (int v : local_map[i]) any = any || (v == 0);
        if (!any) continue;
        track_map[i] = static_cast<int>(out.tracks.size());
        Track t;
        t.id = post.tracks[i].id;
        for (std::size_t a = 0; a < post.tracks[i].locals.size(); ++a) {
            if (local_map[i][a] == 0) {
                local_map[i][a] = static_cast<int>(t.locals.size());
                t.locals.push_back(post.tracks[i].locals[a]);
            }
        }
        out.tracks.push_back(std::move(t));
    }

    double kept = 0.0;
    for (const auto& [locals, w] : dedup) kept += w;
    for (const auto& [locals, w] : dedup) {
        GlobalHypothesis g;
        g.weight = w / kept;
        g.locals.assign(out.tracks.size(), -1);
        for (int i = 0; i < n_tracks; ++i)
            if (locals[i] >= 0) g.locals[track_map[i]] = local_map[i][locals[i]];
        out.globals.push_back(std::move(g));
    }

    out.ppp.reserve(post.ppp.size());
    for (const auto& c : post.ppp)
        if (c.weight >= cfg.prune_ppp_w) out.ppp.push_back(c);
    return out;
}

std::vector<TrajectoryEstimate> estimate(const PmbmPosterior& post, const FilterConfig& cfg) {
    std::vector<TrajectoryEstimate> out;
    if (post.globals.empty()) return out;
    const auto best = std::max_element(
        post.globals.begin(), post.globals.end(),
        [](const auto& a, const auto& b) { return a.weight < b.weight; });
    for (std::size_t i = 0; i < best->locals.size(); ++i) {
        if (best->locals[i] < 0) continue;
        const BernoulliComponent& bern = post.tracks[i].locals[best->locals[i]];
        if (bern.r < cfg.estimator_r_threshold) continue;
        const TrajectoryComponent* map_comp = nullptr;
        for (const auto& c : bern.tg.components)
            if (map_comp == nullptr || c.beta > map_comp->beta) map_comp = &c;
        if (map_comp == nullptr) continue;
        TrajectoryEstimate est;
        est.track_id = post.tracks[i].id;
        est.birth_step = bern.tg.birth_step;
        est.end_step = map_comp->end_step;
        const int len = map_comp->length();
        est.states.reserve(len);
        for (int s = 0; s < len; ++s)
            est.states.push_back(map_comp->mean.segment(s * kStateDim, kStateDim));
        out.push_back(std::move(est));
    }
    return out;
}

PmbmPosterior step(const PmbmPosterior& post, const FrameInput& frame, const MotionModel& motion,
                   const BirthModel& birth, const MeasurementModel& model,
                   const FilterConfig& cfg) {
    const BirthComponents bc = birth_components(frame.pose, birth, post.step < 0);
    PmbmPosterior next = predict(post, motion, bc, cfg);
    next = update(next, frame.measurements, model, frame.pose, cfg);
    next = prune(next, cfg);
    if (cfg.mode == FilterMode::Tpmbm) {
        for (auto& c : next.ppp) c.tg = l_scan_truncate(c.tg, cfg.lscan);
        for (auto& t : next.tracks)
            for (auto& b : t.locals) b.tg = l_scan_truncate(b.tg, cfg.lscan);
    }
    return next;
}

Filter::Filter(MotionModel motion, BirthModel birth, MeasurementModel model, FilterConfig cfg)
    : motion_(motion), birth_(birth), model_(model), cfg_(cfg), posterior_(empty_posterior()) {}

void Filter::process(const FrameInput& frame, int gap) {
    for (int g = 1; g < gap; ++g) {
        const BirthComponents bc = birth_components(frame.pose, birth_, posterior_.step < 0);
        posterior_ = predict(posterior_, motion_, bc, cfg_);
    }
    posterior_ = step(posterior_, frame, motion_, birth_, model_, cfg_);
    if (cfg_.mode == FilterMode::Pmbm) append_dossier();
}

void Filter::append_dossier() {
    for (const auto& est : estimate(posterior_, cfg_)) {
        auto it = std::find_if(dossier_.begin(), dossier_.end(),
                               [&](const auto& d) { return d.first == est.track_id; });
        if (it == dossier_.end()) {
            dossier_.push_back({est.track_id, {}});
            it = std::prev(dossier_.end());
        }
        it->second.push_back({posterior_.step, est.states.back()});
    }
}

std::vector<TrajectoryEstimate> Filter::estimates() const {
    if (cfg_.mode == FilterMode::Tpmbm) return estimate(posterior_, cfg_);
    // PMBM: split each track's dossier into contiguous segments.
    std::vector<TrajectoryEstimate> out;
    for (const auto& [id, entries] : dossier_) {
        TrajectoryEstimate seg;
        seg.track_id = id;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (seg.states.empty()) {
                seg.birth_step = entries[i].step;
            } else if (entries[i].step != seg.end_step + 1) {
                out.push_back(seg);
                seg.states.clear();
                seg.birth_step = entries[i].step;
            }
            seg.end_step = entries[i].step;
            seg.states.push_back(entries[i].state);
        }
        if (!seg.states.empty()) out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace doatrack
