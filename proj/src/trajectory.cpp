#include "doatrack/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace doatrack {

GaussianDensity TrajectoryComponent::marginal(int i) const {
    const int n_frozen = static_cast<int>(frozen.size());
    GaussianDensity g;
    g.mean = mean.segment(i * kStateDim, kStateDim);
    if (i < n_frozen) {
        g.cov = frozen[static_cast<std::size_t>(i)];
    } else {
        const int w = (i - n_frozen) * kStateDim;
        g.cov = window_cov.block(w, w, kStateDim, kStateDim);
    }
    return g;
}

GaussianDensity TrajectoryComponent::last_state() const { return marginal(length() - 1); }

const TrajectoryComponent* TrajectoryGaussian::component_ending(int step) const {
    for (const auto& c : components)
        if (c.end_step == step) return &c;
    return nullptr;
}

TrajectoryComponent* TrajectoryGaussian::component_ending(int step) {
    for (auto& c : components)
        if (c.end_step == step) return &c;
    return nullptr;
}

double TrajectoryGaussian::alive_mass(int current_step) const {
    const TrajectoryComponent* c = component_ending(current_step);
    return c ? c->beta : 0.0;
}

void TrajectoryGaussian::normalize() {
    double total = 0.0;
    for (const auto& c : components) total += c.beta;
    if (total <= 0.0) throw std::runtime_error("TrajectoryGaussian: zero total beta");
    for (auto& c : components) c.beta /= total;
}

void TrajectoryGaussian::prune_components(double min_beta) {
    if (components.size() <= 1) return;
    double max_beta = 0.0;
    for (const auto& c : components) max_beta = std::max(max_beta, c.beta);
    std::erase_if(components,
                  [&](const TrajectoryComponent& c) { return c.beta < min_beta && c.beta < max_beta; });
    normalize();
}

TrajectoryGaussian make_single_state(int step, const GaussianDensity& g) {
    TrajectoryGaussian tg;
    tg.birth_step = step;
    TrajectoryComponent c;
    c.beta = 1.0;
    c.end_step = step;
    c.mean = g.mean;
    c.window_cov = g.cov;
    tg.components.push_back(std::move(c));
    return tg;
}

TrajectoryGaussian trajectory_predict(const TrajectoryGaussian& tg, const MotionModel& motion,
                                      int current_step) {
    TrajectoryGaussian out;
    out.birth_step = tg.birth_step;
    for (const auto& c : tg.components) {
        if (c.end_step != current_step) {
            out.components.push_back(c);
            continue;
        }
        if (motion.ps < 1.0) {
            TrajectoryComponent dead = c;
            dead.beta = c.beta * (1.0 - motion.ps);
            out.components.push_back(std::move(dead));
        }
        TrajectoryComponent alive;
        alive.beta = c.beta * motion.ps;
        alive.end_step = current_step + 1;
        alive.frozen = c.frozen;

        const int n = static_cast<int>(c.mean.size());
        const Eigen::Vector4d last = c.mean.tail<kStateDim>();
        alive.mean.resize(n + kStateDim);
        alive.mean.head(n) = c.mean;
        alive.mean.tail<kStateDim>() = motion.F * last;

        const int w = static_cast<int>(c.window_cov.rows());
        const Eigen::MatrixXd strip = c.window_cov.rightCols(kStateDim);  // Cov(window, last)
        const Eigen::Matrix4d p_last = c.window_cov.bottomRightCorner(kStateDim, kStateDim);
        alive.window_cov.resize(w + kStateDim, w + kStateDim);
        alive.window_cov.topLeftCorner(w, w) = c.window_cov;
        alive.window_cov.topRightCorner(w, kStateDim) = strip * motion.F.transpose();
        alive.window_cov.bottomLeftCorner(kStateDim, w) =
            alive.window_cov.topRightCorner(w, kStateDim).transpose();
        alive.window_cov.bottomRightCorner(kStateDim, kStateDim) =
            motion.F * p_last * motion.F.transpose() + motion.Q;
        out.components.push_back(std::move(alive));
    }
    // keep components ordered by end step
    std::sort(out.components.begin(), out.components.end(),
              [](const auto& a, const auto& b) { return a.end_step < b.end_step; });
    return out;
}

TrajectoryGaussian trajectory_update(const TrajectoryGaussian& tg, int current_step,
                                     const GaussianDensity& posterior_current) {
    TrajectoryGaussian out = tg;
    TrajectoryComponent* c = out.component_ending(current_step);
    if (c == nullptr) throw std::invalid_argument("trajectory_update: no alive component");

    const int w = static_cast<int>(c->window_cov.rows());
    const int n_old = w - kStateDim;
    const Eigen::Matrix4d p_ll = c->window_cov.bottomRightCorner(kStateDim, kStateDim);
    const Eigen::Vector4d m_l = c->mean.tail<kStateDim>();

    if (n_old > 0) {
        // Joint-Gaussian conditioning on the replaced last block:
        // G = P_ol P_ll^-1, then shift the window means and covariances.
        const Eigen::MatrixXd p_ol = c->window_cov.topRightCorner(n_old, kStateDim);
        const Eigen::Matrix4d p_ll_reg = regularized_covariance(p_ll);
        const Eigen::MatrixXd gain =
            Eigen::LLT<Eigen::Matrix4d>(p_ll_reg).solve(p_ol.transpose()).transpose();
        c->mean.segment(static_cast<int>(c->frozen.size()) * kStateDim, n_old) +=
            gain * (posterior_current.mean - m_l);
        c->window_cov.topLeftCorner(n_old, n_old) +=
            gain * (posterior_current.cov - p_ll) * gain.transpose();
        c->window_cov.topRightCorner(n_old, kStateDim) = gain * posterior_current.cov;
        c->window_cov.bottomLeftCorner(kStateDim, n_old) =
            c->window_cov.topRightCorner(n_old, kStateDim).transpose();
    }
    c->mean.tail<kStateDim>() = posterior_current.mean;
    c->window_cov.bottomRightCorner(kStateDim, kStateDim) = posterior_current.cov;
    return out;
}

TrajectoryGaussian l_scan_truncate(const TrajectoryGaussian& tg, int window) {
    if (window < 1) throw std::invalid_argument("l_scan_truncate: window must be >= 1");
    TrajectoryGaussian out = tg;
    for (auto& c : out.components) {
        const int w_len = c.window_len();
        if (w_len <= window) continue;
        const int drop = w_len - window;
        for (int i = 0; i < drop; ++i)
            c.frozen.push_back(c.window_cov.block(i * kStateDim, i * kStateDim, kStateDim, kStateDim));
        c.window_cov = Eigen::MatrixXd(
            c.window_cov.bottomRightCorner(window * kStateDim, window * kStateDim));
    }
    return out;
}

}  // namespace doatrack
