#include "doatrack/directional.hpp"

#include <cmath>
#include <stdexcept>

#include "doatrack/geometry.hpp"

namespace doatrack {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Orthonormal basis of the plane orthogonal to unit vector mu.
void tangent_basis(const Eigen::Vector3d& mu, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
    const Eigen::Vector3d pick =
        std::abs(mu.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    e1 = mu.cross(pick).normalized();
    e2 = mu.cross(e1);
}
}  // namespace

bool FovSpec::contains(const Eigen::Vector3d& z) const {
    const Angles a = doa_to_angles(z);
    return std::abs(a.azimuth) <= fx / 2.0 && std::abs(a.elevation) <= fy / 2.0;
}

double vmf_log_density(const Eigen::Vector3d& z, const VmfParams& params) {
    const double kappa = params.kappa;
    if (kappa < 0.0) throw std::invalid_argument("vmf_log_density: kappa must be >= 0");
    if (kappa == 0.0) return 0.0;
    const double dot = params.mu.dot(z);
    // log(kappa e^{kappa t} / sinh kappa) with sinh kappa = e^kappa (1 - e^{-2k}) / 2,
    // grouped so that only the bounded kappa (t - 1) exponent appears.
    if (kappa < 1e-4) {
        // sinh k = k (1 + k^2/6 + ...) : direct form avoids 1 - e^{-2k} cancellation.
        return kappa * dot - std::log1p(kappa * kappa / 6.0);
    }
    return std::log(kappa) + kappa * (dot - 1.0) + std::log(2.0) -
           std::log1p(-std::exp(-2.0 * kappa));
}

double vmf_density(const Eigen::Vector3d& z, const VmfParams& params) {
    return std::exp(vmf_log_density(z, params));
}

std::vector<Eigen::Vector3d> vmf_sample(const VmfParams& params, int n, RandomStream& rng) {
    if (params.kappa < 0.0) throw std::invalid_argument("vmf_sample: kappa must be >= 0");
    std::vector<Eigen::Vector3d> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    Eigen::Vector3d e1, e2;
    tangent_basis(params.mu, e1, e2);
    const double kappa = params.kappa;
    for (int i = 0; i < n; ++i) {
        const double u = 1.0 - rng.uniform();  // (0, 1]
        double w;
        if (kappa < 1e-10) {
            w = 2.0 * u - 1.0;
        } else if (kappa > 350.0) {
            // e^{-2 kappa} underflows; the inverse CDF reduces to 1 + log(u)/kappa.
            w = 1.0 + std::log(u) / kappa;
        } else {
            w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
        }
        w = std::clamp(w, -1.0, 1.0);
        const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
        const double ang = rng.uniform(0.0, kTwoPi);
        out.push_back((w * params.mu + s * (std::cos(ang) * e1 + std::sin(ang) * e2)).normalized());
    }
    return out;
}

double bessel_ratio(double kappa) {
    if (kappa <= 0.0) throw std::invalid_argument("bessel_ratio: kappa must be > 0");
    if (kappa < 1e-3) {
        // coth(k) - 1/k = k/3 - k^3/45 + 2 k^5/945 - ...
        const double k2 = kappa * kappa;
        return kappa * (1.0 / 3.0 - k2 / 45.0 + 2.0 * k2 * k2 / 945.0);
    }
    // coth(k) = 1 + 2 / (e^{2k} - 1); expm1 keeps this exact and the large-k
    // branch degrades gracefully to 1 - 1/k when e^{2k} overflows.
    const double e = std::expm1(2.0 * kappa);
    const double tail = std::isinf(e) ? 0.0 : 2.0 / e;
    return 1.0 - 1.0 / kappa + tail;
}

double bessel_ratio_inverse(double rbar) {
    if (!(rbar > 0.0 && rbar < 1.0))
        throw std::invalid_argument("bessel_ratio_inverse: rbar must be in (0, 1)");
    double lo = 1e-6, hi = 1e7;
    if (bessel_ratio(lo) > rbar) return lo;
    if (bessel_ratio(hi) < rbar) return hi;
    // Monotone on (0, inf), so plain bisection to 1e-8 relative width.
    while ((hi - lo) > 1e-8 * hi) {
        const double mid = 0.5 * (lo + hi);
        (bessel_ratio(mid) < rbar ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SphericalMoments vmf_moments(const VmfParams& params) {
    SphericalMoments m;
    if (params.kappa == 0.0) {
        m.mean = Eigen::Vector3d::Zero();
        m.cov = Eigen::Matrix3d::Identity() / 3.0;
        return m;
    }
    const double a3 = bessel_ratio(params.kappa);
    const double radial = a3 / params.kappa;
    m.mean = a3 * params.mu;
    m.cov = radial * Eigen::Matrix3d::Identity() +
            (1.0 - 3.0 * radial - a3 * a3) * (params.mu * params.mu.transpose());
    return m;
}

double clutter_constant(const FovSpec& fov) {
    return fov.fx * std::sin(fov.fy / 2.0) / kTwoPi;
}

double clutter_intensity(const Eigen::Vector3d& z, const FovSpec& fov, double lambda_bar) {
    if (lambda_bar < 0.0) throw std::invalid_argument("clutter_intensity: lambda_bar must be >= 0");
    if (!fov.contains(z)) return 0.0;
    return lambda_bar / clutter_constant(fov);
}

Eigen::Vector3d sample_uniform_fov(const FovSpec& fov, RandomStream& rng) {
    const double az = rng.uniform(-fov.fx / 2.0, fov.fx / 2.0);
    // Spherical area element is cos(el) d el d az, so sin(el) is uniform.
    const double s = std::sin(fov.fy / 2.0);
    const double el = std::asin(rng.uniform(-s, s));
    return angles_to_doa(az, el);
}

}  // namespace doatrack
