#pragma once

#include <Eigen/Dense>

#include "doatrack/geometry.hpp"
#include "doatrack/random.hpp"

namespace doatrack::testing {

inline Quaternion random_unit_quaternion(RandomStream& rng) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    return q.normalized();
}

inline Eigen::Vector3d random_unit_vector(RandomStream& rng) {
    return Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
}

/// Random symmetric positive definite matrix with moderate conditioning.
inline Eigen::MatrixXd random_spd(int dim, RandomStream& rng, double jitter = 0.1) {
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
    return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace doatrack::testing
