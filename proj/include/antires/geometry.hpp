#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "antires/errors.hpp"

namespace antires {

// Internal units: rates in units of the cavity amplitude decay kappa (kappa = 1),
// lengths in units of the emitter transition wavelength lambda_e (lambda_e = 1).

// Below this separation the point-dipole coupling functions are singular and the
// model is not meaningful anyway.
inline constexpr double kMinSeparation = 1e-6;

struct EmitterArray {
    std::vector<Eigen::Vector3d> positions;            // units of lambda_e
    Eigen::Vector3d dipole_orientation{0.0, 1.0, 0.0};   // unit vector
    double gamma = 1.0;                                  // free-space amplitude decay rate [kappa]

    int size() const { return static_cast<int>(positions.size()); }
};

inline void validate(const EmitterArray& array) {
    if (array.positions.empty())
        throw ConstructionError("emitter array: needs at least one emitter");
    if (!(array.gamma > 0.0))
        throw ConstructionError("emitter array: gamma must be positive, got " +
                                std::to_string(array.gamma));
    if (std::abs(array.dipole_orientation.norm() - 1.0) > 1e-12)
        throw ConstructionError("emitter array: dipole orientation must be a unit vector");
    const int n = array.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r = (array.positions[i] - array.positions[j]).norm();
            if (r <= kMinSeparation)
                throw ConstructionError("emitter array: emitters " + std::to_string(i + 1) +
                                        " and " + std::to_string(j + 1) +
                                        " are closer than the minimum separation");
        }
    }
}

// Equally spaced chain centered on the origin, in the transverse plane z = 0.
inline EmitterArray make_chain(int n, double d, double gamma,
                               const Eigen::Vector3d& axis = Eigen::Vector3d(1.0, 0.0, 0.0)) {
    if (n < 1) throw ConstructionError("make_chain: need n >= 1");
    if (!(d > 0.0)) throw ConstructionError("make_chain: spacing must be positive");
    if (axis.norm() < 1e-12) throw ConstructionError("make_chain: zero axis");
    Eigen::Vector3d u = axis.normalized();
    if (std::abs(u.z()) > 1e-12)
        throw ConstructionError("make_chain: chain axis must lie in the transverse plane");
    EmitterArray array;
    array.gamma = gamma;
    array.positions.reserve(n);
    for (int j = 0; j < n; ++j)
        array.positions.push_back(u * d * (j - 0.5 * (n - 1)));
    validate(array);
    return array;
}

// rows x cols rectangular lattice centered on the origin, z = 0.
inline EmitterArray make_grid(int rows, int cols, double d, double gamma) {
    if (rows < 1 || cols < 1) throw ConstructionError("make_grid: need rows, cols >= 1");
    if (!(d > 0.0)) throw ConstructionError("make_grid: spacing must be positive");
    EmitterArray array;
    array.gamma = gamma;
    array.positions.reserve(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            array.positions.emplace_back(d * (c - 0.5 * (cols - 1)),
                                         d * (r - 0.5 * (rows - 1)), 0.0);
    validate(array);
    return array;
}

}  // namespace antires
