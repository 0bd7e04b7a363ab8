#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "antires/geometry.hpp"

namespace antires {

// The printed form of G circulating in parts of the literature carries
// sin(x)/x^3 as the last term, which removes the 1/x^3 near-field divergence of
// the coherent coupling. The standard (Lehmberg) form with cos(x)/x^3 is the
// default; the other variant is kept behind this switch for comparison runs.
enum class GVariant { standard, as_printed };

/// Angular factor of the collective decay rates,
///   F(x, c) = (1 - c^2) sin(x)/x + (1 - 3 c^2) (cos(x)/x^2 - sin(x)/x^3),
/// with x = k_e r and c = cos(theta) between the dipole axis and the separation.
/// The x -> 0 limit is 2/3 for any angle; x = 0 itself is a domain error.
inline double angular_factor_f(double x, double cos_theta) {
    if (!(x > 0.0)) throw std::domain_error("angular_factor_f: requires x > 0");
    const double c2 = cos_theta * cos_theta;
    if (x < 0.1) {
        // cos(x)/x^2 - sin(x)/x^3 cancels catastrophically for small x; use the series.
        const double x2 = x * x;
        const double sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0;
        const double bracket = -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0;
        return (1.0 - c2) * sinc + (1.0 - 3.0 * c2) * bracket;
    }
    const double sx = std::sin(x), cx = std::cos(x);
    return (1.0 - c2) * sx / x + (1.0 - 3.0 * c2) * (cx / (x * x) - sx / (x * x * x));
}

/// Angular factor of the coherent dipole-dipole shifts,
///   G(x, c) = -(1 - c^2) cos(x)/x + (1 - 3 c^2) (sin(x)/x^2 + cos(x)/x^3),
/// diverging as (1 - 3 c^2)/x^3 in the near field. The as_printed variant
/// replaces the last term by sin(x)/x^3.
inline double angular_factor_g(double x, double cos_theta,
                               GVariant variant = GVariant::standard) {
    if (!(x > 0.0)) throw std::domain_error("angular_factor_g: requires x > 0");
    const double c2 = cos_theta * cos_theta;
    const double sx = std::sin(x), cx = std::cos(x);
    const double last = (variant == GVariant::standard) ? cx : sx;
    return -(1.0 - c2) * cx / x + (1.0 - 3.0 * c2) * (sx / (x * x) + last / (x * x * x));
}

struct CouplingMatrices {
    Eigen::MatrixXd omega;         // coherent dipole-dipole shifts, zero diagonal [kappa]
    Eigen::MatrixXd gamma_matrix;  // collective decay rates, diagonal = gamma [kappa]

    int size() const { return static_cast<int>(gamma_matrix.rows()); }
};

/// Pairwise collective coupling matrices:
///   gamma_ij = (3 gamma / 2) F(x_ij, cos theta_ij),   gamma_ii = gamma,
///   omega_ij = (3 gamma / 4) G(x_ij, cos theta_ij),   omega_ii = 0,
/// with x_ij = 2 pi |r_i - r_j| / lambda_e. The sign of omega is fixed by the
/// near-field limit omega_ij -> +3 gamma / (4 x^3) for dipoles perpendicular to
/// the separation (in-phase side-by-side dipoles are shifted up), which also
/// reproduces the reference value of the tuned cavity offset for the standard
/// 10-emitter chain benchmark.
inline CouplingMatrices build_coupling_matrices(const EmitterArray& array,
                                                GVariant variant = GVariant::standard) {
    validate(array);
    const int n = array.size();
    CouplingMatrices out;
    out.omega = Eigen::MatrixXd::Zero(n, n);
    out.gamma_matrix = Eigen::MatrixXd::Zero(n, n);
    const double k_e = 2.0 * std::numbers::pi;  // lambda_e = 1
    for (int i = 0; i < n; ++i) {
        out.gamma_matrix(i, i) = array.gamma;
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector3d r = array.positions[i] - array.positions[j];
            const double dist = r.norm();
            const double x = k_e * dist;
            const double cos_theta = array.dipole_orientation.dot(r) / dist;
            const double gij = 1.5 * array.gamma * angular_factor_f(x, cos_theta);
            const double oij = 0.75 * array.gamma * angular_factor_g(x, cos_theta, variant);
            out.gamma_matrix(i, j) = gij;
            out.gamma_matrix(j, i) = gij;
            out.omega(i, j) = oij;
            out.omega(j, i) = oij;
        }
    }
    return out;
}

}  // namespace antires
