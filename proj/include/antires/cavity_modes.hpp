#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "antires/dipole.hpp"
#include "antires/errors.hpp"
#include "antires/geometry.hpp"

namespace antires {

inline constexpr int kMaxHermiteOrder = 64;  // recurrence stability bound

/// Physicists' Hermite polynomial H_n(x) via H_{n+1} = 2x H_n - 2n H_{n-1}.
inline double hermite(int n, double x) {
    if (n < 0 || n > kMaxHermiteOrder)
        throw std::domain_error("hermite: unsupported order " + std::to_string(n));
    if (n == 0) return 1.0;
    double h_prev = 1.0;
    double h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double h_next = 2.0 * x * h - 2.0 * k * h_prev;
        h_prev = h;
        h = h_next;
    }
    return h;
}

// Hermite-Gaussian transverse mode TEM_mn. The offset displaces the mode center
// from the array center in the transverse plane.
struct TemMode {
    int m = 0;
    int n = 0;
    double w = 1.0;                       // beam waist [lambda_e]
    Eigen::Vector2d offset{0.0, 0.0};     // [lambda_e]
};

inline void validate(const TemMode& mode) {
    if (!(mode.w > 0.0)) throw ConstructionError("tem mode: waist must be positive");
    if (mode.m < 0 || mode.m > kMaxHermiteOrder || mode.n < 0 || mode.n > kMaxHermiteOrder)
        throw ConstructionError("tem mode: order out of range");
}

/// Signed dimensionless profile
///   f(x,y) = A_mn H_m(sqrt(2) x / w) H_n(sqrt(2) y / w) exp(-(x^2+y^2)/w^2)
/// with A_mn = sqrt(2 / (pi 2^(m+n) m! n!)), evaluated about the mode center.
inline double tem_profile(const TemMode& mode, double x, double y) {
    validate(mode);
    const double xr = x - mode.offset.x();
    const double yr = y - mode.offset.y();
    const double norm = std::sqrt(2.0 / (std::numbers::pi * std::exp2(mode.m + mode.n) *
                                         std::tgamma(mode.m + 1.0) * std::tgamma(mode.n + 1.0)));
    const double u = std::numbers::sqrt2 * xr / mode.w;
    const double v = std::numbers::sqrt2 * yr / mode.w;
    return norm * hermite(mode.m, u) * hermite(mode.n, v) *
           std::exp(-(xr * xr + yr * yr) / (mode.w * mode.w));
}

// Per-emitter cavity coupling amplitudes g_i (the vector G).
struct CouplingVector {
    Eigen::VectorXd g;  // [kappa]

    int size() const { return static_cast<int>(g.size()); }
    double norm_squared() const { return g.squaredNorm(); }
    // |G| below this is numerically decoupled from the cavity; callers warn, not reject.
    bool near_zero() const { return g.norm() < 1e-12; }
};

inline void validate(const CouplingVector& vec) {
    if (!vec.g.allFinite())
        throw ConstructionError("coupling vector: entries must be finite");
}

/// Couplings sampled from a TEM profile at the emitter positions, normalized so
/// that an emitter at the center of a TEM00 mode has coupling exactly g_ref:
///   g_i = g_ref f(x_i, y_i) / f_00(0,0),  f_00(0,0) = sqrt(2/pi).
/// Emitters must sit in the mode's focal plane (z = 0).
inline CouplingVector coupling_vector_tem(const EmitterArray& array, const TemMode& mode,
                                          double g_ref) {
    validate(array);
    validate(mode);
    const double f00 = std::sqrt(2.0 / std::numbers::pi);
    CouplingVector out;
    out.g.resize(array.size());
    for (int i = 0; i < array.size(); ++i) {
        const Eigen::Vector3d& p = array.positions[i];
        if (std::abs(p.z()) > 1e-12)
            throw ConstructionError("coupling_vector_tem: emitter " + std::to_string(i + 1) +
                                    " is outside the transverse plane z = 0");
        out.g[i] = g_ref * tem_profile(mode, p.x(), p.y()) / f00;
    }
    validate(out);
    return out;
}

enum class Pattern { uniform, alternating };

/// Uniform (g, g, ...) or alternating g_i = (-1)^i g couplings (1-based i).
inline CouplingVector coupling_vector_pattern(int n, double g, Pattern pattern) {
    if (n < 1) throw ConstructionError("coupling_vector_pattern: need n >= 1");
    CouplingVector out;
    out.g.resize(n);
    for (int i = 0; i < n; ++i)
        out.g[i] = (pattern == Pattern::alternating && i % 2 == 0) ? -g : g;
    validate(out);
    return out;
}

inline CouplingVector coupling_vector_custom(int n, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != n)
        throw ConstructionError("coupling_vector_custom: expected " + std::to_string(n) +
                                " entries, got " + std::to_string(values.size()));
    CouplingVector out;
    out.g = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
    validate(out);
    return out;
}

/// Couplings matched to the collective state targeted for subradiance: the
/// eigenvector of omega with the largest |overlap| with the minimal-decay
/// eigenvector of gamma_matrix, scaled to |G| = sqrt(N) g and with the first
/// nonzero entry positive.
inline CouplingVector coupling_vector_eigenmode(const CouplingMatrices& couplings, double g) {
    const int n = couplings.size();
    if (n < 2) throw ConstructionError("coupling_vector_eigenmode: need at least 2 emitters");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gamma_es(couplings.gamma_matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> omega_es(couplings.omega);
    if (gamma_es.info() != Eigen::Success || omega_es.info() != Eigen::Success)
        throw NumericalError("coupling_vector_eigenmode: eigendecomposition failed");
    const Eigen::VectorXd subradiant = gamma_es.eigenvectors().col(0);  // ascending order
    Eigen::VectorXd overlaps = (omega_es.eigenvectors().transpose() * subradiant).cwiseAbs();
    int best = 0;
    overlaps.maxCoeff(&best);
    double second = -1.0;
    for (int k = 0; k < n; ++k)
        if (k != best) second = std::max(second, overlaps[k]);
    if (overlaps[best] - second < 1e-10)
        throw NumericalError("coupling_vector_eigenmode: ambiguous overlap between eigenmodes");
    CouplingVector out;
    out.g = omega_es.eigenvectors().col(best) * (std::sqrt(static_cast<double>(n)) * g);
    for (int i = 0; i < n; ++i) {
        if (std::abs(out.g[i]) > 1e-12 * std::abs(g)) {
            if (out.g[i] < 0.0) out.g = -out.g;
            break;
        }
    }
    validate(out);
    return out;
}

}  // namespace antires
