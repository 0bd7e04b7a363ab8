#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "antires/cavity_modes.hpp"
#include "antires/dipole.hpp"
#include "antires/errors.hpp"
#include "antires/parallel.hpp"

namespace antires {

using Complex = std::complex<double>;

// All detunings follow the convention delta_x = omega_x - omega_laser.
struct CavityParams {
    double kappa = 1.0;    // amplitude decay rate (the rate unit)
    double delta_c = 0.0;  // omega_c - omega_l [kappa]
    double eta = 1.0;      // drive amplitude [kappa]
};

struct SystemModel {
    CavityParams cavity;
    CouplingMatrices couplings;
    CouplingVector g_vec;
    double delta_e = 0.0;  // omega_e - omega_l [kappa]

    int size() const { return g_vec.size(); }
};

inline void validate(const SystemModel& model) {
    const int n = model.size();
    if (model.couplings.omega.rows() != n || model.couplings.omega.cols() != n ||
        model.couplings.gamma_matrix.rows() != n || model.couplings.gamma_matrix.cols() != n)
        throw ConstructionError("system model: matrix and coupling-vector dimensions disagree");
    if (!(model.cavity.kappa > 0.0))
        throw ConstructionError("system model: kappa must be positive");
    if (model.cavity.eta < 0.0)
        throw ConstructionError("system model: eta must be non-negative");
}

/// Emitter-sector response matrix M(delta_e) = i delta_e 1 + i omega + gamma_matrix.
inline Eigen::MatrixXcd interaction_matrix(const SystemModel& model, double delta_e) {
    Eigen::MatrixXcd m = Complex(0.0, 1.0) * model.couplings.omega.cast<Complex>();
    m += model.couplings.gamma_matrix.cast<Complex>();
    m.diagonal().array() += Complex(0.0, delta_e);
    return m;
}

namespace detail {

// One linear solve M y = G shared by the response and field evaluations.
struct ResponseSolve {
    double gtg = 0.0;            // G^T G
    Complex g_m_inv_g{0.0, 0.0};  // G^T M^-1 G
    double condition = 0.0;
    bool decoupled = false;
};

inline ResponseSolve solve_response(const SystemModel& model, double delta_e) {
    ResponseSolve out;
    const Eigen::VectorXd& g = model.g_vec.g;
    out.gtg = g.squaredNorm();
    if (model.size() == 0 || out.gtg == 0.0) {
        out.decoupled = true;
        return out;
    }
    const Eigen::MatrixXcd m = interaction_matrix(model, delta_e);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    out.condition = 1.0 / std::max(lu.rcond(), 1e-300);
    const Eigen::VectorXcd y = lu.solve(g.cast<Complex>());
    out.g_m_inv_g = g.cast<Complex>().dot(y);
    if (std::abs(out.g_m_inv_g) <= 1e-14 * out.gtg) out.decoupled = true;
    return out;
}

inline double wrap_phase(double p) {
    while (p > std::numbers::pi) p -= 2.0 * std::numbers::pi;
    while (p <= -std::numbers::pi) p += 2.0 * std::numbers::pi;
    return p;
}

}  // namespace detail

struct EffectiveResponse {
    double delta_eff = 0.0;  // collective energy shift seen by the cavity [kappa]
    double gamma_eff = 0.0;  // collective linewidth seen by the cavity [kappa]
    double condition = 0.0;  // condition estimate of M(delta_e)
};

/// delta_eff = Im{G^T G / (G^T M^-1 G)}, gamma_eff = Re{...}, via one linear solve.
inline EffectiveResponse effective_response(const SystemModel& model, double delta_e) {
    const auto r = detail::solve_response(model, delta_e);
    if (r.decoupled)
        throw NumericalError("effective_response: cavity decoupled from the emitters at delta_e = " +
                             std::to_string(delta_e));
    const Complex ratio = r.gtg / r.g_m_inv_g;
    return {ratio.imag(), ratio.real(), r.condition};
}

/// C_eff = G^T G / (kappa gamma_eff). Returns +inf when gamma_eff underflows.
inline double effective_cooperativity(const SystemModel& model, double delta_e) {
    const auto r = detail::solve_response(model, delta_e);
    if (r.decoupled)
        throw NumericalError("effective_cooperativity: cavity decoupled from the emitters");
    const double gamma_eff = (r.gtg / r.g_m_inv_g).real();
    if (gamma_eff <= 1e-14 * model.cavity.kappa)
        return std::numeric_limits<double>::infinity();
    return r.gtg / (model.cavity.kappa * gamma_eff);
}

/// Steady-state intracavity amplitude <a> = eta / (i delta_c + kappa + G^T M^-1 G).
/// A decoupled emitter sector degrades gracefully to the bare-cavity value.
inline Complex cavity_field(const SystemModel& model) {
    const auto r = detail::solve_response(model, model.delta_e);
    Complex denom(model.cavity.kappa, model.cavity.delta_c);
    if (!r.decoupled) denom += r.g_m_inv_g;
    return model.cavity.eta / denom;
}

enum class PointFlag : int {
    ok = 0,
    ill_conditioned = 1,  // condition estimate above 1e12; value kept
    decoupled = 2,        // emitters invisible to the cavity; bare-cavity value
    failed = 3,           // evaluation threw; payload is NaN
};

struct SpectrumPoint {
    double delta = 0.0;      // scanned laser detuning [kappa]
    Complex a_ss{0.0, 0.0};  // intracavity amplitude at the model's drive
    Complex t{0.0, 0.0};     // amplitude transmission coefficient
    double T = 0.0;          // |t|^2
    double phase = 0.0;      // Arg(t), in (-pi, pi]
    double phase_rel = 0.0;  // phase relative to the bare cavity, in (-pi, pi]
    double delta_eff = 0.0;
    double gamma_eff = 0.0;
    double c_eff = 0.0;
    double condition = 0.0;
    PointFlag flag = PointFlag::ok;
};

/// Full spectrum point at the model's detunings. The transmission t = kappa <a> / eta
/// is drive independent; it is evaluated with unit drive internally.
inline SpectrumPoint transmission_point(const SystemModel& model) {
    SpectrumPoint p;
    p.delta = model.delta_e;
    const double kappa = model.cavity.kappa;
    const double delta_c = model.cavity.delta_c;
    const auto r = detail::solve_response(model, model.delta_e);
    Complex denom(kappa, delta_c);
    if (!r.decoupled) denom += r.g_m_inv_g;
    p.t = kappa / denom;
    p.T = std::norm(p.t);
    p.a_ss = model.cavity.eta * p.t / kappa;
    p.phase = detail::wrap_phase(std::arg(p.t));
    p.phase_rel = detail::wrap_phase(std::arg(p.t) + std::atan(delta_c / kappa));
    p.condition = r.condition;
    if (r.decoupled) {
        p.delta_eff = p.gamma_eff = p.c_eff = std::numeric_limits<double>::quiet_NaN();
        p.flag = PointFlag::decoupled;
        return p;
    }
    const Complex ratio = r.gtg / r.g_m_inv_g;
    p.delta_eff = ratio.imag();
    p.gamma_eff = ratio.real();
    p.c_eff = (p.gamma_eff > 1e-14 * kappa) ? r.gtg / (kappa * p.gamma_eff)
                                            : std::numeric_limits<double>::infinity();
    if (r.condition > 1e12) p.flag = PointFlag::ill_conditioned;
    return p;
}

// Scan protocols over the laser detuning delta:
//   both:  delta_c = delta_e = delta (cavity resonant with the emitters),
//   laser: delta_e = delta, delta_c = delta - offset with offset = omega_e - omega_c.
enum class SweepMode { both, laser };

struct ScanResult {
    std::vector<SpectrumPoint> points;
    SystemModel model;  // generating model (delta fields hold the last point evaluated)
    SweepMode mode = SweepMode::both;
    double offset = 0.0;
};

/// Evaluates every grid point; per-point failures are flagged, never fatal.
inline ScanResult scan_spectrum(const SystemModel& model, const std::vector<double>& grid,
                                SweepMode mode, double offset = 0.0, int threads = 1) {
    validate(model);
    if (grid.empty()) throw ConstructionError("scan_spectrum: empty grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ConstructionError("scan_spectrum: grid must be strictly increasing");
    ScanResult result;
    result.model = model;
    result.mode = mode;
    result.offset = (mode == SweepMode::both) ? 0.0 : offset;
    result.points.resize(grid.size());
    parallel_for(static_cast<int>(grid.size()), threads, [&](int i) {
        SystemModel m = model;
        m.delta_e = grid[i];
        m.cavity.delta_c = (mode == SweepMode::both) ? grid[i] : grid[i] - offset;
        try {
            result.points[i] = transmission_point(m);
        } catch (const std::exception&) {
            SpectrumPoint p;
            p.delta = grid[i];
            p.t = p.a_ss = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            p.T = p.phase = p.phase_rel = std::numeric_limits<double>::quiet_NaN();
            p.delta_eff = p.gamma_eff = p.c_eff = std::numeric_limits<double>::quiet_NaN();
            p.flag = PointFlag::failed;
            result.points[i] = p;
        }
    });
    return result;
}

/// Closed form for the single-emitter transmission,
///   t = kappa / (i delta + kappa + g^2 / (i delta + gamma)),
/// valid for the resonant scan delta_c = delta_e = delta.
inline Complex single_emitter_transmission(double g, double gamma, double kappa, double delta) {
    if (!(gamma > 0.0) || !(kappa > 0.0))
        throw ConstructionError("single_emitter_transmission: rates must be positive");
    return kappa / (Complex(kappa, delta) + g * g / Complex(gamma, delta));
}

inline std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 1) throw ConstructionError("linspace: need at least one point");
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = lo;
        return grid;
    }
    const double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) grid[i] = lo + step * i;
    return grid;
}

}  // namespace antires
