#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "antires/errors.hpp"
#include "antires/steady_state.hpp"

namespace antires {

/// Background-subtracted antiresonance profile B(delta) = T_bare(delta_c) - T(delta)
/// with T_bare = kappa^2 / (delta_c^2 + kappa^2). For resonant scans (delta_c = delta)
/// this is the profile whose depth and width have closed forms.
inline std::vector<std::pair<double, double>> background_subtracted(const ScanResult& scan) {
    const double kappa = scan.model.cavity.kappa;
    std::vector<std::pair<double, double>> out;
    out.reserve(scan.points.size());
    for (const auto& p : scan.points) {
        const double delta_c =
            (scan.mode == SweepMode::both) ? p.delta : p.delta - scan.offset;
        const double bare = kappa * kappa / (delta_c * delta_c + kappa * kappa);
        out.emplace_back(p.delta, bare - p.T);
    }
    return out;
}

/// Antiresonance depth 1 - T(0) = C (C + 2) / (C + 1)^2.
inline double antiresonance_depth(double c) {
    if (c < 0.0) throw ConstructionError("antiresonance_depth: cooperativity must be >= 0");
    return c * (c + 2.0) / ((c + 1.0) * (c + 1.0));
}

enum class WidthForm { exact, approx };

/// Antiresonance width. The exact form follows from the curvature of B at the dip,
///   beta^2 = kappa^2 (g^2 + kappa gamma)^2 (g^2 + 2 kappa gamma) /
///            (g^6 + 4 g^4 kappa gamma + 2 kappa^3 gamma (kappa^2 + kappa gamma + 2 gamma^2)
///             + g^2 (kappa^4 + 6 kappa^2 gamma^2)),
/// reducing to gamma (1 + C) for g, gamma << kappa. g = 0 has no dip; the width
/// degenerates to gamma.
inline double antiresonance_width(double g, double gamma, double kappa, WidthForm form) {
    if (!(gamma > 0.0) || !(kappa > 0.0))
        throw ConstructionError("antiresonance_width: rates must be positive");
    const double c = g * g / (kappa * gamma);
    if (form == WidthForm::approx) return gamma * (1.0 + c);
    if (g == 0.0) return gamma;
    const double g2 = g * g, k = kappa;
    const double num = k * k * std::pow(g2 + k * gamma, 2) * (g2 + 2.0 * k * gamma);
    const double den = std::pow(g2, 3) + 4.0 * g2 * g2 * k * gamma +
                       2.0 * k * k * k * gamma * (k * k + k * gamma + 2.0 * gamma * gamma) +
                       g2 * (k * k * k * k + 6.0 * k * k * gamma * gamma);
    return std::sqrt(num / den);
}

struct LorentzianFit {
    double s = 0.0;               // least-squares depth, in [0, 1]
    double beta = 0.0;            // least-squares half width [kappa]
    double s_center = 0.0;        // profile value at the dip center (curvature-fit intercept)
    double beta_curvature = 0.0;  // curvature-based width from the same data (NaN if flat)
    double center = 0.0;          // interpolated dip position [kappa]
    double residual = 0.0;        // rms misfit over the fit window
    int iterations = 0;
};

namespace detail {

// Vertex of the parabola through three points; falls back to the middle abscissa.
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curv = (d1 - d0) / (x2 - x0);
    if (curv == 0.0) return x1;
    const double v = 0.5 * (x0 + x1 - d0 / curv);
    return std::isfinite(v) ? v : x1;
}

// Least-squares quartic about the dip. The intercept estimates the profile
// value at the center and the quadratic coefficient its curvature, which give
// the curvature-defined depth and width sqrt(-c0/c2).
struct CurvatureEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();  // B at the dip center
    double width = std::numeric_limits<double>::quiet_NaN();
};

inline CurvatureEstimate curvature_estimate(const std::vector<std::pair<double, double>>& pts,
                                            double center, double halfwin) {
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    Eigen::Matrix<double, 5, 5> ata = Eigen::Matrix<double, 5, 5>::Zero();
    Vec5 atb = Vec5::Zero();
    int count = 0;
    for (const auto& [x, y] : pts) {
        const double u = (x - center) / halfwin;
        if (std::abs(u) > 1.0) continue;
        Vec5 row;
        row << 1.0, u, u * u, u * u * u, u * u * u * u;
        ata += row * row.transpose();
        atb += row * y;
        ++count;
    }
    CurvatureEstimate est;
    if (count < 6) return est;
    const Vec5 coef = ata.ldlt().solve(atb);
    const double c2 = coef[2] / (halfwin * halfwin);
    if (!(c2 < 0.0) || !(coef[0] > 0.0)) return est;
    est.value = coef[0];
    est.width = std::sqrt(-coef[0] / c2);
    return est;
}

}  // namespace detail

/// Least-squares Lorentzian s beta^2 / (u^2 + beta^2) on (delta, B) samples, with u
/// measured from the interpolated dip center. Initial guesses: s from the peak,
/// beta from the half-maximum crossings; the fit window keeps points within
/// 5 beta_0 of the center. Damped Gauss-Newton, relative step < 1e-10 or 200
/// iterations (the latter is an error).
inline LorentzianFit fit_lorentzian(std::vector<std::pair<double, double>> points) {
    if (points.size() < 5) throw ConstructionError("fit_lorentzian: need at least 5 points");
    std::sort(points.begin(), points.end());
    const int n = static_cast<int>(points.size());
    int peak = 0;
    for (int i = 1; i < n; ++i)
        if (points[i].second > points[peak].second) peak = i;
    if (peak == 0 || peak == n - 1)
        throw NumericalError("fit_lorentzian: dip not bracketed by the data");
    const double b_max = points[peak].second;
    if (!(b_max > 0.0)) throw NumericalError("fit_lorentzian: no dip in the data");
    const double center =
        detail::parabola_vertex(points[peak - 1].first, points[peak - 1].second,
                                points[peak].first, points[peak].second,
                                points[peak + 1].first, points[peak + 1].second);

    // Half-maximum crossings on both sides, linearly interpolated.
    const double half = 0.5 * b_max;
    auto crossing = [&](int dir) -> std::optional<double> {
        for (int i = peak; i + dir >= 0 && i + dir < n; i += dir) {
            if (points[i + dir].second < half) {
                const double x0 = points[i].first, y0 = points[i].second;
                const double x1 = points[i + dir].first, y1 = points[i + dir].second;
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
            }
        }
        return std::nullopt;
    };
    const auto left = crossing(-1), right = crossing(+1);
    if (!left || !right)
        throw NumericalError("fit_lorentzian: dip not bracketed by the data");
    double beta = 0.5 * ((*right - center) + (center - *left));
    double s = b_max;
    const double beta0 = beta;

    std::vector<std::pair<double, double>> window;
    for (const auto& pt : points)
        if (std::abs(pt.first - center) <= 5.0 * beta0) window.push_back(pt);
    if (window.size() < 5) window = points;

    const int m = static_cast<int>(window.size());
    double lambda = 1e-3;
    int iter = 0;
    auto chi2 = [&](double ss, double bb) {
        double acc = 0.0;
        for (const auto& [x, y] : window) {
            const double u = x - center;
            const double r = ss * bb * bb / (u * u + bb * bb) - y;
            acc += r * r;
        }
        return acc;
    };
    double best = chi2(s, beta);
    for (; iter < 200; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (const auto& [x, y] : window) {
            const double u = x - center;
            const double den = u * u + beta * beta;
            const double model = s * beta * beta / den;
            const double r = model - y;
            const Eigen::Vector2d jac(beta * beta / den,
                                      2.0 * s * beta * u * u / (den * den));
            jtj += jac * jac.transpose();
            jtr += jac * r;
        }
        Eigen::Matrix2d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
        const double s_new = s + step[0];
        const double beta_new = std::max(beta + step[1], 1e-300);
        const double trial = chi2(s_new, beta_new);
        if (trial <= best) {
            const double rel = std::max(std::abs(step[0]) / std::max(std::abs(s), 1e-300),
                                        std::abs(step[1]) / std::max(beta, 1e-300));
            s = s_new;
            beta = beta_new;
            best = trial;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel < 1e-10) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    if (iter >= 200)
        throw NumericalError("fit_lorentzian: no convergence after 200 iterations (last s = " +
                             std::to_string(s) + ", beta = " + std::to_string(beta) + ")");
    LorentzianFit fit;
    fit.s = s;
    fit.beta = beta;
    fit.center = center;
    const auto curvature =
        detail::curvature_estimate(window, center, std::max(0.35 * beta0, 1e-12));
    fit.s_center = curvature.value;
    fit.beta_curvature = curvature.width;
    fit.residual = std::sqrt(best / m);
    fit.iterations = iter + 1;
    return fit;
}

struct PhaseExtrema {
    double delta_plus = 0.0;   // +gamma sqrt(1 + C)
    double delta_minus = 0.0;  // -gamma sqrt(1 + C)
    double phi_max = 0.0;      // arctan(C / (2 sqrt(1 + C)))
};

/// Detunings of the extremal relative phase and its magnitude. With gamma_scale
/// replaced by gamma_eff and C by C_eff this also covers collective resonances.
inline PhaseExtrema phase_extrema(double c, double gamma_scale) {
    if (c < 0.0 || !(gamma_scale > 0.0))
        throw ConstructionError("phase_extrema: need C >= 0 and gamma > 0");
    const double root = std::sqrt(1.0 + c);
    return {gamma_scale * root, -gamma_scale * root, std::atan(c / (2.0 * root))};
}

/// Finite-difference slope of the relative phase at its zero crossing. In the
/// subradiant regime (g^2 >> kappa gamma_eff) the slope approaches 1/gamma_eff.
inline double phase_slope_at_resonance(const ScanResult& scan) {
    const auto& pts = scan.points;
    const int n = static_cast<int>(pts.size());
    int best = -1;
    double best_slope = 0.0;
    auto usable = [&](int i) { return pts[i].flag != PointFlag::failed; };
    for (int i = 0; i + 1 < n; ++i) {
        if (!usable(i) || !usable(i + 1)) continue;
        const double a = pts[i].phase_rel, b = pts[i + 1].phase_rel;
        // A crossing is a strict sign change, or a grid point landing exactly on
        // zero with strictly signed neighbors on either side.
        const bool strict = a * b < 0.0;
        const bool on_grid = a == 0.0 && i > 0 && usable(i - 1) &&
                             pts[i - 1].phase_rel * b < 0.0;
        if (!strict && !on_grid) continue;
        const double lo = on_grid ? pts[i - 1].phase_rel : a;
        const double lo_delta = on_grid ? pts[i - 1].delta : pts[i].delta;
        const double jump = std::abs(b - lo);
        if (jump > std::numbers::pi) continue;  // branch wrap, not a resonance
        const double slope = (b - lo) / (pts[i + 1].delta - lo_delta);
        if (std::abs(slope) > std::abs(best_slope)) {
            best_slope = slope;
            best = i;
        }
    }
    if (best < 0)
        throw NumericalError("phase_slope_at_resonance: no zero crossing of the phase in the grid");
    const int j = (std::abs(pts[best].phase_rel) <= std::abs(pts[best + 1].phase_rel))
                      ? best
                      : best + 1;
    if (j > 0 && j + 1 < n && pts[j - 1].flag != PointFlag::failed &&
        pts[j + 1].flag != PointFlag::failed) {
        const double jump = std::abs(pts[j + 1].phase_rel - pts[j - 1].phase_rel);
        if (jump < std::numbers::pi)
            return (pts[j + 1].phase_rel - pts[j - 1].phase_rel) /
                   (pts[j + 1].delta - pts[j - 1].delta);
    }
    return best_slope;
}

struct BandStructure {
    Eigen::VectorXd energies;  // omega_m - omega_e for m = 1..N [kappa]
    Eigen::MatrixXd states;    // column m-1 holds |m>
};

/// Nearest-neighbor collective band: omega_m - omega_e = 2 Omega cos(m pi / (N+1))
/// with sine eigenvectors sqrt(2/(N+1)) sin(m j pi / (N+1)).
inline BandStructure band_structure(int n, double omega_nn) {
    if (n < 2) throw ConstructionError("band_structure: need N >= 2");
    BandStructure band;
    band.energies.resize(n);
    band.states.resize(n, n);
    const double norm = std::sqrt(2.0 / (n + 1.0));
    for (int m = 1; m <= n; ++m) {
        band.energies[m - 1] = 2.0 * omega_nn * std::cos(m * std::numbers::pi / (n + 1.0));
        for (int j = 1; j <= n; ++j)
            band.states(j - 1, m - 1) = norm * std::sin(m * j * std::numbers::pi / (n + 1.0));
    }
    return band;
}

struct GammaEigen {
    Eigen::VectorXd lambdas;    // collective decay rates, ascending [kappa]
    Eigen::MatrixXd transform;  // orthogonal T with T^T gamma_matrix T diagonal
};

/// Symmetric eigendecomposition of the decay matrix. Columns are sign-fixed so
/// the first nonzero component is positive.
inline GammaEigen gamma_eigenmodes(const CouplingMatrices& couplings) {
    const Eigen::MatrixXd& g = couplings.gamma_matrix;
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
        throw ConstructionError("gamma_eigenmodes: decay matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success)
        throw NumericalError("gamma_eigenmodes: eigendecomposition failed");
    GammaEigen out;
    out.lambdas = es.eigenvalues();
    out.transform = es.eigenvectors();
    const double scale = out.transform.cwiseAbs().maxCoeff();
    for (int c = 0; c < out.transform.cols(); ++c) {
        for (int r = 0; r < out.transform.rows(); ++r) {
            if (std::abs(out.transform(r, c)) > 1e-12 * scale) {
                if (out.transform(r, c) < 0.0) out.transform.col(c) *= -1.0;
                break;
            }
        }
    }
    return out;
}

/// Idealized cooperativity C_opt = G^T G / (kappa lambda_min), the value reached
/// if the drive addressed the most protected decay eigenmode perfectly.
inline double optimal_cooperativity(const CouplingVector& g_vec, const CouplingMatrices& couplings,
                                    double kappa) {
    const double lambda_min = gamma_eigenmodes(couplings).lambdas[0];
    if (lambda_min <= 0.0) return std::numeric_limits<double>::infinity();
    return g_vec.norm_squared() / (kappa * lambda_min);
}

/// Root of delta_eff(delta_e) = 0 inside [lo, hi]: bracketed bisection with secant
/// acceleration, refined to |delta_eff| < tol kappa. delta_eff has poles between
/// collective resonances, so a sign change that fails to shrink |delta_eff| is
/// rejected as a pole.
inline double solve_cavity_tuning(const SystemModel& model, double lo, double hi,
                                  double tol = 1e-10) {
    if (!(hi > lo)) throw ConstructionError("solve_cavity_tuning: invalid bracket");
    const double scale = model.cavity.kappa;
    auto f = [&](double d) { return effective_response(model, d).delta_eff; };
    double fa = f(lo), fb = f(hi);
    if (std::abs(fa) < tol * scale) return lo;
    if (std::abs(fb) < tol * scale) return hi;
    if (fa * fb > 0.0)
        throw NumericalError("solve_cavity_tuning: no sign change over bracket, delta_eff(" +
                             std::to_string(lo) + ") = " + std::to_string(fa) + ", delta_eff(" +
                             std::to_string(hi) + ") = " + std::to_string(fb));
    double a = lo, b = hi;
    double x = a, fx = fa;
    for (int iter = 0; iter < 200; ++iter) {
        // Secant proposal from the bracket ends, bisection when it is outside.
        double cand = b - fb * (b - a) / (fb - fa);
        if (!std::isfinite(cand) || cand <= a || cand >= b) cand = 0.5 * (a + b);
        const double fc = f(cand);
        x = cand;
        fx = fc;
        if (std::abs(fc) < tol * scale) return cand;
        if (fa * fc < 0.0) {
            b = cand;
            fb = fc;
        } else {
            a = cand;
            fa = fc;
        }
        if (b - a < 1e-15 * std::max({1.0, std::abs(a), std::abs(b)})) break;
    }
    if (std::abs(fx) < tol * scale) return x;
    throw NumericalError(
        "solve_cavity_tuning: bracket collapsed without reaching tolerance (pole?), "
        "|delta_eff| = " +
        std::to_string(std::abs(fx)));
}

/// All zeros of delta_eff(delta_e) in [lo, hi], located on a uniform sample grid
/// and refined. Pole crossings and decoupled samples are skipped.
inline std::vector<double> find_response_zeros(const SystemModel& model, double lo, double hi,
                                               int samples = 2001, double tol = 1e-10) {
    if (samples < 2) throw ConstructionError("find_response_zeros: need at least 2 samples");
    std::vector<double> roots;
    double prev_x = lo;
    double prev_f = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < samples; ++i) {
        const double x = lo + (hi - lo) * i / (samples - 1);
        double fx;
        try {
            fx = effective_response(model, x).delta_eff;
        } catch (const NumericalError&) {
            prev_f = std::numeric_limits<double>::quiet_NaN();
            prev_x = x;
            continue;
        }
        if (std::isfinite(prev_f) && prev_f * fx < 0.0) {
            try {
                roots.push_back(solve_cavity_tuning(model, prev_x, x, tol));
            } catch (const NumericalError&) {
                // pole crossing
            }
        } else if (fx == 0.0) {
            roots.push_back(x);
        }
        prev_x = x;
        prev_f = fx;
    }
    return roots;
}

/// Default search window for collective resonances: the spectrum of omega padded
/// by the decay scale.
inline std::pair<double, double> default_tuning_window(const SystemModel& model) {
    double spread = 0.0;
    if (model.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.couplings.omega);
        spread = std::max(std::abs(es.eigenvalues().minCoeff()),
                          std::abs(es.eigenvalues().maxCoeff()));
    }
    const double gamma_scale =
        (model.size() > 0) ? model.couplings.gamma_matrix.diagonal().maxCoeff() : 0.0;
    const double half = 1.5 * spread + 10.0 * gamma_scale + 0.05 * model.cavity.kappa;
    return {-half, half};
}

struct TunedOperatingPoint {
    double delta_e = 0.0;    // root of delta_eff
    double gamma_eff = 0.0;  // linewidth at the root
    double c_eff = 0.0;      // cooperativity at the root
};

/// The most subradiant resonance reachable by the given couplings: among all
/// zeros of delta_eff in the window, the one with the smallest gamma_eff
/// (equivalently the largest C_eff).
inline TunedOperatingPoint best_tuned_point(const SystemModel& model, double lo, double hi,
                                            int samples = 2001) {
    const auto roots = find_response_zeros(model, lo, hi, samples);
    if (roots.empty())
        throw NumericalError("best_tuned_point: no resonance found in the search window");
    TunedOperatingPoint best;
    best.gamma_eff = std::numeric_limits<double>::infinity();
    for (const double r : roots) {
        const auto resp = effective_response(model, r);
        if (resp.gamma_eff < best.gamma_eff) {
            best.delta_e = r;
            best.gamma_eff = resp.gamma_eff;
            best.c_eff = effective_cooperativity(model, r);
        }
    }
    return best;
}

inline TunedOperatingPoint best_tuned_point(const SystemModel& model, int samples = 2001) {
    const auto [lo, hi] = default_tuning_window(model);
    return best_tuned_point(model, lo, hi, samples);
}

}  // namespace antires
