#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef ANTIRES_WITH_UMFPACK
#include <Eigen/UmfPackSupport>
#endif
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "antires/errors.hpp"
#include "antires/parallel.hpp"
#include "antires/steady_state.hpp"

namespace antires {

using SparseC = Eigen::SparseMatrix<std::complex<double>>;

enum class SteadyMethod { null_space, time_integration };

struct OracleConfig {
    int n_max = 3;                                   // cavity Fock cutoff (photon number)
    SteadyMethod method = SteadyMethod::null_space;
    double t_final = 1e4;                            // integration horizon [1/kappa]
    double tol = 1e-10;

    // Escalation rule for the photon cutoff: 3 suffices for eta <= 1e-2 kappa;
    // stronger drives populate the cavity with (eta/kappa)^2 photons on average.
    static int suggested_n_max(double eta, double kappa = 1.0) {
        const double ratio = eta / kappa;
        if (ratio <= 1e-2) return 3;
        return std::min(8, 3 + static_cast<int>(std::ceil(8.0 * ratio * ratio)));
    }
};

inline void validate(const OracleConfig& cfg) {
    if (cfg.n_max < 1) throw ConstructionError("oracle config: n_max must be >= 1");
    if (!(cfg.tol > 0.0)) throw ConstructionError("oracle config: tol must be positive");
}

namespace detail {

inline SparseC sparse_identity(int n) {
    SparseC id(n, n);
    id.setIdentity();
    return id;
}

inline SparseC fock_lowering(int n_max) {
    SparseC a(n_max + 1, n_max + 1);
    std::vector<Eigen::Triplet<Complex>> trips;
    for (int n = 1; n <= n_max; ++n) trips.emplace_back(n - 1, n, std::sqrt(double(n)));
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

// Basis order per site: |g> = 0, |e> = 1. Full space: cavity (x) emitter 1 (x) ...
inline SparseC spin_lowering() {
    SparseC s(2, 2);
    s.insert(0, 1) = 1.0;
    s.makeCompressed();
    return s;
}

inline SparseC embed_emitter(const SparseC& op, int n_emitters, int site, int fock_dim) {
    SparseC full = sparse_identity(fock_dim);
    for (int k = 0; k < n_emitters; ++k) {
        const SparseC& factor = (k == site) ? op : sparse_identity(2);
        full = Eigen::kroneckerProduct(full, factor).eval();
    }
    return full;
}

// Row-major vectorization vec(rho)[r * D + c] = rho(r, c), so that
// vec(A rho B) = (A kron B^T) vec(rho).
inline SparseC super_left(const SparseC& a, int dim) {
    return Eigen::kroneckerProduct(a, sparse_identity(dim)).eval();
}
inline SparseC super_right(const SparseC& b, int dim) {
    return Eigen::kroneckerProduct(sparse_identity(dim), SparseC(b.transpose())).eval();
}
inline SparseC super_sandwich(const SparseC& a, const SparseC& b) {
    return Eigen::kroneckerProduct(a, SparseC(b.transpose())).eval();
}

inline SparseC commutator_superop(const SparseC& h, int dim) {
    const Complex mi(0.0, -1.0);
    return (mi * (super_left(h, dim) - super_right(h, dim))).eval();
}

}  // namespace detail

// The Liouvillian split by its linear dependence on the detunings and the drive:
//   L(delta_e, delta_c, eta) = fixed + delta_e per_delta_e + delta_c per_delta_c + eta per_eta.
// Dissipator conventions are slaved to the mean-value equations: <da/dt> = -kappa <a>
// and, for a single emitter, <d sigma^- / dt> = -gamma <sigma^->.
struct GeneratorFamily {
    int dim = 0;  // Hilbert-space dimension 2^N (n_max + 1)
    SparseC fixed, per_delta_e, per_delta_c, per_eta;
    SparseC a_op;                     // annihilation operator on the full space
    std::vector<SparseC> excitation;  // sigma_i^+ sigma_i^- on the full space

    SparseC assemble(double delta_e, double delta_c, double eta) const {
        return (fixed + Complex(delta_e) * per_delta_e + Complex(delta_c) * per_delta_c +
                Complex(eta) * per_eta)
            .eval();
    }
};

inline GeneratorFamily build_generator_family(const SystemModel& model, const OracleConfig& cfg) {
    validate(cfg);
    const int n = model.size();
    if (n > 5 || cfg.n_max > 8)
        throw ConstructionError("oracle: dimension cap exceeded (N <= 5, n_max <= 8)");
    const long fock = cfg.n_max + 1;
    const long dim = fock << n;
    if (dim * dim > 1'000'000)
        throw ConstructionError("oracle: Liouvillian dimension " + std::to_string(dim * dim) +
                                " exceeds the guard of 1e6");

    GeneratorFamily fam;
    fam.dim = static_cast<int>(dim);
    const SparseC a = Eigen::kroneckerProduct(detail::fock_lowering(cfg.n_max),
                                              detail::sparse_identity(1 << n))
                          .eval();
    const SparseC ad = SparseC(a.adjoint());
    fam.a_op = a;

    std::vector<SparseC> lower(n), raise(n);
    for (int i = 0; i < n; ++i) {
        lower[i] = detail::embed_emitter(detail::spin_lowering(), n, i, cfg.n_max + 1);
        raise[i] = SparseC(lower[i].adjoint());
        fam.excitation.push_back((raise[i] * lower[i]).eval());
    }

    const int d = fam.dim;
    // Drive- and detuning-independent Hamiltonian parts.
    SparseC h_fixed(d, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double om = model.couplings.omega(i, j);
            if (om != 0.0) h_fixed += Complex(om) * (raise[i] * lower[j]);
        }
        const double gi = model.g_vec.g[i];
        if (gi != 0.0) h_fixed += Complex(gi) * (ad * lower[i] + a * raise[i]);
    }

    fam.fixed = detail::commutator_superop(h_fixed, d);

    // Cavity dissipator kappa (2 a rho a+ - a+ a rho - rho a+ a).
    const SparseC num_op = (ad * a).eval();
    fam.fixed += Complex(model.cavity.kappa) *
                 (2.0 * detail::super_sandwich(a, ad) - detail::super_left(num_op, d) -
                  detail::super_right(num_op, d));

    // Collective emitter dissipator sum_ij gamma_ij (2 s_i^- rho s_j^+ - s_i^+ s_j^- rho - rho s_i^+ s_j^-).
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double gij = model.couplings.gamma_matrix(i, j);
            if (gij == 0.0) continue;
            const SparseC cross = (raise[i] * lower[j]).eval();
            fam.fixed += Complex(gij) * (2.0 * detail::super_sandwich(lower[i], raise[j]) -
                                         detail::super_left(cross, d) -
                                         detail::super_right(cross, d));
        }
    }

    SparseC h_de(d, d);
    for (int i = 0; i < n; ++i) h_de += fam.excitation[i];
    fam.per_delta_e = detail::commutator_superop(h_de, d);
    fam.per_delta_c = detail::commutator_superop(num_op, d);
    const SparseC h_eta = (Complex(0.0, 1.0) * (ad - a)).eval();
    fam.per_eta = detail::commutator_superop(h_eta, d);

    fam.fixed.makeCompressed();
    fam.per_delta_e.makeCompressed();
    fam.per_delta_c.makeCompressed();
    fam.per_eta.makeCompressed();
    return fam;
}

/// Liouvillian acting on the row-major vectorization of rho at the model's
/// detunings and drive.
inline SparseC build_generator(const SystemModel& model, const OracleConfig& cfg) {
    const GeneratorFamily fam = build_generator_family(model, cfg);
    return fam.assemble(model.delta_e, model.cavity.delta_c, model.cavity.eta);
}

inline void validate_density_matrix(const Eigen::MatrixXcd& rho, double trace_tol = 1e-8,
                                    double herm_tol = 1e-10, double pos_tol = 1e-8) {
    if (std::abs(rho.trace() - Complex(1.0)) > trace_tol)
        throw NumericalError("density matrix: trace deviates from 1 by " +
                             std::to_string(std::abs(rho.trace() - Complex(1.0))));
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol)
        throw NumericalError("density matrix: not Hermitian, deviation " + std::to_string(herm));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -pos_tol)
        throw NumericalError("density matrix: negative eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()));
}

namespace detail {

inline Eigen::MatrixXcd unvec_row_major(const Eigen::VectorXcd& x, int dim) {
    Eigen::MatrixXcd rho(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) rho(r, c) = x[r * dim + c];
    return rho;
}

// The generator preserves Hermiticity, so the kernel problem closes on the
// real parameterization (diagonal, Re/Im of the upper triangle). Variable
// layout: rho_rr -> r; for r < c, Re rho_rc -> dim + 2 off(r,c) and
// Im rho_rc -> dim + 2 off(r,c) + 1 with off enumerating the upper triangle.
struct HermitianIndexer {
    int dim;
    int diag(int r) const { return r; }
    int off(int r, int c) const { return r * dim - r * (r + 1) / 2 + (c - r - 1); }
    int re(int r, int c) const { return dim + 2 * off(r, c); }
    int im(int r, int c) const { return dim + 2 * off(r, c) + 1; }
};

inline Eigen::VectorXcd steady_state_null_space(const SparseC& gen, int dim) {
    // rho_ss spans the (generically one-dimensional) kernel; replacing one
    // redundant row of the generator by the trace functional turns the singular
    // system into a solvable one with tr(rho) = 1 built in. Solving in the
    // Hermitian parameterization makes the factorization real, which is
    // several times cheaper than the complex one.
    const HermitianIndexer ix{dim};
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * gen.nonZeros() + dim);
    double gen_scale = 0.0;
    for (int k = 0; k < gen.outerSize(); ++k) {
        for (SparseC::InnerIterator it(gen, k); it; ++it) {
            gen_scale = std::max(gen_scale, std::abs(it.value()));
            const int row = static_cast<int>(it.row());
            const int col = static_cast<int>(it.col());
            const int a = row / dim, b = row % dim;
            if (a > b) continue;  // rows below the diagonal are redundant
            const int c = col / dim, d = col % dim;
            const double wr = it.value().real(), wi = it.value().imag();
            // rho_cd in real variables: (vr, vi) coefficients of the source pair
            int src_re, src_im;
            double sr, si;  // rho_cd = sr * var_re + i si * var_im (sign-folded)
            if (c == d) {
                src_re = ix.diag(c);
                src_im = -1;
                sr = 1.0;
                si = 0.0;
            } else if (c < d) {
                src_re = ix.re(c, d);
                src_im = ix.im(c, d);
                sr = 1.0;
                si = 1.0;
            } else {
                src_re = ix.re(d, c);
                src_im = ix.im(d, c);
                sr = 1.0;
                si = -1.0;  // rho_cd = conj(rho_dc)
            }
            // contribution w * rho_cd split into real and imaginary parts:
            //   Re += wr sr x - wi si y,  Im += wi sr x + wr si y
            if (a == b) {
                const int out = ix.diag(a);
                if (out == 0) continue;  // replaced by the trace row
                trips.emplace_back(out, src_re, wr * sr);
                if (src_im >= 0) trips.emplace_back(out, src_im, -wi * si);
            } else {
                const int out_re = ix.re(a, b), out_im = ix.im(a, b);
                trips.emplace_back(out_re, src_re, wr * sr);
                trips.emplace_back(out_im, src_re, wi * sr);
                if (src_im >= 0) {
                    trips.emplace_back(out_re, src_im, -wi * si);
                    trips.emplace_back(out_im, src_im, wr * si);
                }
            }
        }
    }
    for (int r = 0; r < dim; ++r) trips.emplace_back(0, ix.diag(r), 1.0);

    Eigen::SparseMatrix<double> sys(dim * dim, dim * dim);
    sys.setFromTriplets(trips.begin(), trips.end());
    sys.makeCompressed();

#ifdef ANTIRES_WITH_UMFPACK
    Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
#else
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
#endif
    lu.compute(sys);
    if (lu.info() != Eigen::Success)
        throw NumericalError(
            "steady_state_rho: trace-constrained system is singular "
            "(degenerate null space of the generator?)");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim * dim);
    rhs[0] = 1.0;
    const Eigen::VectorXd sol = lu.solve(rhs);

    Eigen::VectorXcd x(dim * dim);
    for (int r = 0; r < dim; ++r) {
        x[r * dim + r] = sol[ix.diag(r)];
        for (int c = r + 1; c < dim; ++c) {
            const Complex v(sol[ix.re(r, c)], sol[ix.im(r, c)]);
            x[r * dim + c] = v;
            x[c * dim + r] = std::conj(v);
        }
    }

    // Residual against the original complex generator; this also guards the
    // real-parameterization transform itself.
    const double res = (gen * x).cwiseAbs().maxCoeff();
    const double bound = 1e-8 * std::max(1.0, gen_scale) * x.cwiseAbs().maxCoeff();
    if (!(res <= bound))
        throw NumericalError("steady_state_rho: kernel residual " + std::to_string(res) +
                             " exceeds bound " + std::to_string(bound));
    return x;
}

// Dormand-Prince 5(4) step: returns the 5th-order solution and an error estimate.
inline void rk45_step(const SparseC& l, const Eigen::VectorXcd& x, double h,
                      Eigen::VectorXcd& out, double& err) {
    const Eigen::VectorXcd k1 = l * x;
    const Eigen::VectorXcd k2 = l * (x + h * (0.2 * k1));
    const Eigen::VectorXcd k3 = l * (x + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
    const Eigen::VectorXcd k4 = l * (x + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
    const Eigen::VectorXcd k5 =
        l * (x + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 + 64448.0 / 6561 * k3 -
                      212.0 / 729 * k4));
    const Eigen::VectorXcd k6 =
        l * (x + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 +
                      49.0 / 176 * k4 - 5103.0 / 18656 * k5));
    out = x + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                   2187.0 / 6784 * k5 + 11.0 / 84 * k6);
    const Eigen::VectorXcd k7 = l * out;
    const Eigen::VectorXcd e =
        h * ((35.0 / 384 - 5179.0 / 57600) * k1 + (500.0 / 1113 - 7571.0 / 16695) * k3 +
             (125.0 / 192 - 393.0 / 640) * k4 + (-2187.0 / 6784 + 92097.0 / 339200) * k5 +
             (11.0 / 84 - 187.0 / 2100) * k6 - 1.0 / 40 * k7);
    err = e.cwiseAbs().maxCoeff();
}

inline Eigen::VectorXcd steady_state_time_integration(const SparseC& gen,
                                                      const OracleConfig& cfg) {
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(gen.rows());
    x[0] = 1.0;  // vacuum (x) all ground
    double t = 0.0;
    double h = 1e-3;
    const double step_tol = std::max(1e-13, 0.01 * cfg.tol);
    Eigen::VectorXcd next;
    double residual = (gen * x).cwiseAbs().maxCoeff();
    while (residual >= cfg.tol) {
        if (t > cfg.t_final)
            throw NumericalError("steady_state_rho: time integration hit t_final with residual " +
                                 std::to_string(residual));
        double err = 0.0;
        rk45_step(gen, x, h, next, err);
        if (err <= step_tol * std::max(1.0, x.cwiseAbs().maxCoeff())) {
            x = next;
            t += h;
            residual = (gen * x).cwiseAbs().maxCoeff();
        }
        const double grow = (err > 0.0) ? 0.9 * std::pow(step_tol / err, 0.2) : 2.0;
        h *= std::clamp(grow, 0.2, 2.0);
        h = std::min(h, cfg.t_final / 10.0);
    }
    return x;
}

}  // namespace detail

/// Exact steady state of the full master equation. null_space solves the
/// trace-constrained kernel problem directly; time_integration evolves the
/// vacuum until the residual ||d rho / dt|| drops below tol.
inline Eigen::MatrixXcd steady_state_rho(const SparseC& generator, const OracleConfig& cfg) {
    validate(cfg);
    const int dim = static_cast<int>(std::lround(std::sqrt(double(generator.rows()))));
    if (long(dim) * dim != generator.rows())
        throw ConstructionError("steady_state_rho: generator is not a superoperator");
    Eigen::VectorXcd x = (cfg.method == SteadyMethod::null_space)
                             ? detail::steady_state_null_space(generator, dim)
                             : detail::steady_state_time_integration(generator, cfg);
    Eigen::MatrixXcd rho = detail::unvec_row_major(x, dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    validate_density_matrix(rho);
    return rho;
}

inline Complex expectation(const SparseC& op, const Eigen::MatrixXcd& rho) {
    Complex acc(0.0, 0.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseC::InnerIterator it(op, k); it; ++it)
            acc += it.value() * rho(it.col(), it.row());
    return acc;
}

struct ComparisonRow {
    double delta = 0.0;
    double eta = 0.0;
    double t_exact = 0.0;          // |t|^2 from the full master equation
    double t_linear = 0.0;         // |t|^2 from the linearized theory
    double abs_diff = 0.0;
    double max_excitation = 0.0;   // max_i <sigma_i^+ sigma_i^->, the linearization witness
};

/// Full-numerics vs. linear-theory transmission over a detuning grid for each
/// drive amplitude. Rows are ordered by eta, then by delta.
inline std::vector<ComparisonRow> compare_linearization(const SystemModel& model,
                                                        const std::vector<double>& grid,
                                                        const std::vector<double>& etas,
                                                        const OracleConfig& cfg,
                                                        SweepMode mode = SweepMode::both,
                                                        double offset = 0.0, int threads = 1) {
    validate(model);
    for (const double eta : etas)
        if (!(eta > 0.0))
            throw ConstructionError("compare_linearization: drive amplitudes must be positive");
    limit_blas_threads_for_parallel(threads);
    const GeneratorFamily fam = build_generator_family(model, cfg);
    const int n_pts = static_cast<int>(grid.size());
    const int n_eta = static_cast<int>(etas.size());
    std::vector<ComparisonRow> rows(static_cast<size_t>(n_pts) * n_eta);
    parallel_for(n_pts * n_eta, threads, [&](int idx) {
        const int e = idx / n_pts;
        const int i = idx % n_pts;
        const double delta = grid[i];
        const double eta = etas[e];
        const double delta_c = (mode == SweepMode::both) ? delta : delta - offset;

        const SparseC gen = fam.assemble(delta, delta_c, eta);
        const Eigen::MatrixXcd rho = steady_state_rho(gen, cfg);
        const Complex a_mean = expectation(fam.a_op, rho);
        const Complex t_exact = model.cavity.kappa * a_mean / eta;

        SystemModel lin = model;
        lin.delta_e = delta;
        lin.cavity.delta_c = delta_c;
        lin.cavity.eta = eta;
        const SpectrumPoint p = transmission_point(lin);

        ComparisonRow row;
        row.delta = delta;
        row.eta = eta;
        row.t_exact = std::norm(t_exact);
        row.t_linear = p.T;
        row.abs_diff = std::abs(row.t_exact - row.t_linear);
        for (const auto& ex : fam.excitation)
            row.max_excitation = std::max(row.max_excitation, expectation(ex, rho).real());
        rows[idx] = row;
    });
    return rows;
}

}  // namespace antires
