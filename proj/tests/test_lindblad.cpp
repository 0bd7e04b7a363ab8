#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "antires/cavity_modes.hpp"
#include "antires/lindblad.hpp"

using namespace antires;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemModel chain_model(int n, double d, double gamma, const CouplingVector& g_vec) {
    SystemModel model;
    model.couplings = build_coupling_matrices(make_chain(n, d, gamma));
    model.g_vec = g_vec;
    return model;
}

Eigen::VectorXcd vec_row_major(const Eigen::MatrixXcd& rho) {
    const int d = static_cast<int>(rho.rows());
    Eigen::VectorXcd x(d * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) x[r * d + c] = rho(r, c);
    return x;
}

}  // namespace

TEST_CASE("generator preserves the trace") {
    auto model = chain_model(2, 0.1, 0.025, coupling_vector_pattern(2, 0.02, Pattern::alternating));
    model.cavity.eta = 0.01;
    model.cavity.delta_c = 0.3;
    model.delta_e = -0.2;
    OracleConfig cfg;
    cfg.n_max = 2;
    const SparseC gen = build_generator(model, cfg);
    const int dim = 3 * 4;
    // The trace functional is the row-major vectorization of the identity.
    Eigen::VectorXcd trace_vec = Eigen::VectorXcd::Zero(dim * dim);
    for (int d = 0; d < dim; ++d) trace_vec[d * dim + d] = 1.0;
    const Eigen::VectorXcd column_action = gen.adjoint() * trace_vec;
    CHECK(column_action.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generator reproduces the mean-value equations of motion") {
    // d<a>/dt = -(kappa + i delta_c) <a> + eta and d<sigma^->/dt = -(gamma + i delta_e) <sigma^->
    // on a product test state with nonzero coherences.
    SystemModel model = chain_model(1, 0.1, 0.05, coupling_vector_pattern(1, 0.0, Pattern::uniform));
    model.cavity.eta = 0.02;
    model.cavity.delta_c = 0.4;
    model.delta_e = -0.7;
    OracleConfig cfg;
    cfg.n_max = 3;
    const GeneratorFamily fam = build_generator_family(model, cfg);
    const SparseC gen = fam.assemble(model.delta_e, model.cavity.delta_c, model.cavity.eta);

    // Coherent-like amplitude with the truncation edge left empty, so the
    // truncated commutators act exactly.
    Eigen::Vector4cd fock;
    fock << 0.9, 0.3, 0.1, 0.0;
    fock.normalize();
    Eigen::Vector2cd spin;
    spin << 0.8, Complex(0.5, 0.2);
    spin.normalize();
    const int dim = 8;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    for (int f = 0; f < 4; ++f)
        for (int s = 0; s < 2; ++s) psi[f * 2 + s] = fock[f] * spin[s];
    const Eigen::MatrixXcd rho = psi * psi.adjoint();

    const Eigen::VectorXcd drho = gen * vec_row_major(rho);
    Eigen::MatrixXcd rho_dot(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) rho_dot(r, c) = drho[r * dim + c];

    const Complex a_mean = expectation(fam.a_op, rho);
    const Complex a_dot = expectation(fam.a_op, rho_dot);
    const Complex expected_a = -(Complex(1.0, model.cavity.delta_c)) * a_mean + model.cavity.eta;
    CHECK_THAT(std::abs(a_dot - expected_a), WithinAbs(0.0, 1e-12));

    SparseC sigma = detail::embed_emitter(detail::spin_lowering(), 1, 0, 4);
    const Complex s_mean = expectation(sigma, rho);
    const Complex s_dot = expectation(sigma, rho_dot);
    const Complex expected_s = -(Complex(0.05, model.delta_e)) * s_mean;
    CHECK_THAT(std::abs(s_dot - expected_s), WithinAbs(0.0, 1e-12));
}

TEST_CASE("empty emitter register leaves a displaced cavity state") {
    SystemModel model;
    model.cavity.eta = 0.05;
    model.cavity.delta_c = 0.2;
    OracleConfig cfg;
    cfg.n_max = 4;
    const SparseC gen = build_generator(model, cfg);
    const GeneratorFamily fam = build_generator_family(model, cfg);
    const auto rho = steady_state_rho(gen, cfg);
    const Complex expected = model.cavity.eta / Complex(1.0, model.cavity.delta_c);
    CHECK_THAT(std::abs(expectation(fam.a_op, rho) - expected), WithinAbs(0.0, 1e-8));
}

TEST_CASE("undriven system relaxes to vacuum") {
    auto model = chain_model(2, 0.2, 0.025, coupling_vector_pattern(2, 0.02, Pattern::uniform));
    model.cavity.eta = 0.0;
    OracleConfig cfg;
    cfg.n_max = 2;
    const auto rho = steady_state_rho(build_generator(model, cfg), cfg);
    CHECK_THAT(std::abs(rho(0, 0) - Complex(1.0)), WithinAbs(0.0, 1e-10));
}

TEST_CASE("weak drive reproduces the linear single-emitter theory") {
    auto model = chain_model(1, 0.1, 0.05, coupling_vector_pattern(1, 0.1, Pattern::uniform));
    model.cavity.eta = 1e-3;
    model.delta_e = model.cavity.delta_c = 0.04;
    OracleConfig cfg;
    cfg.n_max = 3;
    const GeneratorFamily fam = build_generator_family(model, cfg);
    const auto rho = steady_state_rho(build_generator(model, cfg), cfg);
    const Complex a_exact = expectation(fam.a_op, rho);
    const Complex a_linear =
        model.cavity.eta / 1.0 * single_emitter_transmission(0.1, 0.05, 1.0, 0.04);
    CHECK(std::abs(a_exact - a_linear) < 1e-6 * std::abs(a_linear));
}

TEST_CASE("both steady-state methods agree") {
    auto model = chain_model(2, 0.3, 0.025, coupling_vector_pattern(2, 0.02, Pattern::uniform));
    model.cavity.eta = 0.01;
    OracleConfig direct;
    direct.n_max = 2;
    OracleConfig integ = direct;
    integ.method = SteadyMethod::time_integration;
    integ.tol = 1e-11;
    integ.t_final = 1e5;
    const SparseC gen = build_generator(model, direct);
    const GeneratorFamily fam = build_generator_family(model, direct);
    const Complex a_direct = expectation(fam.a_op, steady_state_rho(gen, direct));
    const Complex a_integrated = expectation(fam.a_op, steady_state_rho(gen, integ));
    CHECK(std::abs(a_direct - a_integrated) < 1e-8);
}

TEST_CASE("density matrix validation flags corrupted states") {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(0, 0) = 1.5;
    CHECK_THROWS_AS(validate_density_matrix(rho), NumericalError);
    rho(0, 0) = 1.0;
    rho(0, 1) = Complex(0.0, 0.4);
    rho(1, 0) = Complex(0.0, 0.4);  // not Hermitian
    CHECK_THROWS_AS(validate_density_matrix(rho), NumericalError);
    Eigen::MatrixXcd neg = Eigen::MatrixXcd::Zero(2, 2);
    neg(0, 0) = 1.2;
    neg(1, 1) = -0.2;
    CHECK_THROWS_AS(validate_density_matrix(neg), NumericalError);
}

TEST_CASE("dimension guard") {
    auto model = chain_model(5, 0.2, 0.025, coupling_vector_pattern(5, 0.02, Pattern::uniform));
    OracleConfig cfg;
    cfg.n_max = 8;
    CHECK_NOTHROW(build_generator_family(model, cfg));
    auto big = chain_model(6, 0.2, 0.025, coupling_vector_pattern(6, 0.02, Pattern::uniform));
    CHECK_THROWS_AS(build_generator_family(big, cfg), ConstructionError);
    cfg.n_max = 9;
    CHECK_THROWS_AS(build_generator_family(model, cfg), ConstructionError);
}

TEST_CASE("photon truncation is converged for weak drive") {
    auto model = chain_model(2, 0.1, 0.025, coupling_vector_pattern(2, 0.02, Pattern::alternating));
    model.cavity.eta = 1e-2;
    double t_prev = 0.0;
    for (const int n_max : {3, 4}) {
        OracleConfig cfg;
        cfg.n_max = n_max;
        const GeneratorFamily fam = build_generator_family(model, cfg);
        const auto rho = steady_state_rho(fam.assemble(0.0, 0.0, model.cavity.eta), cfg);
        const double t = std::norm(expectation(fam.a_op, rho) / model.cavity.eta);
        if (n_max > 3) CHECK_THAT(t, WithinAbs(t_prev, 1e-6));
        t_prev = t;
    }
}

TEST_CASE("comparison table columns and weak-drive agreement") {
    auto model = chain_model(2, 0.1, 0.025, coupling_vector_pattern(2, 0.02, Pattern::alternating));
    OracleConfig cfg;
    cfg.n_max = 3;
    const auto grid = linspace(-0.5, 0.5, 11);
    const auto rows = compare_linearization(model, grid, {1e-3, 0.1, 0.3}, cfg, SweepMode::both,
                                            0.0, 2);
    REQUIRE(rows.size() == 33);
    double weak_worst = 0.0;
    for (int i = 0; i < 11; ++i) {
        CHECK(rows[i].eta == 1e-3);
        weak_worst = std::max(weak_worst, rows[i].abs_diff);
    }
    CHECK(weak_worst < 1e-4);
    // Emitter excitation grows monotonically with the drive at fixed detuning.
    for (int i = 0; i < 11; ++i) {
        CHECK(rows[i].max_excitation < rows[11 + i].max_excitation);
        CHECK(rows[11 + i].max_excitation < rows[22 + i].max_excitation);
    }
    CHECK_THROWS_AS(compare_linearization(model, grid, {0.0}, cfg), ConstructionError);
}
