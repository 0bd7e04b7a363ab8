#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "antires/cavity_modes.hpp"
#include "antires/steady_state.hpp"

using namespace antires;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemModel chain_model(int n, double d, double gamma, const CouplingVector& g_vec,
                        double delta_c = 0.0, double delta_e = 0.0) {
    SystemModel model;
    model.couplings = build_coupling_matrices(make_chain(n, d, gamma));
    model.g_vec = g_vec;
    model.cavity.delta_c = delta_c;
    model.delta_e = delta_e;
    return model;
}

SystemModel single_emitter_model(double g, double gamma) {
    return chain_model(1, 0.1, gamma, coupling_vector_pattern(1, g, Pattern::uniform));
}

}  // namespace

TEST_CASE("interaction matrix assembly") {
    const auto single = single_emitter_model(0.1, 0.05);
    const auto m1 = interaction_matrix(single, 0.3);
    REQUIRE(m1.rows() == 1);
    CHECK_THAT(std::abs(m1(0, 0) - Complex(0.05, 0.3)), WithinAbs(0.0, 1e-15));

    const auto pair = chain_model(2, 0.08, 0.025,
                                  coupling_vector_pattern(2, 0.02, Pattern::uniform));
    const auto m2 = interaction_matrix(pair, 0.0);
    const double g12 = pair.couplings.gamma_matrix(0, 1);
    const double o12 = pair.couplings.omega(0, 1);
    CHECK(m2(0, 0) == Complex(0.025, 0.0));
    CHECK_THAT(std::abs(m2(0, 1) - Complex(g12, o12)), WithinAbs(0.0, 1e-15));
    CHECK(m2(0, 1) == m2(1, 0));
}

TEST_CASE("two-emitter interaction eigenvalues split into collective branches") {
    const auto pair = chain_model(2, 0.1, 0.025,
                                  coupling_vector_pattern(2, 0.02, Pattern::uniform));
    const double delta_e = 0.17;
    const double g12 = pair.couplings.gamma_matrix(0, 1);
    const double o12 = pair.couplings.omega(0, 1);
    const Eigen::MatrixXcd m = interaction_matrix(pair, delta_e);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
    std::array<Complex, 2> got{es.eigenvalues()[0], es.eigenvalues()[1]};
    std::array<Complex, 2> want{Complex(0.025 + g12, delta_e + o12),
                                Complex(0.025 - g12, delta_e - o12)};
    std::sort(got.begin(), got.end(), [](auto a, auto b) { return a.real() < b.real(); });
    std::sort(want.begin(), want.end(), [](auto a, auto b) { return a.real() < b.real(); });
    for (int i = 0; i < 2; ++i) CHECK_THAT(std::abs(got[i] - want[i]), WithinAbs(0.0, 1e-12));
}

TEST_CASE("single emitter effective response is the bare emitter") {
    const auto model = single_emitter_model(0.1, 0.05);
    for (const double delta : {-2.0, -0.3, 0.0, 0.7, 5.0}) {
        const auto r = effective_response(model, delta);
        CHECK_THAT(r.delta_eff, WithinAbs(delta, 1e-13));
        CHECK_THAT(r.gamma_eff, WithinAbs(0.05, 1e-13));
    }
}

TEST_CASE("opposite coupling with zeroed shifts gives the subradiant linewidth") {
    // By hand for N = 2, omega = 0, delta_e = 0: M = [[gamma, gamma12], [gamma12, gamma]],
    // and G = (g, -g) picks the antisymmetric eigenvalue gamma - gamma12.
    auto model = chain_model(2, 0.02, 0.025,
                             coupling_vector_pattern(2, 0.02, Pattern::alternating));
    model.couplings.omega.setZero();
    const auto r = effective_response(model, 0.0);
    const double expected = 0.025 - model.couplings.gamma_matrix(0, 1);
    CHECK_THAT(r.gamma_eff, WithinRel(expected, 1e-10));
    CHECK_THAT(r.delta_eff, WithinAbs(0.0, 1e-12));
}

TEST_CASE("uniform coupling approaches the superradiant linewidth as d -> 0") {
    auto model = chain_model(2, 0.001, 0.025,
                             coupling_vector_pattern(2, 0.02, Pattern::uniform));
    // For uniform coupling the response follows the symmetric eigenvalue at any detuning.
    const auto r = effective_response(model, -model.couplings.omega(0, 1));
    CHECK_THAT(r.gamma_eff, WithinRel(0.025 + model.couplings.gamma_matrix(0, 1), 1e-10));
    CHECK(r.gamma_eff > 1.99 * 0.025);
}

TEST_CASE("decoupled emitters degrade the field to the bare cavity") {
    SystemModel empty;
    empty.cavity.eta = 0.3;
    CHECK_THAT(std::abs(cavity_field(empty) - Complex(0.3, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(effective_response(empty, 0.0), NumericalError);

    auto dark = single_emitter_model(0.1, 0.05);
    dark.g_vec.g[0] = 0.0;
    const auto p = transmission_point(dark);
    CHECK(p.flag == PointFlag::decoupled);
    CHECK_THAT(p.T, WithinRel(1.0, 1e-12));
}

TEST_CASE("single emitter transmission at resonance and in the wings") {
    // g = kappa/10 = 2 gamma: C = 0.2 and t(0) = 1 / 1.2.
    auto model = single_emitter_model(0.1, 0.05);
    const auto p0 = transmission_point(model);
    CHECK_THAT(p0.t.real(), WithinRel(1.0 / 1.2, 1e-12));
    CHECK_THAT(p0.t.imag(), WithinAbs(0.0, 1e-12));
    CHECK_THAT(p0.phase_rel, WithinAbs(0.0, 1e-12));

    const double depth = 0.2 * (0.2 + 2.0) / (1.2 * 1.2);
    CHECK_THAT(1.0 - p0.T, WithinRel(depth, 1e-12));

    model.delta_e = model.cavity.delta_c = 500.0;
    const auto far = transmission_point(model);
    CHECK_THAT(std::abs(far.t - 1.0 / Complex(1.0, 500.0)), WithinAbs(0.0, 1e-6));
    CHECK_THAT(far.phase, WithinAbs(-0.5 * std::numbers::pi, 5e-3));
}

TEST_CASE("bare cavity line shape") {
    SystemModel bare;
    bare.cavity.delta_c = 1.0;
    const auto p = transmission_point(bare);
    CHECK_THAT(p.T, WithinRel(0.5, 1e-12));
    CHECK_THAT(p.phase, WithinRel(-std::numbers::pi / 4.0, 1e-12));
    CHECK_THAT(p.phase_rel, WithinAbs(0.0, 1e-15));
}

TEST_CASE("closed form equals the one-emitter matrix path") {
    const double g = 0.1, gamma = 0.05;
    auto model = single_emitter_model(g, gamma);
    const auto grid = linspace(-5.0, 5.0, 101);
    const auto scan = scan_spectrum(model, grid, SweepMode::both);
    double worst = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        const Complex closed = single_emitter_transmission(g, gamma, 1.0, grid[i]);
        worst = std::max(worst, std::abs(closed - scan.points[i].t));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("single emitter closed form special points") {
    CHECK_THAT(std::abs(single_emitter_transmission(0.1, 0.05, 1.0, 0.0) - Complex(1.0 / 1.2)),
               WithinAbs(0.0, 1e-14));
    const Complex bare = single_emitter_transmission(0.0, 0.05, 1.0, 0.7);
    CHECK_THAT(std::abs(bare - 1.0 / Complex(1.0, 0.7)), WithinAbs(0.0, 1e-14));
    const double delta = 0.05 * std::sqrt(1.2);
    auto model = single_emitter_model(0.1, 0.05);
    model.delta_e = model.cavity.delta_c = delta;
    CHECK_THAT(std::abs(single_emitter_transmission(0.1, 0.05, 1.0, delta) -
                        transmission_point(model).t),
               WithinAbs(0.0, 1e-14));
    CHECK_THROWS_AS(single_emitter_transmission(0.1, -1.0, 1.0, 0.0), ConstructionError);
}

TEST_CASE("scan grid validation and dip location") {
    auto model = single_emitter_model(0.1, 0.05);
    CHECK_THROWS_AS(scan_spectrum(model, {}, SweepMode::both), ConstructionError);
    CHECK_THROWS_AS(scan_spectrum(model, {0.0, 0.0}, SweepMode::both), ConstructionError);

    // The antiresonance sits on top of the scanned cavity line, so it is the
    // maximum of the background-subtracted profile, symmetric about zero.
    const auto scan = scan_spectrum(model, linspace(-5.0, 5.0, 2001), SweepMode::both);
    double best_depth = -1.0, best_delta = -1.0;
    for (const auto& p : scan.points) {
        const double bare = 1.0 / (p.delta * p.delta + 1.0);
        if (bare - p.T > best_depth) {
            best_depth = bare - p.T;
            best_delta = p.delta;
        }
    }
    CHECK_THAT(best_delta, WithinAbs(0.0, 1e-12));
}

TEST_CASE("ten-emitter chain with alternating coupling shows several collective dips") {
    SystemModel model = chain_model(10, 0.08, 0.025,
                                    coupling_vector_pattern(10, 0.02, Pattern::alternating));
    const auto scan = scan_spectrum(model, linspace(-0.6, 0.6, 4001), SweepMode::laser, 0.0, 2);
    int dips = 0;
    for (size_t i = 1; i + 1 < scan.points.size(); ++i) {
        const double l = scan.points[i - 1].T, c = scan.points[i].T, r = scan.points[i + 1].T;
        if (c < l && c < r && c < 0.98) ++dips;
    }
    CHECK(dips >= 2);
}

TEST_CASE("spectrum points are invariant under a simultaneous permutation") {
    SystemModel model = chain_model(5, 0.11, 0.03,
                                    coupling_vector_pattern(5, 0.017, Pattern::alternating));
    std::mt19937 rng(42);
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    SystemModel shuffled = model;
    for (int i = 0; i < 5; ++i) {
        shuffled.g_vec.g[i] = model.g_vec.g[perm[i]];
        for (int j = 0; j < 5; ++j) {
            shuffled.couplings.omega(i, j) = model.couplings.omega(perm[i], perm[j]);
            shuffled.couplings.gamma_matrix(i, j) = model.couplings.gamma_matrix(perm[i], perm[j]);
        }
    }
    for (const double delta : {-0.21, 0.0, 0.043, 0.3}) {
        SystemModel a = model, b = shuffled;
        a.delta_e = b.delta_e = delta;
        a.cavity.delta_c = b.cavity.delta_c = delta;
        const auto pa = transmission_point(a);
        const auto pb = transmission_point(b);
        CHECK_THAT(std::abs(pa.t - pb.t), WithinAbs(0.0, 1e-12));
        CHECK_THAT(pa.gamma_eff, WithinAbs(pb.gamma_eff, 1e-12));
        CHECK_THAT(pa.delta_eff, WithinAbs(pb.delta_eff, 1e-12));
    }
}

TEST_CASE("drive linearity and sign invariance of the coupling vector") {
    SystemModel model = chain_model(3, 0.2, 0.04,
                                    coupling_vector_pattern(3, 0.05, Pattern::uniform));
    model.cavity.eta = 0.7;
    const Complex a1 = cavity_field(model);
    SystemModel doubled = model;
    doubled.cavity.eta = 1.4;
    CHECK_THAT(std::abs(cavity_field(doubled) - 2.0 * a1), WithinAbs(0.0, 1e-15));

    SystemModel flipped = model;
    flipped.g_vec.g = -flipped.g_vec.g;
    CHECK_THAT(std::abs(cavity_field(flipped) - a1), WithinAbs(0.0, 1e-15));
    const auto pf = transmission_point(flipped);
    const auto pm = transmission_point(model);
    CHECK(pf.T == pm.T);
}

TEST_CASE("passivity and non-negative effective linewidth on a collective scan") {
    SystemModel model = chain_model(6, 0.09, 0.025,
                                    coupling_vector_pattern(6, 0.02, Pattern::alternating));
    const auto scan = scan_spectrum(model, linspace(-0.8, 0.8, 1501), SweepMode::both);
    for (const auto& p : scan.points) {
        REQUIRE(p.flag != PointFlag::failed);
        CHECK(p.T <= 1.0 + 1e-9);
        CHECK(p.gamma_eff >= -1e-10);
        CHECK(p.phase > -std::numbers::pi - 1e-15);
        CHECK(p.phase <= std::numbers::pi + 1e-15);
    }
}

TEST_CASE("effective cooperativity limits") {
    const auto single = single_emitter_model(0.1, 0.05);
    for (const double delta : {-1.0, 0.0, 2.0})
        CHECK_THAT(effective_cooperativity(single, delta), WithinRel(0.2, 1e-12));

    auto pair = chain_model(2, 0.001, 0.025,
                            coupling_vector_pattern(2, 0.02, Pattern::alternating));
    pair.couplings.omega.setZero();
    const double c_single = 0.02 * 0.02 / 0.025;
    CHECK(effective_cooperativity(pair, 0.0) > 1e4 * c_single);
}
