#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "lmdyn/model.hpp"

using namespace lmdyn;
using Catch::Approx;

namespace {
constexpr double kAlphaSq = 1e5;
const double kAlpha = std::sqrt(kAlphaSq);
}  // namespace

TEST_CASE("jc builder fixes the drive amplitude through g|alpha|", "[model]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.5 / kAlpha, kAlpha);
    REQUIRE(spec.n_sys == 2);
    REQUIRE(spec.modes.size() == 1);
    CHECK(spec.modes[0].rabi_frequency() == Approx(0.5).epsilon(1e-14));
    CHECK(spec.modes[0].rwa);
    // lowering operator in the (ground, excited) ordering
    CHECK(spec.modes[0].coupling(0, 1) == std::complex<double>(1.0, 0.0));
    CHECK(spec.modes[0].coupling(1, 0) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("jc system Hamiltonian has the two-level spectrum", "[model]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.01, 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(spec.h_sys);
    CHECK(solver.eigenvalues()(0) == Approx(-0.5));
    CHECK(solver.eigenvalues()(1) == Approx(0.5));
}

TEST_CASE("decoupled jc model has zero interaction", "[model]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.0, 0.0);
    CHECK(spec.modes[0].rabi_frequency() == 0.0);
    const auto h = model::driven_system_hamiltonian(spec, 3.7);
    CHECK((h - spec.h_sys).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nonpositive frequencies are rejected", "[model]") {
    CHECK_THROWS_AS(model::build_jc(0.0, 1.0, 0.1, 1.0), InvalidParameter);
    CHECK_THROWS_AS(model::build_jc(1.0, -1.0, 0.1, 1.0), InvalidParameter);
    CHECK_THROWS_AS(model::build_rabi(-0.5, 1.0, 0.1, 1.0), InvalidParameter);
}

TEST_CASE("rabi coupling operator squares to the identity", "[model]") {
    const auto spec = model::build_rabi(1.0, 1.0, 0.2, std::sqrt(5.0));
    const Eigen::MatrixXcd sq = spec.modes[0].coupling * spec.modes[0].coupling;
    CHECK((sq - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_FALSE(spec.modes[0].rwa);
}

TEST_CASE("multimode rabi builder covers the resonant two-mode setup", "[model]") {
    std::vector<model::ModeParams> modes{{0.6449, 0.3 / kAlpha, kAlpha, 0.0},
                                         {0.8449, 0.3 / kAlpha, kAlpha, 0.0}};
    const auto spec = model::build_multimode_rabi(1.0, modes);
    REQUIRE(spec.n_modes() == 2);
    CHECK(spec.modes[0].rabi_frequency() == Approx(0.3));
    CHECK(spec.modes[1].rabi_frequency() == Approx(0.3));
    CHECK_THROWS_AS(model::build_multimode_rabi(1.0, {}), InvalidParameter);
}

TEST_CASE("single-mode multimode build matches the rabi builder", "[model]") {
    const auto a = model::build_multimode_rabi(1.0, {{1.0, 0.06, 5.0, 0.1}});
    const auto b = model::build_rabi(1.0, 1.0, 0.06, 5.0, 0.1);
    CHECK((a.h_sys - b.h_sys).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.modes[0].coupling - b.modes[0].coupling).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.modes[0].phi == b.modes[0].phi);
}

TEST_CASE("dicke model reduces to rabi for one qubit", "[model]") {
    const auto dicke = model::build_dicke({1.0}, 1.0, 0.1, 3.0, 0.2);
    const auto rabi = model::build_rabi(1.0, 1.0, 0.1, 3.0, 0.2);
    CHECK((dicke.h_sys - rabi.h_sys).cwiseAbs().maxCoeff() == 0.0);
    CHECK((dicke.modes[0].coupling - rabi.modes[0].coupling).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dicke system Hamiltonian is traceless and additive", "[model]") {
    const auto spec = model::build_dicke({1.0, 1.3, 0.7}, 1.0, 0.05, 10.0);
    REQUIRE(spec.n_sys == 8);
    CHECK(std::abs(spec.h_sys.trace()) < 1e-14);
    // coupling is the sum of three single-qubit flips: row sums of |V| equal 3
    CHECK(spec.modes[0].coupling.cwiseAbs().rowwise().sum().maxCoeff() == Approx(3.0));
    CHECK_THROWS_AS(model::build_dicke(std::vector<double>(9, 1.0), 1.0, 0.1, 1.0),
                    CapacityError);
}

TEST_CASE("identical-qubit dicke matches the figure parameters", "[model]") {
    const auto spec = model::build_dicke({1.0, 1.0}, 1.0, 0.5 / kAlpha, kAlpha);
    CHECK(spec.modes[0].rabi_frequency() == Approx(0.5));
    CHECK(spec.n_sys == 4);
}

TEST_CASE("driven Hamiltonian at t=0 adds the transverse drive", "[model]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.5 / kAlpha, kAlpha);
    const auto h = model::driven_system_hamiltonian(spec, 0.0);
    const Eigen::MatrixXcd expected = spec.h_sys + 0.25 * model::pauli::sx();
    CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("driven Hamiltonian stays Hermitian at random times", "[model]") {
    const auto spec = model::build_dicke({1.0, 1.2}, 0.9, 0.03, 7.0, 0.4);
    for (double t : {0.0, 0.318, 2.71, 55.5, 412.0}) {
        const auto h = model::driven_system_hamiltonian(spec, t);
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * h.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("driven Hamiltonian is periodic in the mode period", "[model]") {
    const auto spec = model::build_rabi(1.0, 0.77, 0.1, 4.0, 0.3);
    const double period = 2.0 * model::kPi / 0.77;
    for (double t : {0.1, 1.7, 9.4}) {
        const auto h1 = model::driven_system_hamiltonian(spec, t);
        const auto h2 = model::driven_system_hamiltonian(spec, t + period);
        CHECK((h1 - h2).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("residual couplings are pure phases of constant magnitude", "[model]") {
    const auto spec = model::build_multimode_rabi(1.0, {{1.0, 0.04, 5.0, 0.0},
                                                        {1.3, 0.08, 2.0, 0.1}});
    const auto at_zero = model::residual_couplings(spec, 0.0);
    CHECK(at_zero[0].factor == std::complex<double>(0.02, 0.0));
    CHECK(at_zero[1].factor == std::complex<double>(0.04, 0.0));
    for (double t : {0.9, 17.3}) {
        const auto c = model::residual_couplings(spec, t);
        CHECK(std::abs(c[0].factor) == Approx(0.02));
        CHECK(std::abs(c[1].factor) == Approx(0.04));
        CHECK(c[0].coupling == &spec.modes[0].coupling);
    }
}
