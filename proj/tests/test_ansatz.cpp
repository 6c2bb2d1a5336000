#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "lmdyn/ansatz.hpp"
#include "lmdyn/model.hpp"
#include "lmdyn/observables.hpp"

using namespace lmdyn;
using Catch::Approx;
using Complex = std::complex<double>;

namespace {

Eigen::VectorXcd ground(int dim) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v(0) = 1.0;
    return v;
}

// A populated multi-branch state away from the initial configuration, built
// deterministically without running the integrator.
ansatz::DavydovState populated_state(const model::ModelSpec& spec, int m, unsigned salt = 0) {
    ansatz::DavydovState state;
    state.amplitudes = Eigen::MatrixXcd(m, spec.n_sys);
    state.displacements = Eigen::MatrixXcd(m, spec.n_modes());
    state.t = 0.37;
    double x = 0.1 + 0.01 * salt;
    auto next = [&x]() {
        x = std::fmod(4.0 * x * (1.0 - x) + 0.0137, 1.0);
        return x;
    };
    for (int n = 0; n < m; ++n) {
        for (int j = 0; j < spec.n_sys; ++j)
            state.amplitudes(n, j) = Complex(next() - 0.5, next() - 0.5);
        for (int k = 0; k < spec.n_modes(); ++k)
            state.displacements(n, k) = 0.4 * Complex(next() - 0.5, next() - 0.5);
    }
    const double nrm = std::sqrt(ansatz::norm(state));
    state.amplitudes /= nrm;
    return state;
}

}  // namespace

TEST_CASE("single-branch initial state is the bare system state", "[ansatz]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.1, 2.0);
    const auto state = ansatz::initial_state(spec, ground(2), 1, 0);
    CHECK(state.amplitudes(0, 0) == Complex(1.0, 0.0));
    CHECK(state.amplitudes(0, 1) == Complex(0.0, 0.0));
    CHECK(state.displacements(0, 0) == Complex(0.0, 0.0));
    CHECK(ansatz::norm(state) == Approx(1.0).margin(1e-15));
}

TEST_CASE("extra branches keep the norm exactly one", "[ansatz]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.1, 2.0);
    const auto state = ansatz::initial_state(spec, ground(2), 2, 7);
    CHECK(ansatz::norm(state) == Approx(1.0).margin(1e-15));
    CHECK(obs::population(state, 0) == Approx(1.0).margin(1e-15));
    CHECK(std::abs(state.displacements(1, 0)) == Approx(1e-3));
    // seeded draws are reproducible
    const auto again = ansatz::initial_state(spec, ground(2), 2, 7);
    CHECK(state.displacements(1, 0) == again.displacements(1, 0));
}

TEST_CASE("unnormalized system states are rejected", "[ansatz]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.1, 2.0);
    Eigen::VectorXcd bad(2);
    bad << 1.0, 1.0;
    CHECK_THROWS_AS(ansatz::initial_state(spec, bad, 1, 0), InvalidParameter);
}

TEST_CASE("overlap matrix reproduces the direct two-branch value", "[ansatz]") {
    ansatz::DavydovState state;
    state.amplitudes = Eigen::MatrixXcd::Zero(2, 2);
    state.displacements = Eigen::MatrixXcd::Zero(2, 1);
    state.displacements(1, 0) = 0.1;
    const auto s = ansatz::overlap_matrix(state);
    CHECK(s(0, 0) == Complex(1.0, 0.0));
    CHECK(s(1, 1) == Complex(1.0, 0.0));
    CHECK(s(0, 1).real() == Approx(std::exp(-0.005)).epsilon(1e-12));
    CHECK(s(0, 1).imag() == Approx(0.0).margin(1e-15));
}

TEST_CASE("overlap matrix is Hermitian, unit-diagonal, and PSD", "[ansatz]") {
    const auto spec = model::build_multimode_rabi(1.0, {{1.0, 0.1, 2.0, 0.0},
                                                        {1.4, 0.05, 1.0, 0.2}});
    const auto state = populated_state(spec, 4);
    const auto s = ansatz::overlap_matrix(state);
    CHECK((s - s.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    for (int n = 0; n < 4; ++n) CHECK(s(n, n) == Complex(1.0, 0.0));
    // independent elementwise evaluation
    for (int l = 0; l < 4; ++l)
        for (int n = 0; n < 4; ++n) {
            Complex expo = 0.0;
            for (int k = 0; k < 2; ++k) {
                const Complex fl = state.displacements(l, k);
                const Complex fn = state.displacements(n, k);
                expo += std::conj(fl) * fn - 0.5 * (std::norm(fl) + std::norm(fn));
            }
            CHECK(std::abs(s(l, n) - std::exp(expo)) < 1e-14);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(s);
    CHECK(solver.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("assembled coefficient matrix is Hermitian", "[ansatz]") {
    const auto spec = model::build_multimode_rabi(1.0, {{1.0, 0.1, 2.0, 0.0},
                                                        {1.4, 0.05, 1.0, 0.2}});
    const auto state = populated_state(spec, 3);
    const auto eom = ansatz::assemble_eom(state, spec);
    const double scale = eom.coeff.cwiseAbs().maxCoeff();
    CHECK((eom.coeff - eom.coeff.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("decoupled single branch keeps the vacuum at rest", "[ansatz]") {
    auto spec = model::build_jc(1.0, 1.0, 0.0, 0.0);
    const auto state = ansatz::initial_state(spec, ground(2), 1, 0);
    const auto eom = ansatz::assemble_eom(state, spec);
    for (int i = 2; i < 3; ++i) CHECK(std::abs(eom.rhs(i)) < 1e-15);
    const auto sol = ansatz::solve_eom(eom);
    CHECK(sol.f_dot.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single branch at the origin obeys the bare Schrodinger equation", "[ansatz]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.05, 10.0);
    Eigen::VectorXcd psi0(2);
    psi0 << std::sqrt(0.7), std::sqrt(0.3);
    const auto state = ansatz::initial_state(spec, psi0, 1, 0);
    const Eigen::MatrixXcd h0 = model::driven_system_hamiltonian(spec, 0.0);
    const Eigen::VectorXcd expected = Complex(0.0, -1.0) * (h0 * psi0);
    const auto exact = ansatz::solve_eom(ansatz::assemble_eom(state, spec), 0.0);
    const auto shifted = ansatz::solve_eom(ansatz::assemble_eom(state, spec));
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(exact.a_dot(0, j) - expected(j)) < 1e-13);
        // the default Tikhonov shift costs ~1e-10 relative accuracy
        CHECK(std::abs(shifted.a_dot(0, j) - expected(j)) < 1e-9);
    }
}

TEST_CASE("identity system solves to the right-hand side", "[ansatz]") {
    ansatz::EomSystem eom;
    eom.m = 2;
    eom.n_sys = 1;
    eom.n_modes = 1;
    eom.amplitudes = Eigen::MatrixXcd::Zero(2, 1);
    eom.displacements = Eigen::MatrixXcd::Zero(2, 1);
    eom.coeff = Eigen::MatrixXcd::Identity(4, 4);
    eom.rhs = Eigen::VectorXcd(4);
    eom.rhs << Complex(1.0, 0.0), Complex(0.0, 2.0), Complex(-1.0, 1.0), Complex(0.5, 0.0);
    const auto sol = ansatz::solve_eom(eom, 0.0);
    // i x = rhs, and with zero amplitudes the a block is the Adot block
    CHECK(std::abs(sol.a_dot(0, 0) - Complex(0.0, -1.0)) < 1e-14);
    CHECK(std::abs(sol.a_dot(1, 0) - Complex(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(sol.f_dot(0, 0) - Complex(1.0, 1.0)) < 1e-14);
    CHECK(std::abs(sol.f_dot(1, 0) - Complex(0.0, -0.5)) < 1e-14);
}

TEST_CASE("duplicate branches yield a consistent singular system", "[ansatz]") {
    const auto spec = model::build_jc(1.0, 1.0, 0.05, 10.0);
    ansatz::DavydovState state;
    state.amplitudes = Eigen::MatrixXcd(2, 2);
    state.displacements = Eigen::MatrixXcd(2, 1);
    // two identical branches sharing the weight: S_12 = 1, rank-deficient metric
    state.amplitudes << 0.5, 0.0, 0.5, 0.0;
    state.displacements << Complex(0.2, 0.1), Complex(0.2, 0.1);
    CHECK(ansatz::norm(state) == Approx(1.0).margin(1e-12));

    const auto eom = ansatz::assemble_eom(state, spec);
    const auto sol = ansatz::solve_eom(eom, 1e-10);
    CHECK(sol.a_dot.allFinite());
    CHECK(sol.f_dot.allFinite());
    // residual of the linear system stays small despite the rank deficiency
    Eigen::VectorXcd x(6);
    for (int n = 0; n < 2; ++n) {
        double rate = (sol.f_dot(n, 0) * std::conj(state.displacements(n, 0))).real();
        for (int j = 0; j < 2; ++j) x(j * 2 + n) = sol.a_dot(n, j) - state.amplitudes(n, j) * rate;
        x(4 + n) = sol.f_dot(n, 0);
    }
    const Eigen::VectorXcd b = Complex(0.0, -1.0) * eom.rhs;
    CHECK((eom.coeff * x - b).norm() <= 1e-7 * (b.norm() + 1.0));
}

TEST_CASE("solved derivatives satisfy the projected equations independently", "[ansatz]") {
    const auto spec = model::build_multimode_rabi(1.0, {{1.0, 0.1, 2.0, 0.0},
                                                        {1.4, 0.05, 1.0, 0.2}});
    const auto state = populated_state(spec, 3, 5);
    const auto eom = ansatz::assemble_eom(state, spec);
    const auto sol = ansatz::solve_eom(eom, 1e-12);

    const int m = 3, ns = 2, nm = 2;
    const auto s = ansatz::overlap_matrix(state);
    const auto& a = state.amplitudes;
    const auto& f = state.displacements;
    const Eigen::MatrixXcd hs = model::driven_system_hamiltonian(spec, state.t);
    const auto couplings = model::residual_couplings(spec, state.t);

    // a_{nj} recovered from the returned derivatives
    Eigen::MatrixXcd small_a(m, ns);
    for (int n = 0; n < m; ++n) {
        double rate = 0.0;
        for (int k = 0; k < nm; ++k) rate += (sol.f_dot(n, k) * std::conj(f(n, k))).real();
        for (int j = 0; j < ns; ++j) small_a(n, j) = sol.a_dot(n, j) - a(n, j) * rate;
    }

    double max_residual = 0.0;
    double rhs_scale = 0.0;
    for (int l = 0; l < m; ++l)
        for (int j = 0; j < ns; ++j) {
            // <j|<f_l| i d/dt |D> from first principles
            Complex lhs = 0.0;
            for (int n = 0; n < m; ++n) {
                Complex inner = small_a(n, j);
                for (int k = 0; k < nm; ++k)
                    inner += a(n, j) * std::conj(f(l, k)) * sol.f_dot(n, k);
                lhs += Complex(0.0, 1.0) * inner * s(l, n);
            }
            // <j|<f_l| H'(t) |D>
            Complex rhs = 0.0;
            for (int n = 0; n < m; ++n) {
                Complex inner = 0.0;
                for (int i = 0; i < ns; ++i) {
                    inner += hs(j, i) * a(n, i);
                    for (int k = 0; k < nm; ++k) {
                        const Complex c = couplings[k].factor;
                        const Eigen::MatrixXcd& v = *couplings[k].coupling;
                        inner += std::conj(c) * std::conj(v(i, j)) * a(n, i) * f(n, k) +
                                 c * v(j, i) * a(n, i) * std::conj(f(l, k));
                    }
                }
                rhs += inner * s(l, n);
            }
            max_residual = std::max(max_residual, std::abs(lhs - rhs));
            rhs_scale = std::max(rhs_scale, std::abs(rhs));
        }
    CHECK(max_residual <= 1e-8 * std::max(rhs_scale, 1.0));
}

TEST_CASE("norm resolves duplicate branches through the overlap", "[ansatz]") {
    ansatz::DavydovState state;
    state.amplitudes = Eigen::MatrixXcd(2, 2);
    state.amplitudes << 0.5, 0.0, 0.5, 0.0;
    state.displacements = Eigen::MatrixXcd::Zero(2, 1);
    state.displacements << Complex(0.3, -0.2), Complex(0.3, -0.2);
    CHECK(ansatz::norm(state) == Approx(1.0).margin(1e-14));
}
