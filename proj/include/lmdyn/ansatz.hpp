// ansatz.hpp — Multi-branch coherent-state trial state and its equations of motion

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmdyn/errors.hpp"
#include "lmdyn/model.hpp"

namespace lmdyn::ansatz {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Trial state Σ_{n,j} A_{nj} |j>|f_n>: M branches, each a system amplitude row
// and a multimode coherent displacement row.
struct DavydovState {
    Matrix amplitudes;     // M x N_S
    Matrix displacements;  // M x N
    double t{0.0};

    int branches() const { return static_cast<int>(amplitudes.rows()); }
    int n_sys() const { return static_cast<int>(amplitudes.cols()); }
    int n_modes() const { return static_cast<int>(displacements.cols()); }
};

// log <f_l|f_n> = Σ_k (f_lk* f_nk - |f_lk|²/2 - |f_nk|²/2)
inline Complex log_overlap(const Matrix& displacements, int l, int n) {
    Complex acc = 0.0;
    for (int k = 0; k < displacements.cols(); ++k) {
        const Complex fl = displacements(l, k);
        const Complex fn = displacements(n, k);
        acc += std::conj(fl) * fn - 0.5 * std::norm(fl) - 0.5 * std::norm(fn);
    }
    return acc;
}

// Coherent-state Gram matrix S_{ln}; exponents are accumulated before the
// single exponentiation so many-mode products cannot under/overflow.
inline Matrix overlap_matrix(const DavydovState& state) {
    const int m = state.branches();
    Matrix s(m, m);
    for (int l = 0; l < m; ++l) {
        s(l, l) = 1.0;
        for (int n = l + 1; n < m; ++n) {
            s(l, n) = std::exp(log_overlap(state.displacements, l, n));
            s(n, l) = std::conj(s(l, n));
        }
    }
    return s;
}

// <D|D> = Σ_j Σ_{ln} A_lj* S_ln A_nj
inline double norm(const DavydovState& state) {
    const Matrix s = overlap_matrix(state);
    const Matrix p = state.amplitudes.conjugate() * state.amplitudes.transpose();
    Complex acc = 0.0;
    for (int l = 0; l < state.branches(); ++l)
        for (int n = 0; n < state.branches(); ++n) acc += s(l, n) * p(l, n);
    return acc.real();
}

// Branch 0 carries the system state over the displaced vacuum; extra branches
// start unpopulated with small seeded displacement offsets so the variational
// metric is invertible from the first step.
inline DavydovState initial_state(const model::ModelSpec& spec, const Vector& psi0, int m,
                                  std::uint64_t seed, double delta_init = 1e-3) {
    if (m < 1) throw InvalidParameter("initial_state: branch count must be >= 1");
    if (psi0.size() != spec.n_sys) throw InvalidParameter("initial_state: psi0 dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-9)
        throw InvalidParameter("initial_state: psi0 must be normalized");

    DavydovState state;
    state.amplitudes = Matrix::Zero(m, spec.n_sys);
    state.displacements = Matrix::Zero(m, spec.n_modes());
    state.amplitudes.row(0) = psi0.transpose();
    std::uint64_t x = seed ? seed : 0x9e3779b97f4a7c15ull;
    auto next_uniform = [&x]() {
        // splitmix64, mapped to [0,1); keeps runs bit-reproducible across toolchains
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    };
    for (int n = 1; n < m; ++n)
        for (int k = 0; k < spec.n_modes(); ++k)
            state.displacements(n, k) =
                std::polar(delta_init, 2.0 * model::kPi * next_uniform());
    return state;
}

// Linear system for the stacked unknowns x = (a_1,...,a_{N_S}, fdot), where
// a_{nj} = Adot_{nj} - A_{nj} Re(Σ_p fdot_{np} f_{np}*). The coefficient matrix
// is the Gram matrix of the tangent directions, so Hermitian PSD; the equation
// reads i * coeff * x = rhs.
struct EomSystem {
    Matrix coeff;
    Vector rhs;
    int m{0};
    int n_sys{0};
    int n_modes{0};
    Matrix amplitudes;     // snapshot used to recover Adot from the solution
    Matrix displacements;
};

inline EomSystem assemble_eom(const DavydovState& state, const model::ModelSpec& spec) {
    const int m = state.branches();
    const int ns = state.n_sys();
    const int nm = state.n_modes();
    if (ns != spec.n_sys || nm != spec.n_modes())
        throw InvalidParameter("assemble_eom: state/spec dimension mismatch");

    const Matrix s = overlap_matrix(state);
    const Matrix& a = state.amplitudes;
    const Matrix& f = state.displacements;
    const Matrix p = a.conjugate() * a.transpose();  // p(l,n) = Σ_j A_lj* A_nj

    const Matrix hs = model::driven_system_hamiltonian(spec, state.t);
    const auto couplings = model::residual_couplings(spec, state.t);

    // Per-branch operator actions: columns are H_S(t) a_n, V_p† a_n, V_p a_n.
    const Matrix hs_a = hs * a.transpose();  // ns x m
    std::vector<Matrix> vdag_a(nm), v_a(nm);
    for (int k = 0; k < nm; ++k) {
        vdag_a[k] = couplings[k].coupling->adjoint() * a.transpose();
        v_a[k] = *couplings[k].coupling * a.transpose();
    }

    const int dim = m * ns + m * nm;
    EomSystem eom;
    eom.m = m;
    eom.n_sys = ns;
    eom.n_modes = nm;
    eom.amplitudes = a;
    eom.displacements = f;
    eom.coeff = Matrix::Zero(dim, dim);
    eom.rhs = Vector::Zero(dim);

    for (int j = 0; j < ns; ++j) eom.coeff.block(j * m, j * m, m, m) = s;

    // Off-diagonal blocks C^{(j)}_{l,(n,p)} = A_nj S_ln f_lp*
    const int fbase = m * ns;
    for (int j = 0; j < ns; ++j)
        for (int l = 0; l < m; ++l)
            for (int n = 0; n < m; ++n)
                for (int pidx = 0; pidx < nm; ++pidx) {
                    const Complex value = a(n, j) * s(l, n) * std::conj(f(l, pidx));
                    eom.coeff(j * m + l, fbase + n * nm + pidx) = value;
                    eom.coeff(fbase + n * nm + pidx, j * m + l) = std::conj(value);
                }

    // D_{(l,k),(n,p)} = p(l,n) (δ_kp + f_lp* f_nk) S_ln
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < nm; ++k)
            for (int n = 0; n < m; ++n)
                for (int pidx = 0; pidx < nm; ++pidx) {
                    Complex value = std::conj(f(l, pidx)) * f(n, k);
                    if (pidx == k) value += 1.0;
                    eom.coeff(fbase + l * nm + k, fbase + n * nm + pidx) = p(l, n) * value * s(l, n);
                }

    // rhs blocks: projections of H'(t) |D> onto <j|<f_l| and onto A_l* <j|<f_l| b_k.
    for (int l = 0; l < m; ++l) {
        for (int n = 0; n < m; ++n) {
            const Complex sln = s(l, n);
            Complex afield = 0.0;  // Σ_j A_lj* (field part acting on branch n)(j)
            for (int j = 0; j < ns; ++j) {
                Complex field = 0.0;
                for (int k = 0; k < nm; ++k) {
                    const Complex c = couplings[k].factor;
                    field += std::conj(c) * f(n, k) * vdag_a[k](j, n) +
                             c * std::conj(f(l, k)) * v_a[k](j, n);
                }
                eom.rhs(j * m + l) += sln * (hs_a(j, n) + field);
                afield += std::conj(a(l, j)) * field;
            }
            Complex asys = 0.0;  // Σ_j A_lj* (H_S(t) a_n)(j)
            for (int j = 0; j < ns; ++j) asys += std::conj(a(l, j)) * hs_a(j, n);
            for (int k = 0; k < nm; ++k) {
                Complex extra = 0.0;  // δ_pk pieces of <f_l| b_k b_p† |f_n>
                for (int j = 0; j < ns; ++j)
                    extra += std::conj(a(l, j)) * couplings[k].factor * v_a[k](j, n);
                eom.rhs(fbase + l * nm + k) += sln * ((asys + afield) * f(n, k) + extra);
            }
        }
    }
    return eom;
}

struct EomSolution {
    Matrix a_dot;  // M x N_S
    Matrix f_dot;  // M x N
};

// Solves i * coeff * x = rhs with a Tikhonov shift relative to the matrix
// scale, escalating tenfold up to 1e-6 before giving up. The consistency
// residual is always measured against the unshifted matrix.
inline EomSolution solve_eom(const EomSystem& eom, double reg = 1e-10) {
    if (reg < 0.0) throw InvalidParameter("solve_eom: regularization must be >= 0");
    const int dim = static_cast<int>(eom.coeff.rows());
    const Vector b = Complex(0.0, -1.0) * eom.rhs;
    const double scale = std::max(eom.coeff.cwiseAbs().maxCoeff(), 1e-300);
    const double bnorm = b.norm();

    Vector x;
    double shift = reg * scale;
    double residual = 0.0;
    double cond = 0.0;
    constexpr double kMaxRelShift = 1e-6;
    for (;;) {
        Matrix shifted = eom.coeff;
        shifted.diagonal().array() += shift;
        Eigen::LDLT<Matrix> ldlt(shifted);
        if (ldlt.info() == Eigen::Success) {
            x = ldlt.solve(b);
            residual = (eom.coeff * x - b).norm();
            const auto d = ldlt.vectorD();
            const double dmax = d.cwiseAbs().maxCoeff();
            const double dmin = d.cwiseAbs().minCoeff();
            cond = dmax / std::max(dmin, 1e-300);
            if (residual <= 1e-7 * (bnorm + scale * x.norm()) + 1e-300) break;
        }
        const double next = (shift == 0.0) ? 1e-10 * scale : 10.0 * shift;
        if (next > kMaxRelShift * scale * (1.0 + 1e-12)) {
            throw SingularSystemError(
                "solve_eom: linear solve failed after regularization escalation "
                "(residual " + std::to_string(residual) + ")",
                cond, residual);
        }
        shift = next;
    }

    const int m = eom.m;
    EomSolution sol;
    sol.a_dot = Matrix(m, eom.n_sys);
    sol.f_dot = Matrix(m, eom.n_modes);
    const int fbase = m * eom.n_sys;
    for (int n = 0; n < m; ++n)
        for (int k = 0; k < eom.n_modes; ++k) sol.f_dot(n, k) = x(fbase + n * eom.n_modes + k);
    for (int n = 0; n < m; ++n) {
        double phase_rate = 0.0;  // Re Σ_p fdot_np f_np*
        for (int k = 0; k < eom.n_modes; ++k)
            phase_rate += (sol.f_dot(n, k) * std::conj(eom.displacements(n, k))).real();
        for (int j = 0; j < eom.n_sys; ++j)
            sol.a_dot(n, j) = x(j * m + n) + eom.amplitudes(n, j) * phase_rate;
    }
    return sol;
}

}  // namespace lmdyn::ansatz
