// model.hpp — Light-matter model specifications and canonical model builders

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lmdyn/errors.hpp"

namespace lmdyn::model {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

constexpr double kPi = 3.14159265358979323846;

// One bosonic mode: frequency, coupling constant, initial coherent amplitude
// (modulus and phase), and the system-side coupling operator V.
// `rwa` marks a lowering-type operator (V != V†); otherwise V is Hermitian.
struct ModeSpec {
    double omega{1.0};
    double g{0.0};
    double alpha_abs{0.0};
    double phi{0.0};
    Matrix coupling;
    bool rwa{false};

    // Ω = g|α|, the drive amplitude surviving the semiclassical limit.
    double rabi_frequency() const { return g * alpha_abs; }
    // Initial coherent amplitude α = |α| e^{-iφ}.
    Complex alpha() const { return std::polar(alpha_abs, -phi); }
};

// Immutable description of a quantum system coupled to N coherent-state modes.
struct ModelSpec {
    int n_sys{0};
    Matrix h_sys;
    std::vector<ModeSpec> modes;
    std::vector<std::string> basis_labels;

    int n_modes() const { return static_cast<int>(modes.size()); }
};

namespace pauli {

// Basis ordering (|1>, |2>) with |1> the ground state, so σz = diag(-1, +1).
inline Matrix sz() {
    Matrix m(2, 2);
    m << -1.0, 0.0, 0.0, 1.0;
    return m;
}

inline Matrix sx() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

// Lowering operator |1><2|.
inline Matrix sminus() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 0.0, 0.0;
    return m;
}

}  // namespace pauli

inline bool is_hermitian(const Matrix& m, double tol) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline void validate(const ModelSpec& spec) {
    if (spec.n_sys < 1) throw InvalidParameter("model: system dimension must be >= 1");
    if (spec.h_sys.rows() != spec.n_sys || spec.h_sys.cols() != spec.n_sys)
        throw InvalidParameter("model: H_S dimension mismatch");
    if (!is_hermitian(spec.h_sys, 1e-12)) throw InvalidParameter("model: H_S is not Hermitian");
    if (spec.modes.empty()) throw InvalidParameter("model: at least one mode required");
    for (const auto& mode : spec.modes) {
        if (!(mode.omega > 0.0)) throw InvalidParameter("model: mode frequency must be positive");
        if (mode.g < 0.0) throw InvalidParameter("model: coupling must be non-negative");
        if (mode.alpha_abs < 0.0) throw InvalidParameter("model: |alpha| must be non-negative");
        if (!std::isfinite(mode.rabi_frequency()))
            throw InvalidParameter("model: non-finite drive amplitude g|alpha|");
        if (mode.coupling.rows() != spec.n_sys || mode.coupling.cols() != spec.n_sys)
            throw InvalidParameter("model: coupling operator dimension mismatch");
    }
}

// Jaynes-Cummings model: two-level system, one mode, V = σ- (excitation conserving).
inline ModelSpec build_jc(double omega0, double omega, double g, double alpha_abs,
                          double phi = 0.0) {
    if (!(omega0 > 0.0) || !(omega > 0.0))
        throw InvalidParameter("build_jc: frequencies must be positive");
    ModelSpec spec;
    spec.n_sys = 2;
    spec.h_sys = 0.5 * omega0 * pauli::sz();
    spec.basis_labels = {"1", "2"};
    ModeSpec mode;
    mode.omega = omega;
    mode.g = g;
    mode.alpha_abs = alpha_abs;
    mode.phi = phi;
    mode.coupling = pauli::sminus();
    mode.rwa = true;
    spec.modes.push_back(std::move(mode));
    validate(spec);
    return spec;
}

// Quantum Rabi model: as JC but V = σx, keeping the counter-rotating terms.
inline ModelSpec build_rabi(double omega0, double omega, double g, double alpha_abs,
                            double phi = 0.0) {
    if (!(omega0 > 0.0) || !(omega > 0.0))
        throw InvalidParameter("build_rabi: frequencies must be positive");
    ModelSpec spec;
    spec.n_sys = 2;
    spec.h_sys = 0.5 * omega0 * pauli::sz();
    spec.basis_labels = {"1", "2"};
    ModeSpec mode;
    mode.omega = omega;
    mode.g = g;
    mode.alpha_abs = alpha_abs;
    mode.phi = phi;
    mode.coupling = pauli::sx();
    mode.rwa = false;
    spec.modes.push_back(std::move(mode));
    validate(spec);
    return spec;
}

struct ModeParams {
    double omega{1.0};
    double g{0.0};
    double alpha_abs{0.0};
    double phi{0.0};
};

// Two-level system coupled to several modes, all through σx.
inline ModelSpec build_multimode_rabi(double omega0, const std::vector<ModeParams>& modes) {
    if (!(omega0 > 0.0)) throw InvalidParameter("build_multimode_rabi: omega0 must be positive");
    if (modes.empty()) throw InvalidParameter("build_multimode_rabi: empty mode list");
    ModelSpec spec;
    spec.n_sys = 2;
    spec.h_sys = 0.5 * omega0 * pauli::sz();
    spec.basis_labels = {"1", "2"};
    for (const auto& p : modes) {
        ModeSpec mode;
        mode.omega = p.omega;
        mode.g = p.g;
        mode.alpha_abs = p.alpha_abs;
        mode.phi = p.phi;
        mode.coupling = pauli::sx();
        mode.rwa = false;
        spec.modes.push_back(std::move(mode));
    }
    validate(spec);
    return spec;
}

// Operator of qubit j (0-based) in an N_q-qubit register; qubit 0 is the
// most significant Kronecker factor.
inline Matrix qubit_operator(const Matrix& op, int j, int n_qubits) {
    Matrix result = Matrix::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
        const Matrix& factor = (q == j) ? op : Matrix::Identity(2, 2);
        Matrix next(result.rows() * factor.rows(), result.cols() * factor.cols());
        for (Eigen::Index r = 0; r < result.rows(); ++r)
            for (Eigen::Index c = 0; c < result.cols(); ++c)
                next.block(r * factor.rows(), c * factor.cols(), factor.rows(), factor.cols()) =
                    result(r, c) * factor;
        result.swap(next);
    }
    return result;
}

// Dicke model: N_q qubits with transition frequencies omega0_list, one mode,
// V = Σ_j σx_j so the interaction is (g/2)(b + b†) Σ_j σx_j.
inline ModelSpec build_dicke(const std::vector<double>& omega0_list, double omega, double g,
                             double alpha_abs, double phi = 0.0, int max_qubits = 8) {
    if (omega0_list.empty()) throw InvalidParameter("build_dicke: need at least one qubit");
    const int n_q = static_cast<int>(omega0_list.size());
    if (n_q > max_qubits) throw CapacityError("build_dicke: qubit count exceeds capacity limit");
    if (!(omega > 0.0)) throw InvalidParameter("build_dicke: mode frequency must be positive");
    for (double w : omega0_list)
        if (!(w > 0.0)) throw InvalidParameter("build_dicke: qubit frequencies must be positive");

    const int dim = 1 << n_q;
    ModelSpec spec;
    spec.n_sys = dim;
    spec.h_sys = Matrix::Zero(dim, dim);
    Matrix coupling = Matrix::Zero(dim, dim);
    for (int j = 0; j < n_q; ++j) {
        spec.h_sys += 0.5 * omega0_list[j] * qubit_operator(pauli::sz(), j, n_q);
        coupling += qubit_operator(pauli::sx(), j, n_q);
    }
    spec.basis_labels.reserve(dim);
    for (int s = 0; s < dim; ++s) {
        std::string label;
        for (int j = 0; j < n_q; ++j) label += ((s >> (n_q - 1 - j)) & 1) ? '2' : '1';
        spec.basis_labels.push_back(label);
    }
    ModeSpec mode;
    mode.omega = omega;
    mode.g = g;
    mode.alpha_abs = alpha_abs;
    mode.phi = phi;
    mode.coupling = std::move(coupling);
    mode.rwa = false;
    spec.modes.push_back(std::move(mode));
    validate(spec);
    return spec;
}

// System Hamiltonian in the displaced frame: the classical drive
// H_S + Σ_k (Ω_k/2)[V_k e^{i(ω_k t + φ_k)} + V_k† e^{-i(ω_k t + φ_k)}].
inline Matrix driven_system_hamiltonian(const ModelSpec& spec, double t) {
    Matrix h = spec.h_sys;
    for (const auto& mode : spec.modes) {
        const Complex phase = std::polar(1.0, mode.omega * t + mode.phi);
        const double half_rabi = 0.5 * mode.rabi_frequency();
        h.noalias() += half_rabi * (phase * mode.coupling +
                                    std::conj(phase) * mode.coupling.adjoint());
    }
    return h;
}

struct ResidualCoupling {
    Complex factor;               // (g_k/2) e^{i ω_k t}
    const Matrix* coupling;       // V_k
};

// Phase factors of the residual quantized coupling in the displaced frame;
// the full interaction is Σ_k [c_k* V_k† b_k + c_k V_k b_k†].
inline std::vector<ResidualCoupling> residual_couplings(const ModelSpec& spec, double t) {
    std::vector<ResidualCoupling> result;
    result.reserve(spec.modes.size());
    for (const auto& mode : spec.modes)
        result.push_back({0.5 * mode.g * std::polar(1.0, mode.omega * t), &mode.coupling});
    return result;
}

}  // namespace lmdyn::model
