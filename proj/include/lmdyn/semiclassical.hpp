// semiclassical.hpp — Classical-drive propagator, its field response, and the
// closed-form results for the resonant two-level model

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmdyn/errors.hpp"
#include "lmdyn/model.hpp"

namespace lmdyn::sc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using model::ModelSpec;

// Time-evolution operators of the classically driven system on a uniform grid.
struct PropagatorSeries {
    double h{0.0};
    std::vector<double> times;
    std::vector<Matrix> us;

    int size() const { return static_cast<int>(times.size()); }

    int index_of(double t) const {
        const long long idx = std::llround(t / h);
        if (idx < 0 || idx >= static_cast<long long>(times.size()) ||
            std::abs(t - static_cast<double>(idx) * h) > 1e-9 * std::max(1.0, std::abs(t))) {
            const long long clamped =
                std::min(std::max(idx, 0ll), static_cast<long long>(times.size()) - 1);
            throw OffGridError("propagator series: t=" + std::to_string(t) +
                                   " is off the stored grid",
                               times[static_cast<std::size_t>(clamped)]);
        }
        return static_cast<int>(idx);
    }
};

// RK4 on U' = -i H_S(t) U, storing U at every grid point. Aborts if unitarity
// drifts beyond 1e-6.
inline PropagatorSeries propagate_us(const ModelSpec& spec, double t_final, double h) {
    if (!(h > 0.0)) throw InvalidParameter("propagate_us: step must be positive");
    if (t_final < 0.0) throw InvalidParameter("propagate_us: t_final must be >= 0");
    const long long n_steps = std::llround(t_final / h);

    PropagatorSeries series;
    series.h = h;
    series.times.reserve(static_cast<std::size_t>(n_steps + 1));
    series.us.reserve(static_cast<std::size_t>(n_steps + 1));

    const Complex mi(0.0, -1.0);
    Matrix u = Matrix::Identity(spec.n_sys, spec.n_sys);
    series.times.push_back(0.0);
    series.us.push_back(u);
    const Matrix eye = Matrix::Identity(spec.n_sys, spec.n_sys);
    for (long long i = 1; i <= n_steps; ++i) {
        const double t = static_cast<double>(i - 1) * h;
        const Matrix h0 = model::driven_system_hamiltonian(spec, t);
        const Matrix hm = model::driven_system_hamiltonian(spec, t + 0.5 * h);
        const Matrix h1 = model::driven_system_hamiltonian(spec, t + h);
        const Matrix k1 = mi * (h0 * u);
        const Matrix k2 = mi * (hm * (u + 0.5 * h * k1));
        const Matrix k3 = mi * (hm * (u + 0.5 * h * k2));
        const Matrix k4 = mi * (h1 * (u + h * k3));
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double drift = (u.adjoint() * u - eye).cwiseAbs().maxCoeff();
        if (drift > 1e-6)
            throw UnitarityError("propagate_us: unitarity drift " + std::to_string(drift) +
                                     " at t=" + std::to_string(static_cast<double>(i) * h),
                                 static_cast<double>(i) * h);
        series.times.push_back(static_cast<double>(i) * h);
        series.us.push_back(u);
    }
    return series;
}

// Exact propagator of the resonantly driven two-level system:
// e^{-iωtσz/2} [cos(Ω_R t/2) - i sin(Ω_R t/2)(δσz + Ωσx)/Ω_R], δ = ω0 - ω.
inline Matrix jc_analytic_us(double omega0, double omega, double rabi, double t) {
    const double delta = omega0 - omega;
    const double omega_r = std::sqrt(rabi * rabi + delta * delta);
    const double half = 0.5 * omega_r * t;
    Matrix rot(2, 2);
    rot << std::polar(1.0, 0.5 * omega * t), 0.0, 0.0, std::polar(1.0, -0.5 * omega * t);
    Matrix gen = Matrix::Identity(2, 2) * std::cos(half);
    if (omega_r > 0.0) {
        const Complex coeff = Complex(0.0, -1.0) * std::sin(half) / omega_r;
        gen += coeff * (delta * model::pauli::sz() + rabi * model::pauli::sx());
    }
    return rot * gen;
}

inline double population_sc(const PropagatorSeries& series, const Vector& psi0, int j, double t) {
    const int idx = series.index_of(t);
    const Complex amp = (series.us[static_cast<std::size_t>(idx)].row(j) * psi0).value();
    return std::norm(amp);
}

// Field response of mode k over the whole grid, from running trapezoidal
// accumulators. The double integrals of the variance factorize through
// u(τ) = ∫_0^τ e^{iωs} V(s)ψ0 ds, keeping the total cost linear in the grid.
struct FieldResponse {
    std::vector<double> delta_n;
    std::vector<double> delta_var;
};

inline FieldResponse field_response(const PropagatorSeries& series, const ModelSpec& spec,
                                    const Vector& psi0, int k) {
    if (k < 0 || k >= spec.n_modes()) throw InvalidParameter("field_response: mode index");
    const auto& mode = spec.modes[static_cast<std::size_t>(k)];
    const double omega = mode.omega;
    const double rabi = mode.rabi_frequency();
    const Complex extra_phase = std::polar(1.0, 2.0 * mode.phi);
    const int n = series.size();
    const double h = series.h;

    FieldResponse response;
    response.delta_n.assign(static_cast<std::size_t>(n), 0.0);
    response.delta_var.assign(static_cast<std::size_t>(n), 0.0);

    Complex drive_integral = 0.0;              // ∫ i <V(τ)> e^{i(ωτ+φ)} dτ
    Vector u_acc = Vector::Zero(psi0.size());  // ∫ e^{iωτ} V(τ)ψ0 dτ
    Complex pair_integral = 0.0;               // ∫ e^{iωτ} <V†(τ)ψ0, u(τ)> dτ

    Complex prev_drive = 0.0;
    Vector prev_w = Vector::Zero(psi0.size());
    Complex prev_pair = 0.0;

    for (int i = 0; i < n; ++i) {
        const double tau = series.times[static_cast<std::size_t>(i)];
        const Matrix& u = series.us[static_cast<std::size_t>(i)];
        const Vector evolved = u * psi0;
        const Vector w = u.adjoint() * (mode.coupling * evolved);             // V(τ)ψ0
        const Vector wd = u.adjoint() * (mode.coupling.adjoint() * evolved);  // V†(τ)ψ0
        const Complex expect_v = psi0.dot(w);
        const Complex drive_term =
            Complex(0.0, 1.0) * expect_v * std::polar(1.0, omega * tau + mode.phi);
        const Vector w_term = std::polar(1.0, omega * tau) * w;

        if (i > 0) {
            drive_integral += 0.5 * h * (prev_drive + drive_term);
            u_acc += 0.5 * h * (prev_w + w_term);
        }
        const Complex pair_term = std::polar(1.0, omega * tau) * wd.dot(u_acc);
        if (i > 0) pair_integral += 0.5 * h * (prev_pair + pair_term);

        const double dn = -rabi * drive_integral.real();
        const double dvar = dn - dn * dn + 0.5 * rabi * rabi * u_acc.squaredNorm() -
                            rabi * rabi * (pair_integral * extra_phase).real();
        response.delta_n[static_cast<std::size_t>(i)] = dn;
        response.delta_var[static_cast<std::size_t>(i)] = dvar;

        prev_drive = drive_term;
        prev_w = w_term;
        prev_pair = pair_term;
    }
    return response;
}

inline double delta_n_sc(const PropagatorSeries& series, const ModelSpec& spec,
                         const Vector& psi0, int k, double t) {
    const int idx = series.index_of(t);
    const auto response = field_response(series, spec, psi0, k);
    return response.delta_n[static_cast<std::size_t>(idx)];
}

inline double delta_var_sc(const PropagatorSeries& series, const ModelSpec& spec,
                           const Vector& psi0, int k, double t) {
    const int idx = series.index_of(t);
    const auto response = field_response(series, spec, psi0, k);
    return response.delta_var[static_cast<std::size_t>(idx)];
}

// Leading quantum correction to the excited-state population of the driven
// two-level model:
// (g²Ω²/4Ω_R⁴) { Ω²t²/4 cos(Ω_R t) + (4δ²-Ω²)/(4Ω_R) t sin(Ω_R t)
//                - (4δ²/Ω_R²) sin²(Ω_R t/2) }.
inline double jc_second_order_correction(double omega0, double omega, double rabi, double g,
                                         double t) {
    const double delta = omega0 - omega;
    const double omega_r2 = rabi * rabi + delta * delta;
    const double omega_r = std::sqrt(omega_r2);
    if (omega_r == 0.0) return 0.0;
    const double prefactor = g * g * rabi * rabi / (4.0 * omega_r2 * omega_r2);
    const double s = std::sin(0.5 * omega_r * t);
    return prefactor * (0.25 * rabi * rabi * t * t * std::cos(omega_r * t) +
                        (4.0 * delta * delta - rabi * rabi) / (4.0 * omega_r) * t *
                            std::sin(omega_r * t) -
                        4.0 * delta * delta / omega_r2 * s * s);
}

// Second-order population correction for an arbitrary driven system, evaluated
// numerically from the stored propagators:
//   Σ_k (g_k²/4) |<j| U(t) u_k(t)>|²
// - Σ_k (g_k²/2) Re ∫_0^t e^{-iωτ} <j|U(t)ψ0>* <j| U(t)U†(τ) V_k† U(τ) u_k(τ)> dτ
// with u_k(τ) = ∫_0^τ e^{iωs} V_k(s)ψ0 ds. Linear in the grid per call but far
// slower than the closed form above; intended for cross-checks.
inline double qc_population_correction(const PropagatorSeries& series, const ModelSpec& spec,
                                       const Vector& psi0, int j, double t) {
    const int idx = series.index_of(t);
    const double h = series.h;
    const Matrix& u_final = series.us[static_cast<std::size_t>(idx)];
    const Complex amp_j = (u_final.row(j) * psi0).value();  // <j|U(t)ψ0>

    double result = 0.0;
    for (int k = 0; k < spec.n_modes(); ++k) {
        const auto& mode = spec.modes[static_cast<std::size_t>(k)];
        if (mode.g == 0.0) continue;
        const double omega = mode.omega;

        Vector u_acc = Vector::Zero(psi0.size());
        Complex ordered = 0.0;
        Vector prev_w = Vector::Zero(psi0.size());
        Complex prev_ord = 0.0;
        for (int i = 0; i <= idx; ++i) {
            const double tau = series.times[static_cast<std::size_t>(i)];
            const Matrix& u = series.us[static_cast<std::size_t>(i)];
            const Vector w_term =
                std::polar(1.0, omega * tau) * (u.adjoint() * (mode.coupling * (u * psi0)));
            if (i > 0) u_acc += 0.5 * h * (prev_w + w_term);

            const Vector tail = u.adjoint() * (mode.coupling.adjoint() * (u * u_acc));
            const Complex ord_term = std::polar(1.0, -omega * tau) * std::conj(amp_j) *
                                     (u_final.row(j) * tail).value();
            if (i > 0) ordered += 0.5 * h * (prev_ord + ord_term);
            prev_w = w_term;
            prev_ord = ord_term;
        }
        const Complex projected = (u_final.row(j) * u_acc).value();
        result += 0.25 * mode.g * mode.g * std::norm(projected) -
                  0.5 * mode.g * mode.g * ordered.real();
    }
    return result;
}

// Time scale below which the quantum and classical-drive descriptions agree.
inline double crossover_time(double rabi, double alpha_abs) {
    if (!(rabi > 0.0)) throw InvalidParameter("crossover_time: drive amplitude must be positive");
    return alpha_abs / rabi;
}

}  // namespace lmdyn::sc
