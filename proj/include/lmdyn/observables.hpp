// observables.hpp — System populations and field statistics of the trial state

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "lmdyn/ansatz.hpp"
#include "lmdyn/errors.hpp"
#include "lmdyn/model.hpp"

namespace lmdyn::obs {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using ansatz::DavydovState;
using model::ModelSpec;

// P_j = Σ_{ln} A_lj* S_ln A_nj (unnormalized; equals the population for a
// unit-norm state).
inline double population(const DavydovState& state, int j) {
    if (j < 0 || j >= state.n_sys()) throw InvalidParameter("population: basis index out of range");
    const Matrix s = ansatz::overlap_matrix(state);
    Complex acc = 0.0;
    for (int l = 0; l < state.branches(); ++l)
        for (int n = 0; n < state.branches(); ++n)
            acc += std::conj(state.amplitudes(l, j)) * s(l, n) * state.amplitudes(n, j);
    return acc.real();
}

namespace detail {

// c_{ln} = Σ_j A_lj* S_ln A_nj; Σ_{ln} c_{ln} is the state norm.
inline Matrix branch_weights(const DavydovState& state) {
    const Matrix s = ansatz::overlap_matrix(state);
    const Matrix p = state.amplitudes.conjugate() * state.amplitudes.transpose();
    return s.cwiseProduct(p);
}

// Lab-frame displaced amplitude product relative to |α_k|²:
// z_{ln} = (α* + f_l*)(α + f_n) = |α|² + y_{ln}.
inline Complex centered_pair(const DavydovState& state, const ModelSpec& spec, int k, int l,
                             int n) {
    const Complex alpha = spec.modes[static_cast<std::size_t>(k)].alpha();
    const Complex fl = state.displacements(l, k);
    const Complex fn = state.displacements(n, k);
    return std::conj(alpha) * fn + alpha * std::conj(fl) + std::conj(fl) * fn;
}

// e^{iχ} - 1 = 2i sin(χ/2) e^{iχ/2}, stable for small χ.
inline Complex expi_minus_one(double chi) {
    return 2.0 * Complex(0.0, 1.0) * std::sin(0.5 * chi) * std::polar(1.0, 0.5 * chi);
}

}  // namespace detail

// Moment-generating function G(χ) = <e^{i Σ_k χ_k b_k† b_k}> in the lab frame;
// G(0) equals the state norm.
inline Complex generating_function(const DavydovState& state, const ModelSpec& spec,
                                   const std::vector<double>& chi) {
    if (static_cast<int>(chi.size()) != spec.n_modes())
        throw InvalidParameter("generating_function: chi size mismatch");
    const Matrix c = detail::branch_weights(state);
    Complex g = 0.0;
    for (int l = 0; l < state.branches(); ++l)
        for (int n = 0; n < state.branches(); ++n) {
            Complex exponent = 0.0;
            for (int k = 0; k < spec.n_modes(); ++k) {
                const double a2 = spec.modes[static_cast<std::size_t>(k)].alpha_abs *
                                  spec.modes[static_cast<std::size_t>(k)].alpha_abs;
                const Complex z = a2 + detail::centered_pair(state, spec, k, l, n);
                exponent += detail::expi_minus_one(chi[static_cast<std::size_t>(k)]) * z;
            }
            g += c(l, n) * std::exp(exponent);
        }
    return g;
}

// Change of the mean photon number against the initial coherent value |α_k|².
// Assembled from displacement offsets only, so no |α|²-sized cancellation
// enters even at very large mean photon numbers.
inline double delta_mean_photon(const DavydovState& state, const ModelSpec& spec, int k) {
    if (k < 0 || k >= spec.n_modes()) throw InvalidParameter("delta_mean_photon: mode index");
    const Matrix c = detail::branch_weights(state);
    Complex first = 0.0;
    Complex total = 0.0;
    for (int l = 0; l < state.branches(); ++l)
        for (int n = 0; n < state.branches(); ++n) {
            first += c(l, n) * detail::centered_pair(state, spec, k, l, n);
            total += c(l, n);
        }
    return (first / total).real();
}

inline double mean_photon(const DavydovState& state, const ModelSpec& spec, int k) {
    const double a = spec.modes[static_cast<std::size_t>(k)].alpha_abs;
    return a * a + delta_mean_photon(state, spec, k);
}

// Change of the photon-number variance against |α_k|²: Δσ² = Δn - Δn² + <y²>.
inline double delta_photon_variance(const DavydovState& state, const ModelSpec& spec, int k) {
    if (k < 0 || k >= spec.n_modes()) throw InvalidParameter("delta_photon_variance: mode index");
    const Matrix c = detail::branch_weights(state);
    Complex first = 0.0;
    Complex second = 0.0;
    Complex total = 0.0;
    for (int l = 0; l < state.branches(); ++l)
        for (int n = 0; n < state.branches(); ++n) {
            const Complex y = detail::centered_pair(state, spec, k, l, n);
            first += c(l, n) * y;
            second += c(l, n) * y * y;
            total += c(l, n);
        }
    const double dn = (first / total).real();
    return dn - dn * dn + (second / total).real();
}

inline double photon_variance(const DavydovState& state, const ModelSpec& spec, int k) {
    const double a = spec.modes[static_cast<std::size_t>(k)].alpha_abs;
    return a * a + delta_photon_variance(state, spec, k);
}

// Photon-number window, one entry per mode. Counts below zero are clipped.
struct WindowSpec {
    std::vector<long long> center;
    std::vector<int> halfwidth;
};

inline WindowSpec default_window(const ModelSpec& spec) {
    WindowSpec w;
    for (const auto& mode : spec.modes) {
        const double a2 = mode.alpha_abs * mode.alpha_abs;
        w.center.push_back(static_cast<long long>(std::llround(a2)));
        w.halfwidth.push_back(8 * static_cast<int>(std::ceil(mode.alpha_abs)) + 32);
    }
    return w;
}

struct PhotonDistribution {
    std::vector<long long> lower;   // per-mode first photon number in the window
    std::vector<int> count;         // per-mode window length
    std::vector<double> p;          // row-major over modes
    double window_mass{0.0};
    bool mass_deficit{false};
    double time{0.0};

    std::size_t index(const std::vector<long long>& n) const {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < count.size(); ++k)
            idx = idx * static_cast<std::size_t>(count[k]) +
                  static_cast<std::size_t>(n[k] - lower[k]);
        return idx;
    }
};

// p(n) from the periodic quadrature of G(χ) e^{-iχ·n} on a uniform χ grid.
// The window center phase e^{-iχ·n0} is folded into each branch exponent, so
// the sampled integrand varies slowly even at |α|² ~ 1e5. The χ sum factorizes
// per mode for every branch pair, which keeps multimode windows affordable.
inline PhotonDistribution photon_distribution(const DavydovState& state, const ModelSpec& spec,
                                              const WindowSpec& window,
                                              std::vector<int> grid = {}) {
    const int nm = spec.n_modes();
    if (static_cast<int>(window.center.size()) != nm ||
        static_cast<int>(window.halfwidth.size()) != nm)
        throw InvalidParameter("photon_distribution: window size mismatch");
    if (grid.empty())
        for (int k = 0; k < nm; ++k) grid.push_back(4 * window.halfwidth[static_cast<std::size_t>(k)] + 1);
    if (static_cast<int>(grid.size()) != nm)
        throw InvalidParameter("photon_distribution: grid size mismatch");
    for (int k = 0; k < nm; ++k)
        if (grid[static_cast<std::size_t>(k)] < 4 * window.halfwidth[static_cast<std::size_t>(k)] + 1)
            throw InvalidParameter("photon_distribution: grid must have at least 4W+1 points");

    const int m = state.branches();
    const Matrix c = detail::branch_weights(state);
    Complex total = 0.0;
    for (int l = 0; l < m; ++l)
        for (int n = 0; n < m; ++n) total += c(l, n);

    PhotonDistribution dist;
    dist.time = state.t;
    std::vector<std::size_t> counts;
    for (int k = 0; k < nm; ++k) {
        const long long lo = std::max(0ll, window.center[static_cast<std::size_t>(k)] -
                                               window.halfwidth[static_cast<std::size_t>(k)]);
        const long long hi = window.center[static_cast<std::size_t>(k)] +
                             window.halfwidth[static_cast<std::size_t>(k)];
        dist.lower.push_back(lo);
        dist.count.push_back(static_cast<int>(hi - lo + 1));
        counts.push_back(static_cast<std::size_t>(hi - lo + 1));
    }

    // Per-mode partial Fourier sums T_k[pair][offset within window].
    std::vector<std::vector<std::vector<Complex>>> transforms(static_cast<std::size_t>(nm));
    for (int k = 0; k < nm; ++k) {
        const int q_count = grid[static_cast<std::size_t>(k)];
        const long long n0 = window.center[static_cast<std::size_t>(k)];
        const long long lo = dist.lower[static_cast<std::size_t>(k)];
        const int len = dist.count[static_cast<std::size_t>(k)];
        const double a2 = spec.modes[static_cast<std::size_t>(k)].alpha_abs *
                          spec.modes[static_cast<std::size_t>(k)].alpha_abs;

        auto& tk = transforms[static_cast<std::size_t>(k)];
        tk.assign(static_cast<std::size_t>(m * m),
                  std::vector<Complex>(static_cast<std::size_t>(len), Complex(0.0)));
        std::vector<Complex> samples(static_cast<std::size_t>(m * m));
        std::vector<Complex> twiddle(static_cast<std::size_t>(len));
        for (int q = 0; q < q_count; ++q) {
            const double chi = 2.0 * model::kPi * q / q_count;
            const Complex ramp = detail::expi_minus_one(chi);
            for (int l = 0; l < m; ++l)
                for (int n = 0; n < m; ++n) {
                    const Complex z = a2 + detail::centered_pair(state, spec, k, l, n);
                    samples[static_cast<std::size_t>(l * m + n)] =
                        std::exp(ramp * z - Complex(0.0, chi * static_cast<double>(n0)));
                }
            // e^{-iχ(n - n0)} over the window, built by recurrence
            const Complex step = std::polar(1.0, -chi);
            Complex ph = std::polar(1.0, -chi * static_cast<double>(lo - n0));
            for (int w = 0; w < len; ++w) {
                twiddle[static_cast<std::size_t>(w)] = ph;
                ph *= step;
            }
            for (int pair = 0; pair < m * m; ++pair) {
                const Complex e = samples[static_cast<std::size_t>(pair)];
                auto& row = tk[static_cast<std::size_t>(pair)];
                for (int w = 0; w < len; ++w) row[static_cast<std::size_t>(w)] += e * twiddle[static_cast<std::size_t>(w)];
            }
        }
        const double inv_q = 1.0 / q_count;
        for (auto& row : tk)
            for (auto& value : row) value *= inv_q;
    }

    std::size_t n_points = 1;
    for (std::size_t s : counts) n_points *= s;
    dist.p.assign(n_points, 0.0);
    std::vector<int> offsets(static_cast<std::size_t>(nm), 0);
    for (std::size_t point = 0; point < n_points; ++point) {
        Complex acc = 0.0;
        for (int l = 0; l < m; ++l)
            for (int n = 0; n < m; ++n) {
                Complex term = c(l, n);
                for (int k = 0; k < nm; ++k)
                    term *= transforms[static_cast<std::size_t>(k)]
                                      [static_cast<std::size_t>(l * m + n)]
                                      [static_cast<std::size_t>(offsets[static_cast<std::size_t>(k)])];
                acc += term;
            }
        dist.p[point] = (acc / total).real();
        for (int k = nm - 1; k >= 0; --k) {
            if (++offsets[static_cast<std::size_t>(k)] < dist.count[static_cast<std::size_t>(k)]) break;
            offsets[static_cast<std::size_t>(k)] = 0;
        }
    }

    double mass = 0.0;
    for (double value : dist.p) mass += value;
    dist.window_mass = mass;
    dist.mass_deficit = mass < 0.999;
    return dist;
}

}  // namespace lmdyn::obs
