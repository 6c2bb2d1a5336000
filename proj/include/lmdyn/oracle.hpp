// oracle.hpp — Exact propagation in a truncated number basis, used as ground
// truth for the variational solver at small mean photon numbers

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lmdyn/errors.hpp"
#include "lmdyn/model.hpp"
#include "lmdyn/observables.hpp"

namespace lmdyn::oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using model::ModelSpec;

struct FockConfig {
    std::vector<int> n_max;       // per-mode photon cutoff (inclusive)
    double tail_tol{1e-10};
    long long dim_cap{200000};
    int dense_cap{10000};         // largest dimension propagated by spectral decomposition
    int krylov_dim{48};
    double krylov_tol{1e-11};
};

// Cutoff covering the initial coherent occupation with a generous margin.
inline FockConfig default_fock_config(const ModelSpec& spec) {
    FockConfig cfg;
    for (const auto& mode : spec.modes) {
        const double a = mode.alpha_abs;
        cfg.n_max.push_back(static_cast<int>(std::ceil(a * a + 10.0 * a + 20.0)));
    }
    return cfg;
}

namespace detail {

inline long long total_dimension(const ModelSpec& spec, const FockConfig& cfg) {
    long long dim = spec.n_sys;
    for (int nmax : cfg.n_max) {
        dim *= (nmax + 1);
        if (dim > (1ll << 40)) return dim;  // avoid overflow while still failing the cap check
    }
    return dim;
}

// Basis index: system index is the most significant digit, then mode 0, ...
struct Indexer {
    std::vector<long long> strides;
    long long dim{0};

    Indexer(const ModelSpec& spec, const FockConfig& cfg) {
        const int nm = spec.n_modes();
        strides.assign(static_cast<std::size_t>(nm) + 1, 1);
        for (int k = nm - 1; k >= 0; --k)
            strides[static_cast<std::size_t>(k)] =
                strides[static_cast<std::size_t>(k) + 1] *
                (cfg.n_max[static_cast<std::size_t>(k)] + 1);
        dim = strides[0] * spec.n_sys;
    }

    long long system_stride() const { return strides[0]; }
    long long mode_stride(int k) const { return strides[static_cast<std::size_t>(k) + 1]; }
};

// Coherent amplitudes e^{-|α|²/2} α^n / √(n!), via log-gamma so large n stays finite.
inline std::vector<Complex> coherent_amplitudes(Complex alpha, int n_max) {
    std::vector<Complex> amps(static_cast<std::size_t>(n_max) + 1);
    const double mag = std::abs(alpha);
    const double arg = std::arg(alpha);
    if (mag == 0.0) {
        amps[0] = 1.0;
        return amps;
    }
    const double log_mag = std::log(mag);
    for (int n = 0; n <= n_max; ++n) {
        const double log_amp = -0.5 * mag * mag + n * log_mag - 0.5 * std::lgamma(n + 1.0);
        amps[static_cast<std::size_t>(n)] = std::polar(std::exp(log_amp), n * arg);
    }
    return amps;
}

}  // namespace detail

// Full Hamiltonian H_S ⊗ I + Σ_k ω_k b_k†b_k + Σ_k (g_k/2)(b_k† V_k + b_k V_k†)
// on the truncated number basis.
inline SparseMatrix build_full_hamiltonian(const ModelSpec& spec, const FockConfig& cfg) {
    if (static_cast<int>(cfg.n_max.size()) != spec.n_modes())
        throw InvalidParameter("build_full_hamiltonian: cutoff list size mismatch");
    for (int nmax : cfg.n_max)
        if (nmax < 0) throw InvalidParameter("build_full_hamiltonian: negative cutoff");
    const long long dim = detail::total_dimension(spec, cfg);
    if (dim > cfg.dim_cap)
        throw CapacityError("build_full_hamiltonian: dimension " + std::to_string(dim) +
                            " exceeds cap " + std::to_string(cfg.dim_cap));

    const detail::Indexer idx(spec, cfg);
    const int nm = spec.n_modes();
    const long long field_dim = idx.system_stride();

    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(2 + spec.n_sys));

    std::vector<int> occupation(static_cast<std::size_t>(nm), 0);
    for (long long f = 0; f < field_dim; ++f) {
        long long rest = f;
        for (int k = 0; k < nm; ++k) {
            occupation[static_cast<std::size_t>(k)] =
                static_cast<int>(rest / idx.mode_stride(k));
            rest %= idx.mode_stride(k);
        }
        double field_energy = 0.0;
        for (int k = 0; k < nm; ++k)
            field_energy += spec.modes[static_cast<std::size_t>(k)].omega *
                            occupation[static_cast<std::size_t>(k)];

        for (int j = 0; j < spec.n_sys; ++j) {
            const long long row = j * field_dim + f;
            // system block + field diagonal
            for (int i = 0; i < spec.n_sys; ++i) {
                Complex value = spec.h_sys(j, i);
                if (i == j) value += field_energy;
                if (value != 0.0) triplets.emplace_back(row, i * field_dim + f, value);
            }
            // (g/2) b† V : row occupation n_k reached from n_k - 1
            for (int k = 0; k < nm; ++k) {
                const auto& mode = spec.modes[static_cast<std::size_t>(k)];
                if (mode.g == 0.0) continue;
                const int nk = occupation[static_cast<std::size_t>(k)];
                if (nk >= 1) {
                    const double ladder = std::sqrt(static_cast<double>(nk));
                    const long long col_f = f - idx.mode_stride(k);
                    for (int i = 0; i < spec.n_sys; ++i) {
                        const Complex value = 0.5 * mode.g * ladder * mode.coupling(j, i);
                        if (value != 0.0) triplets.emplace_back(row, i * field_dim + col_f, value);
                    }
                }
                // (g/2) b V† : row occupation n_k reached from n_k + 1
                if (nk < cfg.n_max[static_cast<std::size_t>(k)]) {
                    const double ladder = std::sqrt(static_cast<double>(nk) + 1.0);
                    const long long col_f = f + idx.mode_stride(k);
                    for (int i = 0; i < spec.n_sys; ++i) {
                        const Complex value =
                            0.5 * mode.g * ladder * std::conj(mode.coupling(i, j));
                        if (value != 0.0) triplets.emplace_back(row, i * field_dim + col_f, value);
                    }
                }
            }
        }
    }

    SparseMatrix h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    h.makeCompressed();
    return h;
}

// |ψ0> ⊗ |α_1> ⊗ ... ⊗ |α_N> on the truncated basis; throws if the truncated
// coherent tail exceeds the configured tolerance.
inline Vector initial_fock_state(const ModelSpec& spec, const Vector& psi0,
                                 const FockConfig& cfg) {
    const detail::Indexer idx(spec, cfg);
    const int nm = spec.n_modes();

    std::vector<std::vector<Complex>> amps;
    for (int k = 0; k < nm; ++k) {
        amps.push_back(detail::coherent_amplitudes(spec.modes[static_cast<std::size_t>(k)].alpha(),
                                                   cfg.n_max[static_cast<std::size_t>(k)]));
        double mass = 0.0;
        for (const Complex& a : amps.back()) mass += std::norm(a);
        if (1.0 - mass > cfg.tail_tol)
            throw TailMassError("initial_fock_state: coherent tail beyond cutoff of mode " +
                                std::to_string(k) + " is " + std::to_string(1.0 - mass));
    }

    Vector state = Vector::Zero(idx.dim);
    const long long field_dim = idx.system_stride();
    for (long long f = 0; f < field_dim; ++f) {
        long long rest = f;
        Complex amp = 1.0;
        for (int k = 0; k < nm; ++k) {
            const int nk = static_cast<int>(rest / idx.mode_stride(k));
            rest %= idx.mode_stride(k);
            amp *= amps[static_cast<std::size_t>(k)][static_cast<std::size_t>(nk)];
        }
        for (int j = 0; j < spec.n_sys; ++j) state(j * field_dim + f) = psi0(j) * amp;
    }
    return state;
}

namespace detail {

// One Lanczos exp(-iHτ)v step with full reorthogonalization; the returned
// error estimate drives the substep subdivision.
inline Vector lanczos_expm(const SparseMatrix& h, const Vector& v, double tau, int m,
                           double* error_estimate) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) {
        *error_estimate = 0.0;
        return v;
    }
    const int dim = static_cast<int>(v.size());
    m = std::min(m, dim);
    Eigen::MatrixXcd basis(dim, m);
    Eigen::VectorXd alpha(m);
    Eigen::VectorXd beta(m);  // beta(i) couples vector i and i+1
    basis.col(0) = v / beta0;
    int steps = m;
    for (int i = 0; i < m; ++i) {
        Vector w = h * basis.col(i);
        for (int r = 0; r < 2; ++r)  // re-orthogonalize twice against all previous vectors
            for (int p = 0; p <= i; ++p) {
                const Complex overlap = basis.col(p).dot(w);
                if (r == 0 && p == i) alpha(i) = overlap.real();
                w -= overlap * basis.col(p);
            }
        const double b = w.norm();
        if (i + 1 < m) {
            beta(i) = b;
            if (b < 1e-14) {
                steps = i + 1;
                break;
            }
            basis.col(i + 1) = w / b;
        } else {
            beta(i) = b;
        }
    }

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(steps, steps);
    for (int i = 0; i < steps; ++i) {
        tri(i, i) = alpha(i);
        if (i + 1 < steps) tri(i, i + 1) = tri(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
    const Eigen::VectorXd& eval = solver.eigenvalues();
    const Eigen::MatrixXd& evec = solver.eigenvectors();
    Eigen::VectorXcd small = Eigen::VectorXcd::Zero(steps);
    for (int i = 0; i < steps; ++i) {
        Complex acc = 0.0;
        for (int p = 0; p < steps; ++p)
            acc += evec(i, p) * std::polar(1.0, -eval(p) * tau) * evec(0, p);
        small(i) = acc;
    }
    *error_estimate = (steps == static_cast<int>(m)) ? std::abs(small(steps - 1)) * beta(steps - 1) * tau
                                                     : 0.0;
    return beta0 * (basis.leftCols(steps) * small);
}

}  // namespace detail

struct ExactRun {
    std::vector<double> times;
    Eigen::MatrixXd populations;      // sample x system index
    Eigen::MatrixXd mean_photon;      // sample x mode
    Eigen::MatrixXd photon_variance;  // sample x mode
    std::vector<double> norm_error;
    std::vector<double> snapshot_times;
    std::vector<Vector> snapshots;    // full state vectors at the requested times
};

namespace detail {

inline void extract_observables(const ModelSpec& spec, const FockConfig& cfg, const Vector& state,
                                int sample, ExactRun* run) {
    const Indexer idx(spec, cfg);
    const long long field_dim = idx.system_stride();
    const int nm = spec.n_modes();
    double total = 0.0;
    std::vector<double> first(static_cast<std::size_t>(nm), 0.0);
    std::vector<double> second(static_cast<std::size_t>(nm), 0.0);
    for (int j = 0; j < spec.n_sys; ++j) {
        double pop = 0.0;
        for (long long f = 0; f < field_dim; ++f) {
            const double w = std::norm(state(j * field_dim + f));
            pop += w;
            long long rest = f;
            for (int k = 0; k < nm; ++k) {
                const int nk = static_cast<int>(rest / idx.mode_stride(k));
                rest %= idx.mode_stride(k);
                first[static_cast<std::size_t>(k)] += w * nk;
                second[static_cast<std::size_t>(k)] += w * static_cast<double>(nk) * nk;
            }
        }
        run->populations(sample, j) = pop;
        total += pop;
    }
    run->norm_error[static_cast<std::size_t>(sample)] = std::abs(total - 1.0);
    for (int k = 0; k < nm; ++k) {
        const double mean = first[static_cast<std::size_t>(k)] / total;
        run->mean_photon(sample, k) = mean;
        run->photon_variance(sample, k) =
            second[static_cast<std::size_t>(k)] / total - mean * mean;
    }
}

}  // namespace detail

// Propagates |ψ0>⊗|α> over t_grid. Dense spectral decomposition below
// dense_cap, Lanczos stepping above it. Snapshot times must be a subset of
// the grid (within rounding).
inline ExactRun propagate_exact(const ModelSpec& spec, const Vector& psi0, const FockConfig& cfg,
                                const std::vector<double>& t_grid,
                                const std::vector<double>& snapshot_times = {}) {
    if (psi0.size() != spec.n_sys) throw InvalidParameter("propagate_exact: psi0 dimension");
    if (t_grid.empty()) throw InvalidParameter("propagate_exact: empty time grid");
    const SparseMatrix h = build_full_hamiltonian(spec, cfg);
    const Vector initial = initial_fock_state(spec, psi0, cfg);
    const long long dim = initial.size();

    ExactRun run;
    run.times = t_grid;
    run.populations.resize(static_cast<Eigen::Index>(t_grid.size()), spec.n_sys);
    run.mean_photon.resize(static_cast<Eigen::Index>(t_grid.size()), spec.n_modes());
    run.photon_variance.resize(static_cast<Eigen::Index>(t_grid.size()), spec.n_modes());
    run.norm_error.assign(t_grid.size(), 0.0);

    auto want_snapshot = [&](double t) {
        for (double s : snapshot_times)
            if (std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(s))) return true;
        return false;
    };

    if (dim <= cfg.dense_cap) {
        Matrix dense(h);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("propagate_exact: eigendecomposition failed");
        const Vector coeffs = solver.eigenvectors().adjoint() * initial;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            const double t = t_grid[i];
            Vector rotated(coeffs.size());
            for (Eigen::Index p = 0; p < coeffs.size(); ++p)
                rotated(p) = coeffs(p) * std::polar(1.0, -solver.eigenvalues()(p) * t);
            const Vector state = solver.eigenvectors() * rotated;
            detail::extract_observables(spec, cfg, state, static_cast<int>(i), &run);
            if (want_snapshot(t)) {
                run.snapshot_times.push_back(t);
                run.snapshots.push_back(state);
            }
        }
        return run;
    }

    // Krylov path: march through the grid, subdividing whenever the local
    // error estimate exceeds the budget for the substep.
    Vector state = initial;
    double current = 0.0;
    // crude spectral radius estimate from a few power iterations
    Vector probe = Vector::Random(dim).normalized();
    double hnorm = 1.0;
    for (int it = 0; it < 8; ++it) {
        probe = (h * probe).eval();
        hnorm = probe.norm();
        if (hnorm == 0.0) break;
        probe /= hnorm;
    }
    double max_tau = (hnorm > 0.0) ? 0.5 * cfg.krylov_dim / hnorm : 1.0;

    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double target = t_grid[i];
        if (target < current - 1e-12)
            throw InvalidParameter("propagate_exact: time grid must be non-decreasing");
        while (current < target - 1e-12) {
            double tau = std::min(max_tau, target - current);
            for (;;) {
                double err = 0.0;
                const Vector next = detail::lanczos_expm(h, state, tau, cfg.krylov_dim, &err);
                if (err <= cfg.krylov_tol * std::max(1.0, tau) || tau < 1e-8) {
                    state = next;
                    current += tau;
                    break;
                }
                tau *= 0.5;
                max_tau = std::min(max_tau, tau);
            }
        }
        detail::extract_observables(spec, cfg, state, static_cast<int>(i), &run);
        if (want_snapshot(target)) {
            run.snapshot_times.push_back(target);
            run.snapshots.push_back(state);
        }
    }
    return run;
}

// Joint photon-number distribution of a truncated-basis state, marginalized
// over the system index, restricted to the window.
inline obs::PhotonDistribution distribution_from_fock(const ModelSpec& spec,
                                                      const FockConfig& cfg, const Vector& state,
                                                      const obs::WindowSpec& window,
                                                      double time = 0.0) {
    const detail::Indexer idx(spec, cfg);
    const int nm = spec.n_modes();
    obs::PhotonDistribution dist;
    dist.time = time;
    std::vector<long long> upper(static_cast<std::size_t>(nm));
    for (int k = 0; k < nm; ++k) {
        const long long lo =
            std::max(0ll, window.center[static_cast<std::size_t>(k)] -
                              window.halfwidth[static_cast<std::size_t>(k)]);
        dist.lower.push_back(lo);
        dist.count.push_back(static_cast<int>(window.center[static_cast<std::size_t>(k)] +
                                              window.halfwidth[static_cast<std::size_t>(k)] - lo +
                                              1));
        upper[static_cast<std::size_t>(k)] =
            window.center[static_cast<std::size_t>(k)] + window.halfwidth[static_cast<std::size_t>(k)];
    }
    std::size_t n_points = 1;
    for (int c : dist.count) n_points *= static_cast<std::size_t>(c);
    dist.p.assign(n_points, 0.0);

    const long long field_dim = idx.system_stride();
    double total = 0.0;
    for (long long f = 0; f < field_dim; ++f) {
        double w = 0.0;
        for (int j = 0; j < spec.n_sys; ++j) w += std::norm(state(j * field_dim + f));
        total += w;
        long long rest = f;
        bool inside = true;
        std::size_t flat = 0;
        for (int k = 0; k < nm; ++k) {
            const long long nk = rest / idx.mode_stride(k);
            rest %= idx.mode_stride(k);
            if (nk < dist.lower[static_cast<std::size_t>(k)] || nk > upper[static_cast<std::size_t>(k)]) {
                inside = false;
                break;
            }
            flat = flat * static_cast<std::size_t>(dist.count[static_cast<std::size_t>(k)]) +
                   static_cast<std::size_t>(nk - dist.lower[static_cast<std::size_t>(k)]);
        }
        if (inside) dist.p[flat] += w;
    }
    for (double& value : dist.p) value /= total;
    double mass = 0.0;
    for (double value : dist.p) mass += value;
    dist.window_mass = mass;
    dist.mass_deficit = mass < 0.999;
    return dist;
}

}  // namespace lmdyn::oracle
