// integrator.hpp — Fixed-step RK4 propagation of the trial state with
// conservation diagnostics

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lmdyn/ansatz.hpp"
#include "lmdyn/errors.hpp"
#include "lmdyn/model.hpp"
#include "lmdyn/trajectory.hpp"

namespace lmdyn::integrator {

using ansatz::DavydovState;
using model::ModelSpec;

struct IntegrationConfig {
    double dt{0.01};
    double t_final{0.0};
    double norm_tolerance{1e-6};
    int sample_stride{1};
    double reg{1e-10};
    bool auto_halve_dt{true};
    int max_halvings{4};
};

inline void validate(const IntegrationConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw InvalidParameter("integration: dt must be positive");
    if (cfg.t_final < 0.0) throw InvalidParameter("integration: t_final must be >= 0");
    if (cfg.sample_stride < 1) throw InvalidParameter("integration: sample_stride must be >= 1");
}

namespace detail {

inline ansatz::EomSolution derivative(const DavydovState& state, const ModelSpec& spec,
                                      double reg) {
    return ansatz::solve_eom(ansatz::assemble_eom(state, spec), reg);
}

inline DavydovState shifted(const DavydovState& base, const ansatz::EomSolution& slope,
                            double h) {
    DavydovState out = base;
    out.amplitudes += h * slope.a_dot;
    out.displacements += h * slope.f_dot;
    out.t += h;
    return out;
}

}  // namespace detail

// One classic RK4 step; the implicit variational metric is handled by a
// linear solve at each of the four stages.
inline DavydovState step(const DavydovState& state, const ModelSpec& spec, double dt,
                         double reg = 1e-10) {
    if (!(dt > 0.0)) throw InvalidParameter("step: dt must be positive");
    const auto k1 = detail::derivative(state, spec, reg);
    const auto k2 = detail::derivative(detail::shifted(state, k1, 0.5 * dt), spec, reg);
    const auto k3 = detail::derivative(detail::shifted(state, k2, 0.5 * dt), spec, reg);
    const auto k4 = detail::derivative(detail::shifted(state, k3, dt), spec, reg);
    DavydovState out = state;
    out.amplitudes += (dt / 6.0) * (k1.a_dot + 2.0 * k2.a_dot + 2.0 * k3.a_dot + k4.a_dot);
    out.displacements += (dt / 6.0) * (k1.f_dot + 2.0 * k2.f_dot + 2.0 * k3.f_dot + k4.f_dot);
    out.t += dt;
    return out;
}

// Named column block evaluated at every sample time.
struct Observer {
    std::vector<std::string> columns;
    std::function<void(const DavydovState&, std::vector<double>&)> eval;
};

// Advances the state to t_final, recording observer columns plus the norm
// error every sample_stride steps. Aborts on norm drift beyond tolerance or
// on a failed EOM solve; both errors carry the simulation time.
inline io::TrajectoryRecord propagate(DavydovState state, const ModelSpec& spec,
                                      IntegrationConfig cfg,
                                      const std::vector<Observer>& observers) {
    validate(cfg);

    if (cfg.auto_halve_dt && cfg.t_final > 0.0) {
        const double norm0 = ansatz::norm(state);
        for (int h = 0; h < cfg.max_halvings; ++h) {
            DavydovState probe = step(state, spec, cfg.dt, cfg.reg);
            if (std::abs(ansatz::norm(probe) - norm0) <= 1e-10) break;
            cfg.dt *= 0.5;
            cfg.sample_stride *= 2;
        }
    }

    io::TrajectoryRecord record;
    record.metadata["dt"] = io::detail::format_value(cfg.dt);
    record.metadata["sample_stride"] = std::to_string(cfg.sample_stride);
    for (const auto& ob : observers)
        for (const auto& name : ob.columns) record.columns.push_back(name);
    record.columns.push_back("norm_error");

    const double sample_dt = cfg.dt * cfg.sample_stride;
    const long long n_samples =
        (cfg.t_final <= 0.0) ? 0 : std::llround(cfg.t_final / sample_dt);
    const long long n_steps = n_samples * cfg.sample_stride;

    auto emit = [&](const DavydovState& s) {
        const double drift = std::abs(ansatz::norm(s) - 1.0);
        if (drift > cfg.norm_tolerance)
            throw NormDriftError("propagate: norm drift " + std::to_string(drift) +
                                     " exceeded tolerance at t=" + std::to_string(s.t),
                                 s.t);
        std::vector<double> row;
        for (const auto& ob : observers) ob.eval(s, row);
        row.push_back(drift);
        record.time.push_back(s.t);
        record.rows.push_back(std::move(row));
    };

    emit(state);
    for (long long i = 1; i <= n_steps; ++i) {
        try {
            state = step(state, spec, cfg.dt, cfg.reg);
        } catch (const SingularSystemError& err) {
            throw SolverFailureError(std::string("propagate: ") + err.what() +
                                         " at t=" + std::to_string(state.t),
                                     state.t);
        }
        if (i % cfg.sample_stride == 0) emit(state);
    }
    return record;
}

}  // namespace lmdyn::integrator
