// runner.hpp — Executes configured engines and writes result artifacts

#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lmdyn/ansatz.hpp"
#include "lmdyn/config.hpp"
#include "lmdyn/errors.hpp"
#include "lmdyn/integrator.hpp"
#include "lmdyn/model.hpp"
#include "lmdyn/observables.hpp"
#include "lmdyn/oracle.hpp"
#include "lmdyn/semiclassical.hpp"
#include "lmdyn/trajectory.hpp"
#include "lmdyn/version.hpp"

namespace lmdyn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitToleranceFail = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitEngineError = 3;

inline fs::path resolve_output_dir(const std::string& configured) {
    const char* root = std::getenv("LMDYN_OUTPUT_ROOT");
    fs::path dir(configured);
    if (root && *root) return fs::path(root) / dir.relative_path();
    return dir;
}

namespace detail {

inline std::vector<double> sample_times(const integrator::IntegrationConfig& cfg) {
    const double sample_dt = cfg.dt * cfg.sample_stride;
    const long long n = (cfg.t_final <= 0.0) ? 0 : std::llround(cfg.t_final / sample_dt);
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(n) + 1);
    for (long long i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * sample_dt);
    return times;
}

inline obs::WindowSpec distribution_window(const io::RunConfig& cfg,
                                           const model::ModelSpec& spec) {
    obs::WindowSpec window = obs::default_window(spec);
    const auto& dist = *cfg.observables.distribution;
    if (!dist.center.empty()) {
        if (dist.center.size() != window.center.size())
            throw ConfigError("config: distribution.center size mismatch");
        window.center = dist.center;
    }
    if (!dist.halfwidth.empty()) {
        if (dist.halfwidth.size() != window.halfwidth.size())
            throw ConfigError("config: distribution.halfwidth size mismatch");
        window.halfwidth = dist.halfwidth;
    }
    return window;
}

inline void write_distribution_csv(const obs::PhotonDistribution& dist, int n_modes,
                                   const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "# lmdyn-csv v1\n";
    out << "# time=" << io::detail::format_value(dist.time) << "\n";
    out << "# window_mass=" << io::detail::format_value(dist.window_mass) << "\n";
    if (dist.mass_deficit) out << "# warning=window mass below 0.999\n";
    for (int k = 0; k < n_modes; ++k) out << "n_" << (k + 1) << ",";
    out << "p\n";
    std::vector<long long> n(static_cast<std::size_t>(n_modes));
    for (int k = 0; k < n_modes; ++k) n[static_cast<std::size_t>(k)] = dist.lower[static_cast<std::size_t>(k)];
    for (double value : dist.p) {
        for (int k = 0; k < n_modes; ++k) out << n[static_cast<std::size_t>(k)] << ",";
        out << io::detail::format_value(value) << "\n";
        for (int k = n_modes - 1; k >= 0; --k) {
            if (++n[static_cast<std::size_t>(k)] <
                dist.lower[static_cast<std::size_t>(k)] + dist.count[static_cast<std::size_t>(k)])
                break;
            n[static_cast<std::size_t>(k)] = dist.lower[static_cast<std::size_t>(k)];
        }
    }
}

struct EngineArtifacts {
    std::vector<std::string> files;
    io::TrajectoryRecord record;
};

inline EngineArtifacts run_variational(const io::RunConfig& cfg, const model::ModelSpec& spec,
                                       const Eigen::VectorXcd& psi0, const fs::path& out_dir) {
    EngineArtifacts artifacts;
    ansatz::DavydovState state =
        ansatz::initial_state(spec, psi0, cfg.ansatz.branches, cfg.ansatz.seed,
                              cfg.ansatz.delta_init);

    std::vector<integrator::Observer> observers;
    if (cfg.observables.populations) {
        integrator::Observer ob;
        for (int j = 0; j < spec.n_sys; ++j) ob.columns.push_back("P_" + std::to_string(j + 1));
        ob.eval = [&spec](const ansatz::DavydovState& s, std::vector<double>& row) {
            for (int j = 0; j < spec.n_sys; ++j) row.push_back(obs::population(s, j));
        };
        observers.push_back(std::move(ob));
    }
    if (cfg.observables.delta_n || cfg.observables.delta_var) {
        integrator::Observer ob;
        for (int k = 0; k < spec.n_modes(); ++k) {
            if (cfg.observables.delta_n) ob.columns.push_back("delta_n_" + std::to_string(k + 1));
            if (cfg.observables.delta_var)
                ob.columns.push_back("delta_var_" + std::to_string(k + 1));
        }
        const bool want_n = cfg.observables.delta_n;
        const bool want_var = cfg.observables.delta_var;
        ob.eval = [&spec, want_n, want_var](const ansatz::DavydovState& s,
                                            std::vector<double>& row) {
            for (int k = 0; k < spec.n_modes(); ++k) {
                if (want_n) row.push_back(obs::delta_mean_photon(s, spec, k));
                if (want_var) row.push_back(obs::delta_photon_variance(s, spec, k));
            }
        };
        observers.push_back(std::move(ob));
    }

    std::vector<std::pair<double, ansatz::DavydovState>> snapshots;
    if (cfg.observables.distribution) {
        integrator::Observer ob;
        const auto times = cfg.observables.distribution->times;
        ob.eval = [times, &snapshots](const ansatz::DavydovState& s, std::vector<double>&) {
            for (double t : times)
                if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t)))
                    snapshots.emplace_back(t, s);
        };
        observers.push_back(std::move(ob));
    }

    artifacts.record = integrator::propagate(state, spec, cfg.integration, observers);
    artifacts.record.metadata["engine"] = "variational";
    artifacts.record.metadata["seed"] = std::to_string(cfg.ansatz.seed);
    artifacts.record.metadata["branches"] = std::to_string(cfg.ansatz.branches);
    const fs::path csv = out_dir / "variational.csv";
    io::write_csv(artifacts.record, csv.string());
    artifacts.files.push_back(csv.filename().string());

    if (cfg.observables.distribution) {
        const auto window = distribution_window(cfg, spec);
        int idx = 0;
        for (const auto& [t, s] : snapshots) {
            auto dist = obs::photon_distribution(s, spec, window,
                                                 cfg.observables.distribution->grid);
            const fs::path file =
                out_dir / ("distribution_variational_" + std::to_string(idx++) + ".csv");
            write_distribution_csv(dist, spec.n_modes(), file);
            artifacts.files.push_back(file.filename().string());
        }
    }
    return artifacts;
}

inline EngineArtifacts run_semiclassical(const io::RunConfig& cfg, const model::ModelSpec& spec,
                                         const Eigen::VectorXcd& psi0, const fs::path& out_dir) {
    EngineArtifacts artifacts;
    const auto times = sample_times(cfg.integration);
    const double h = cfg.integration.dt / cfg.engines.sc_substeps;
    const double t_final = times.back();
    auto series = sc::propagate_us(spec, t_final, h);

    io::TrajectoryRecord record;
    record.metadata["engine"] = "semiclassical";
    record.metadata["grid_step"] = io::detail::format_value(h);
    if (cfg.observables.populations)
        for (int j = 0; j < spec.n_sys; ++j) record.columns.push_back("P_" + std::to_string(j + 1));
    for (int k = 0; k < spec.n_modes(); ++k) {
        if (cfg.observables.delta_n) record.columns.push_back("delta_n_" + std::to_string(k + 1));
        if (cfg.observables.delta_var)
            record.columns.push_back("delta_var_" + std::to_string(k + 1));
    }
    record.columns.push_back("norm_error");

    std::vector<sc::FieldResponse> responses;
    if (cfg.observables.delta_n || cfg.observables.delta_var)
        for (int k = 0; k < spec.n_modes(); ++k)
            responses.push_back(sc::field_response(series, spec, psi0, k));

    const long long stride =
        static_cast<long long>(cfg.integration.sample_stride) * cfg.engines.sc_substeps;
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(spec.n_sys, spec.n_sys);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const long long grid_idx = static_cast<long long>(i) * stride;
        const auto& u = series.us[static_cast<std::size_t>(grid_idx)];
        std::vector<double> row;
        if (cfg.observables.populations)
            for (int j = 0; j < spec.n_sys; ++j) row.push_back(std::norm((u.row(j) * psi0).value()));
        for (int k = 0; k < spec.n_modes(); ++k) {
            if (cfg.observables.delta_n)
                row.push_back(responses[static_cast<std::size_t>(k)].delta_n[static_cast<std::size_t>(grid_idx)]);
            if (cfg.observables.delta_var)
                row.push_back(responses[static_cast<std::size_t>(k)].delta_var[static_cast<std::size_t>(grid_idx)]);
        }
        row.push_back((u.adjoint() * u - eye).cwiseAbs().maxCoeff());
        record.time.push_back(times[i]);
        record.rows.push_back(std::move(row));
    }

    const fs::path csv = out_dir / "semiclassical.csv";
    io::write_csv(record, csv.string());
    artifacts.files.push_back(csv.filename().string());
    artifacts.record = std::move(record);
    return artifacts;
}

inline EngineArtifacts run_oracle(const io::RunConfig& cfg, const model::ModelSpec& spec,
                                  const Eigen::VectorXcd& psi0, const fs::path& out_dir) {
    EngineArtifacts artifacts;
    oracle::FockConfig fock = oracle::default_fock_config(spec);
    if (!cfg.engines.oracle_n_max.empty()) {
        if (cfg.engines.oracle_n_max.size() != fock.n_max.size())
            throw ConfigError("config: oracle_n_max size mismatch");
        fock.n_max = cfg.engines.oracle_n_max;
    }
    fock.dense_cap = cfg.engines.oracle_dense_cap;
    fock.krylov_dim = cfg.engines.oracle_krylov_dim;

    const auto times = sample_times(cfg.integration);
    std::vector<double> snapshot_times;
    if (cfg.observables.distribution) snapshot_times = cfg.observables.distribution->times;
    const auto run = oracle::propagate_exact(spec, psi0, fock, times, snapshot_times);

    io::TrajectoryRecord record;
    record.metadata["engine"] = "oracle";
    if (cfg.observables.populations)
        for (int j = 0; j < spec.n_sys; ++j) record.columns.push_back("P_" + std::to_string(j + 1));
    for (int k = 0; k < spec.n_modes(); ++k) {
        if (cfg.observables.delta_n) record.columns.push_back("delta_n_" + std::to_string(k + 1));
        if (cfg.observables.delta_var)
            record.columns.push_back("delta_var_" + std::to_string(k + 1));
    }
    record.columns.push_back("norm_error");
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::vector<double> row;
        if (cfg.observables.populations)
            for (int j = 0; j < spec.n_sys; ++j) row.push_back(run.populations(static_cast<Eigen::Index>(i), j));
        for (int k = 0; k < spec.n_modes(); ++k) {
            const double a = spec.modes[static_cast<std::size_t>(k)].alpha_abs;
            if (cfg.observables.delta_n)
                row.push_back(run.mean_photon(static_cast<Eigen::Index>(i), k) - a * a);
            if (cfg.observables.delta_var)
                row.push_back(run.photon_variance(static_cast<Eigen::Index>(i), k) - a * a);
        }
        row.push_back(run.norm_error[i]);
        record.time.push_back(times[i]);
        record.rows.push_back(std::move(row));
    }

    const fs::path csv = out_dir / "oracle.csv";
    io::write_csv(record, csv.string());
    artifacts.files.push_back(csv.filename().string());

    if (cfg.observables.distribution) {
        const auto window = distribution_window(cfg, spec);
        for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
            auto dist = oracle::distribution_from_fock(spec, fock, run.snapshots[i], window,
                                                       run.snapshot_times[i]);
            const fs::path file = out_dir / ("distribution_oracle_" + std::to_string(i) + ".csv");
            write_distribution_csv(dist, spec.n_modes(), file);
            artifacts.files.push_back(file.filename().string());
        }
    }
    artifacts.record = std::move(record);
    return artifacts;
}

}  // namespace detail

struct RunOutcome {
    int exit_code{kExitOk};
    std::string failure;
    fs::path directory;
};

// Executes all enabled engines into the configured directory and writes a
// manifest. Engine aborts preserve partial outputs and annotate the manifest.
inline RunOutcome run_config(const io::RunConfig& cfg, bool trajectories = true,
                             bool distributions = true) {
    RunOutcome outcome;
    const fs::path out_dir = resolve_output_dir(cfg.output.directory);
    fs::create_directories(out_dir);
    outcome.directory = out_dir;

    io::RunConfig effective = cfg;
    if (!distributions) effective.observables.distribution.reset();
    if (!trajectories) {
        effective.observables.populations = false;
        effective.observables.delta_n = false;
        effective.observables.delta_var = false;
    }

    json manifest;
    manifest["format"] = kConfigFormat;
    manifest["lmdyn_version"] = kVersion;
    manifest["config"] = cfg.raw;
    manifest["config_hash"] = io::config_hash(cfg.raw);
    manifest["seed"] = cfg.ansatz.seed;
    manifest["status"] = "ok";
    manifest["files"] = json::array();

    const model::ModelSpec spec = io::build_model(cfg.model);
    const Eigen::VectorXcd psi0 = io::initial_system_state(cfg.model, spec);

    auto record_files = [&manifest](const std::string& engine,
                                    const std::vector<std::string>& files) {
        for (const auto& f : files) manifest["files"].push_back({{"engine", engine}, {"name", f}});
    };

    try {
        if (effective.engines.variational) {
            const auto t0 = std::chrono::steady_clock::now();
            auto artifacts = detail::run_variational(effective, spec, psi0, out_dir);
            const auto t1 = std::chrono::steady_clock::now();
            manifest["timing"]["variational_s"] =
                std::chrono::duration<double>(t1 - t0).count();
            record_files("variational", artifacts.files);
        }
        if (effective.engines.semiclassical) {
            const auto t0 = std::chrono::steady_clock::now();
            auto artifacts = detail::run_semiclassical(effective, spec, psi0, out_dir);
            const auto t1 = std::chrono::steady_clock::now();
            manifest["timing"]["semiclassical_s"] =
                std::chrono::duration<double>(t1 - t0).count();
            record_files("semiclassical", artifacts.files);
        }
        if (effective.engines.oracle) {
            const auto t0 = std::chrono::steady_clock::now();
            auto artifacts = detail::run_oracle(effective, spec, psi0, out_dir);
            const auto t1 = std::chrono::steady_clock::now();
            manifest["timing"]["oracle_s"] = std::chrono::duration<double>(t1 - t0).count();
            record_files("oracle", artifacts.files);
        }
    } catch (const NormDriftError& err) {
        outcome.exit_code = kExitEngineError;
        outcome.failure = err.what();
        manifest["status"] = "failed";
        manifest["failure"] = {{"kind", "norm_drift"}, {"time", err.time}, {"message", err.what()}};
    } catch (const SolverFailureError& err) {
        outcome.exit_code = kExitEngineError;
        outcome.failure = err.what();
        manifest["status"] = "failed";
        manifest["failure"] = {{"kind", "solver"}, {"time", err.time}, {"message", err.what()}};
    } catch (const UnitarityError& err) {
        outcome.exit_code = kExitEngineError;
        outcome.failure = err.what();
        manifest["status"] = "failed";
        manifest["failure"] = {{"kind", "unitarity"}, {"time", err.time}, {"message", err.what()}};
    } catch (const TailMassError& err) {
        outcome.exit_code = kExitEngineError;
        outcome.failure = err.what();
        manifest["status"] = "failed";
        manifest["failure"] = {{"kind", "tail_mass"}, {"message", err.what()}};
    } catch (const CapacityError& err) {
        outcome.exit_code = kExitEngineError;
        outcome.failure = err.what();
        manifest["status"] = "failed";
        manifest["failure"] = {{"kind", "capacity"}, {"message", err.what()}};
    }

    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
    return outcome;
}

// Expands the cartesian grid in the config's "sweep" section; each grid point
// runs independently (thread pool) into its own subdirectory.
inline int run_sweep(const io::RunConfig& base) {
    if (!base.raw.contains("sweep") || !base.raw["sweep"].is_object() ||
        base.raw["sweep"].empty())
        throw ConfigError("sweep: config has no sweep section");

    std::vector<std::pair<std::string, std::vector<json>>> axes;
    for (const auto& [key, values] : base.raw["sweep"].items()) {
        if (!values.is_array() || values.empty())
            throw ConfigError("sweep: " + key + " must be a non-empty array");
        axes.emplace_back(key, std::vector<json>(values.begin(), values.end()));
    }

    std::size_t total = 1;
    for (const auto& [key, values] : axes) total *= values.size();

    const fs::path root = resolve_output_dir(base.output.directory);
    fs::create_directories(root);

    struct Job {
        io::RunConfig cfg;
        json overrides;
        std::string name;
        int exit_code{0};
        std::string failure;
    };
    std::vector<Job> jobs;
    for (std::size_t idx = 0; idx < total; ++idx) {
        json doc = base.raw;
        doc.erase("sweep");
        json overrides;
        std::size_t rest = idx;
        for (const auto& [key, values] : axes) {
            const json& value = values[rest % values.size()];
            rest /= values.size();
            // dotted path into the document
            json* node = &doc;
            std::string path = key;
            std::size_t pos;
            while ((pos = path.find('.')) != std::string::npos) {
                node = &(*node)[path.substr(0, pos)];
                path = path.substr(pos + 1);
            }
            (*node)[path] = value;
            overrides[key] = value;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "run_%03zu", idx);
        doc["output"]["directory"] = (root / name).string();
        Job job;
        job.cfg = io::parse_config(doc);
        job.overrides = std::move(overrides);
        job.name = name;
        jobs.push_back(std::move(job));
    }

    const unsigned n_threads =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           std::min<std::size_t>(jobs.size(), 4));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < n_threads; ++w)
        pool.emplace_back([&jobs, &next]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                try {
                    const auto outcome = run_config(jobs[i].cfg);
                    jobs[i].exit_code = outcome.exit_code;
                    jobs[i].failure = outcome.failure;
                } catch (const std::exception& err) {
                    jobs[i].exit_code = kExitEngineError;
                    jobs[i].failure = err.what();
                }
            }
        });
    for (auto& t : pool) t.join();

    json manifest;
    manifest["format"] = kConfigFormat;
    manifest["lmdyn_version"] = kVersion;
    manifest["config_hash"] = io::config_hash(base.raw);
    manifest["runs"] = json::array();
    int exit_code = kExitOk;
    for (const auto& job : jobs) {
        json entry = {{"name", job.name},
                      {"overrides", job.overrides},
                      {"status", job.exit_code == 0 ? "ok" : "failed"}};
        if (job.exit_code != 0) {
            entry["failure"] = job.failure;
            exit_code = kExitEngineError;
        }
        manifest["runs"].push_back(std::move(entry));
    }
    std::ofstream mf(root / "sweep_manifest.json");
    mf << manifest.dump(2) << "\n";
    return exit_code;
}

// Column-wise record comparison; writes a JSON report when out_path is given.
inline int run_compare(const std::string& path_a, const std::string& path_b,
                       const std::vector<std::string>& columns, double tolerance,
                       const std::string& out_path = {}) {
    const auto a = io::read_csv(path_a);
    const auto b = io::read_csv(path_b);
    std::vector<std::string> cols = columns;
    if (cols.empty()) {
        for (const auto& name : a.columns)
            if (b.column_index(name) >= 0 && name != "norm_error") cols.push_back(name);
    }
    const auto report = io::compare(a, b, cols, tolerance);

    json doc;
    doc["tolerance"] = tolerance;
    doc["pass"] = report.pass;
    doc["columns"] = json::array();
    for (const auto& diff : report.diffs) {
        json entry = {{"name", diff.name},
                      {"max_abs", diff.max_abs},
                      {"rms", diff.rms},
                      {"pass", !diff.exceeded}};
        if (diff.exceeded) entry["first_exceedance_time"] = diff.first_exceedance_time;
        doc["columns"].push_back(std::move(entry));
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << doc.dump(2) << "\n";
    } else {
        std::cout << doc.dump(2) << "\n";
    }
    return report.pass ? kExitOk : kExitToleranceFail;
}

}  // namespace lmdyn::cli
