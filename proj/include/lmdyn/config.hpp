// config.hpp — JSON run configuration: parsing, validation, model construction

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmdyn/errors.hpp"
#include "lmdyn/integrator.hpp"
#include "lmdyn/model.hpp"
#include "lmdyn/observables.hpp"

namespace lmdyn::io {

using nlohmann::json;

struct ModelConfig {
    std::string type;                  // jc | rabi | multimode_rabi | dicke
    double omega0{1.0};
    std::vector<double> omega0_list;   // dicke only
    std::vector<model::ModeParams> modes;
    int initial_basis_state{0};
    std::vector<std::complex<double>> psi0;  // optional explicit initial system state
};

struct AnsatzConfig {
    int branches{2};
    double delta_init{1e-3};
    std::uint64_t seed{1};
    double reg{1e-10};
};

struct DistributionConfig {
    std::vector<double> times;
    std::vector<long long> center;   // optional per-mode override
    std::vector<int> halfwidth;      // optional per-mode override
    std::vector<int> grid;           // optional per-mode override
};

struct ObservablesConfig {
    bool populations{true};
    bool delta_n{true};
    bool delta_var{true};
    std::optional<DistributionConfig> distribution;
};

struct EnginesConfig {
    bool variational{false};
    bool semiclassical{false};
    bool oracle{false};
    int sc_substeps{1};
    std::vector<int> oracle_n_max;   // optional cutoff override
    int oracle_dense_cap{10000};
    int oracle_krylov_dim{48};
};

struct OutputConfig {
    std::string directory{"out"};
    std::vector<std::string> formats{"csv"};
};

struct RunConfig {
    ModelConfig model;
    AnsatzConfig ansatz;
    integrator::IntegrationConfig integration;
    ObservablesConfig observables;
    EnginesConfig engines;
    OutputConfig output;
    json raw;  // parsed document, echoed into the manifest
};

namespace detail {

inline double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        throw ConfigError("config: " + where + "." + key + " must be a number");
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("config: " + key + " must be a number");
    return j[key].get<double>();
}

// Modes accept either a coupling constant g or the drive amplitude Omega=g|α|,
// and either alpha_sq or alpha_abs; stored canonically as (g, |α|).
inline model::ModeParams parse_mode(const json& j, const std::string& where) {
    model::ModeParams p;
    p.omega = require_number(j, "omega", where);
    if (j.contains("alpha_sq") && j.contains("alpha_abs"))
        throw ConfigError("config: " + where + " must not set both alpha_sq and alpha_abs");
    if (j.contains("alpha_sq")) {
        const double a2 = j["alpha_sq"].get<double>();
        if (a2 < 0.0) throw ConfigError("config: " + where + ".alpha_sq must be >= 0");
        p.alpha_abs = std::sqrt(a2);
    } else if (j.contains("alpha_abs")) {
        p.alpha_abs = j["alpha_abs"].get<double>();
    }
    const bool has_g = j.contains("g");
    const bool has_rabi = j.contains("Omega");
    if (has_g && has_rabi)
        throw ConfigError("config: " + where + " must set exactly one of g or Omega");
    if (has_g) {
        p.g = j["g"].get<double>();
    } else if (has_rabi) {
        const double rabi = j["Omega"].get<double>();
        if (rabi == 0.0)
            p.g = 0.0;
        else if (p.alpha_abs <= 0.0)
            throw ConfigError("config: " + where + " has Omega != 0 but |alpha| = 0");
        else
            p.g = rabi / p.alpha_abs;
    }
    p.phi = number_or(j, "phi", 0.0);
    return p;
}

}  // namespace detail

inline RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    cfg.raw = doc;

    if (!doc.contains("model") || !doc["model"].is_object())
        throw ConfigError("config: missing model section");
    const json& jm = doc["model"];
    if (!jm.contains("type") || !jm["type"].is_string())
        throw ConfigError("config: model.type must be a string");
    cfg.model.type = jm["type"].get<std::string>();

    if (cfg.model.type == "jc" || cfg.model.type == "rabi") {
        cfg.model.omega0 = detail::require_number(jm, "omega0", "model");
        cfg.model.modes.push_back(detail::parse_mode(jm, "model"));
    } else if (cfg.model.type == "multimode_rabi") {
        cfg.model.omega0 = detail::require_number(jm, "omega0", "model");
        if (!jm.contains("modes") || !jm["modes"].is_array() || jm["modes"].empty())
            throw ConfigError("config: model.modes must be a non-empty array");
        int k = 0;
        for (const auto& entry : jm["modes"])
            cfg.model.modes.push_back(detail::parse_mode(entry, "model.modes[" + std::to_string(k++) + "]"));
    } else if (cfg.model.type == "dicke") {
        if (!jm.contains("omega0_list") || !jm["omega0_list"].is_array() ||
            jm["omega0_list"].empty())
            throw ConfigError("config: model.omega0_list must be a non-empty array");
        for (const auto& w : jm["omega0_list"]) cfg.model.omega0_list.push_back(w.get<double>());
        cfg.model.modes.push_back(detail::parse_mode(jm, "model"));
    } else {
        throw ConfigError("config: unknown model.type '" + cfg.model.type + "'");
    }
    cfg.model.initial_basis_state =
        static_cast<int>(detail::number_or(jm, "initial_basis_state", 0.0));
    if (jm.contains("psi0_real")) {
        const auto re = jm["psi0_real"].get<std::vector<double>>();
        std::vector<double> im(re.size(), 0.0);
        if (jm.contains("psi0_imag")) im = jm["psi0_imag"].get<std::vector<double>>();
        if (im.size() != re.size())
            throw ConfigError("config: psi0_real and psi0_imag length mismatch");
        for (std::size_t i = 0; i < re.size(); ++i) cfg.model.psi0.emplace_back(re[i], im[i]);
    }

    if (doc.contains("ansatz")) {
        const json& ja = doc["ansatz"];
        cfg.ansatz.branches = static_cast<int>(detail::number_or(ja, "branches", 2.0));
        cfg.ansatz.delta_init = detail::number_or(ja, "delta_init", 1e-3);
        cfg.ansatz.seed = static_cast<std::uint64_t>(detail::number_or(ja, "seed", 1.0));
        cfg.ansatz.reg = detail::number_or(ja, "reg", 1e-10);
        if (cfg.ansatz.branches < 1) throw ConfigError("config: ansatz.branches must be >= 1");
        if (cfg.ansatz.reg < 0.0) throw ConfigError("config: ansatz.reg must be >= 0");
    }

    if (!doc.contains("integration") || !doc["integration"].is_object())
        throw ConfigError("config: missing integration section");
    const json& ji = doc["integration"];
    cfg.integration.dt = detail::number_or(ji, "dt", 0.01);
    cfg.integration.t_final = detail::require_number(ji, "t_final", "integration");
    cfg.integration.sample_stride =
        static_cast<int>(detail::number_or(ji, "sample_stride", 1.0));
    cfg.integration.norm_tolerance = detail::number_or(ji, "norm_tolerance", 1e-6);
    if (ji.contains("auto_halve_dt")) cfg.integration.auto_halve_dt = ji["auto_halve_dt"].get<bool>();
    cfg.integration.reg = cfg.ansatz.reg;
    if (!(cfg.integration.dt > 0.0)) throw ConfigError("config: integration.dt must be > 0");
    if (cfg.integration.t_final < 0.0) throw ConfigError("config: integration.t_final must be >= 0");
    if (cfg.integration.sample_stride < 1)
        throw ConfigError("config: integration.sample_stride must be >= 1");

    if (doc.contains("observables")) {
        const json& jo = doc["observables"];
        if (jo.contains("populations")) cfg.observables.populations = jo["populations"].get<bool>();
        if (jo.contains("delta_n")) cfg.observables.delta_n = jo["delta_n"].get<bool>();
        if (jo.contains("delta_var")) cfg.observables.delta_var = jo["delta_var"].get<bool>();
        if (jo.contains("distribution")) {
            const json& jd = jo["distribution"];
            DistributionConfig dist;
            if (!jd.contains("times") || !jd["times"].is_array())
                throw ConfigError("config: observables.distribution.times must be an array");
            for (const auto& t : jd["times"]) dist.times.push_back(t.get<double>());
            if (jd.contains("center"))
                for (const auto& c : jd["center"]) dist.center.push_back(c.get<long long>());
            if (jd.contains("halfwidth"))
                for (const auto& w : jd["halfwidth"]) dist.halfwidth.push_back(w.get<int>());
            if (jd.contains("grid"))
                for (const auto& g : jd["grid"]) dist.grid.push_back(g.get<int>());
            cfg.observables.distribution = std::move(dist);
        }
    }

    if (!doc.contains("engines") || !doc["engines"].is_object())
        throw ConfigError("config: missing engines section");
    const json& je = doc["engines"];
    if (je.contains("variational")) cfg.engines.variational = je["variational"].get<bool>();
    if (je.contains("semiclassical")) cfg.engines.semiclassical = je["semiclassical"].get<bool>();
    if (je.contains("oracle")) cfg.engines.oracle = je["oracle"].get<bool>();
    cfg.engines.sc_substeps = static_cast<int>(detail::number_or(je, "sc_substeps", 1.0));
    if (cfg.engines.sc_substeps < 1) throw ConfigError("config: engines.sc_substeps must be >= 1");
    if (je.contains("oracle_n_max"))
        for (const auto& n : je["oracle_n_max"]) cfg.engines.oracle_n_max.push_back(n.get<int>());
    cfg.engines.oracle_dense_cap =
        static_cast<int>(detail::number_or(je, "oracle_dense_cap", 10000.0));
    cfg.engines.oracle_krylov_dim =
        static_cast<int>(detail::number_or(je, "oracle_krylov_dim", 48.0));
    if (!cfg.engines.variational && !cfg.engines.semiclassical && !cfg.engines.oracle)
        throw ConfigError("config: at least one engine must be enabled");

    if (doc.contains("output")) {
        const json& jout = doc["output"];
        if (jout.contains("directory")) cfg.output.directory = jout["directory"].get<std::string>();
        if (jout.contains("formats"))
            cfg.output.formats = jout["formats"].get<std::vector<std::string>>();
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& err) {
        throw ConfigError("config: parse error in " + path + ": " + err.what());
    }
    return parse_config(doc);
}

inline model::ModelSpec build_model(const ModelConfig& mc) {
    if (mc.type == "jc") {
        const auto& m = mc.modes.at(0);
        return model::build_jc(mc.omega0, m.omega, m.g, m.alpha_abs, m.phi);
    }
    if (mc.type == "rabi") {
        const auto& m = mc.modes.at(0);
        return model::build_rabi(mc.omega0, m.omega, m.g, m.alpha_abs, m.phi);
    }
    if (mc.type == "multimode_rabi") return model::build_multimode_rabi(mc.omega0, mc.modes);
    if (mc.type == "dicke") {
        const auto& m = mc.modes.at(0);
        return model::build_dicke(mc.omega0_list, m.omega, m.g, m.alpha_abs, m.phi);
    }
    throw ConfigError("config: unknown model.type '" + mc.type + "'");
}

inline Eigen::VectorXcd initial_system_state(const ModelConfig& mc, const model::ModelSpec& spec) {
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(spec.n_sys);
    if (!mc.psi0.empty()) {
        if (static_cast<int>(mc.psi0.size()) != spec.n_sys)
            throw ConfigError("config: psi0 length does not match the system dimension");
        for (int j = 0; j < spec.n_sys; ++j) psi0(j) = mc.psi0[static_cast<std::size_t>(j)];
        const double nrm = psi0.norm();
        if (nrm <= 0.0) throw ConfigError("config: psi0 must be non-zero");
        psi0 /= nrm;
        return psi0;
    }
    if (mc.initial_basis_state < 0 || mc.initial_basis_state >= spec.n_sys)
        throw ConfigError("config: initial_basis_state out of range");
    psi0(mc.initial_basis_state) = 1.0;
    return psi0;
}

// FNV-1a over the canonical dump of everything except the output section;
// stable across runs of the same semantic configuration.
inline std::string config_hash(const json& doc) {
    json semantic = doc;
    semantic.erase("output");
    const std::string dump = semantic.dump();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace lmdyn::io
