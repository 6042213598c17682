#pragma once

// Experiment configuration: strict JSON schema with typo suggestions,
// default filling, range validation, and materialization into a runnable
// scenario (basis + workspace + run parameters).
//
// Parsing is strict: unknown keys are rejected with a nearest-key
// suggestion, wrong JSON types are rejected with the offending key path, and
// every numeric range is checked up front so that failures happen before any
// expensive work.  A previously written run manifest can be passed wherever
// a config is expected; the embedded "config" object is extracted
// automatically, which makes reruns self-contained.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snse/basis_io.hpp"
#include "snse/bilinear.hpp"
#include "snse/integrator.hpp"
#include "snse/studies.hpp"

namespace snse {

namespace detail {

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline void check_keys(const nlohmann::json& obj, const std::string& path,
                       const std::vector<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end()) continue;
        std::string best;
        int best_d = 4; // suggest only reasonably close names
        for (const std::string& cand : allowed) {
            const int d = edit_distance(item.key(), cand);
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
        std::string msg = "unknown key \"" + (path.empty() ? "" : path + ".") + item.key() + "\"";
        if (!best.empty()) msg += "; did you mean \"" + best + "\"?";
        throw ConfigError(msg);
    }
}

inline const nlohmann::json* find(const nlohmann::json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double as_double(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_number(), "key \"" + path + "\": expected a number");
    return j.get<double>();
}

inline int as_int(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_number_integer(), "key \"" + path + "\": expected an integer");
    return j.get<int>();
}

inline std::uint64_t as_u64(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_number_integer() && (j.is_number_unsigned() || j.get<long long>() >= 0),
                   "key \"" + path + "\": expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

inline bool as_bool(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_boolean(), "key \"" + path + "\": expected true or false");
    return j.get<bool>();
}

inline std::string as_string(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_string(), "key \"" + path + "\": expected a string");
    return j.get<std::string>();
}

inline std::vector<int> as_int_list(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_array(), "key \"" + path + "\": expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_int(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<double> as_double_list(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_array(), "key \"" + path + "\": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Schema structs
// ---------------------------------------------------------------------------

/// Coefficient-vector prescription for initial data or forcing.
struct FieldSpec {
    std::string preset = "zero"; ///< zero | single_mode | spectral | band | coeffs
    double amplitude = 0.0;
    int index = 0;             ///< single_mode
    int modes = 0;             ///< band width
    double decay_power = 2.0;  ///< spectral / band decay exponent
    std::vector<double> values; ///< explicit coefficients
};

struct ExperimentConfig {
    DomainSpec domain;
    int n_modes = 16;
    std::string cache_dir;

    double viscosity = 1.0;
    bool nonlinear = true;
    FieldSpec forcing;
    FieldSpec initial;

    NoiseKind noise_kind = NoiseKind::Additive;
    double sigma0 = 1.0;
    double noise_decay = 2.0;
    int noise_modes = 0; ///< 0 -> reference level
    double cap = 1.0;
    double alpha = 0.5;

    double dt = 1e-3;
    double t_final = 1.0;
    double blow_up_guard = 1e12;
    bool dealias = true;
    int sim_level = 0; ///< 0 -> reference level (simulate subcommand)
    bool record_coeffs = false;

    std::string study_name;
    std::vector<int> levels;
    int reference_level = 0; ///< 0 -> n_modes
    double epsilon = 0.25;
    int n_samples = 100;
    std::vector<int> k_list;
    std::string variant = "poly";
    double k_scale = 0.0; ///< 0 -> pilot calibration
    double delta = 0.0;   ///< 0 -> median initial projection error
    std::vector<double> t_list;

    std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline FieldSpec parse_field(const nlohmann::json& j, const std::string& path) {
    require_config(j.is_object(), "key \"" + path + "\": expected an object");
    check_keys(j, path, {"preset", "amplitude", "index", "modes", "decay_power", "values"});
    FieldSpec f;
    if (const auto* v = find(j, "preset")) f.preset = as_string(*v, path + ".preset");
    require_config(f.preset == "zero" || f.preset == "single_mode" || f.preset == "spectral" ||
                       f.preset == "band" || f.preset == "coeffs",
                   "key \"" + path +
                       ".preset\": expected zero, single_mode, spectral, band or coeffs");
    if (const auto* v = find(j, "amplitude")) f.amplitude = as_double(*v, path + ".amplitude");
    if (const auto* v = find(j, "index")) f.index = as_int(*v, path + ".index");
    if (const auto* v = find(j, "modes")) f.modes = as_int(*v, path + ".modes");
    if (const auto* v = find(j, "decay_power"))
        f.decay_power = as_double(*v, path + ".decay_power");
    if (const auto* v = find(j, "values")) f.values = as_double_list(*v, path + ".values");
    if (f.preset == "coeffs")
        require_config(!f.values.empty(), "key \"" + path + ".values\" is required for coeffs");
    if (f.preset == "single_mode")
        require_config(f.index >= 0, "key \"" + path + ".index\" must be nonnegative");
    if (f.preset == "band")
        require_config(f.modes >= 1, "key \"" + path + ".modes\" must be at least 1");
    return f;
}

inline nlohmann::json field_to_json(const FieldSpec& f) {
    nlohmann::json j;
    j["preset"] = f.preset;
    if (f.preset == "coeffs") {
        j["values"] = f.values;
        return j;
    }
    if (f.preset == "zero") return j;
    j["amplitude"] = f.amplitude;
    if (f.preset == "single_mode") j["index"] = f.index;
    if (f.preset == "band") j["modes"] = f.modes;
    if (f.preset == "spectral" || f.preset == "band") j["decay_power"] = f.decay_power;
    return j;
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
    using detail::as_bool;
    using detail::as_double;
    using detail::as_int;
    using detail::as_string;
    using detail::find;

    require_config(root.is_object(), "config root must be a JSON object");
    detail::check_keys(root, "",
                       {"domain", "basis", "physics", "noise", "integrator", "study", "seed"});
    ExperimentConfig c;

    const auto* dom = find(root, "domain");
    require_config(dom != nullptr && dom->is_object(), "config needs a \"domain\" object");
    detail::check_keys(*dom, "domain", {"kind", "side_length", "grid_points"});
    {
        const auto* kind = find(*dom, "kind");
        require_config(kind != nullptr, "key \"domain.kind\" is required");
        const std::string k = as_string(*kind, "domain.kind");
        if (k == "periodic_torus") {
            c.domain.kind = DomainKind::PeriodicTorus;
            c.domain.side_length = 2.0 * M_PI;
        } else if (k == "dirichlet_square") {
            c.domain.kind = DomainKind::DirichletSquare;
            c.domain.side_length = 1.0;
        } else {
            throw ConfigError(
                "key \"domain.kind\": expected periodic_torus or dirichlet_square");
        }
        if (const auto* v = find(*dom, "side_length"))
            c.domain.side_length = as_double(*v, "domain.side_length");
        if (const auto* v = find(*dom, "grid_points"))
            c.domain.grid_points = as_int(*v, "domain.grid_points");
        c.domain.validate();
    }

    if (const auto* bas = find(root, "basis")) {
        require_config(bas->is_object(), "key \"basis\": expected an object");
        detail::check_keys(*bas, "basis", {"n_modes", "cache_dir"});
        if (const auto* v = find(*bas, "n_modes")) c.n_modes = as_int(*v, "basis.n_modes");
        if (const auto* v = find(*bas, "cache_dir"))
            c.cache_dir = as_string(*v, "basis.cache_dir");
    }
    require_config(c.n_modes >= 1, "basis.n_modes must be positive");

    if (const auto* phy = find(root, "physics")) {
        require_config(phy->is_object(), "key \"physics\": expected an object");
        detail::check_keys(*phy, "physics", {"viscosity", "nonlinear", "forcing", "initial"});
        if (const auto* v = find(*phy, "viscosity"))
            c.viscosity = as_double(*v, "physics.viscosity");
        if (const auto* v = find(*phy, "nonlinear"))
            c.nonlinear = as_bool(*v, "physics.nonlinear");
        if (const auto* v = find(*phy, "forcing"))
            c.forcing = detail::parse_field(*v, "physics.forcing");
        if (const auto* v = find(*phy, "initial"))
            c.initial = detail::parse_field(*v, "physics.initial");
    }
    require_config(c.viscosity > 0.0 && std::isfinite(c.viscosity),
                   "physics.viscosity must be positive");

    if (const auto* noi = find(root, "noise")) {
        require_config(noi->is_object(), "key \"noise\": expected an object");
        detail::check_keys(*noi, "noise",
                           {"kind", "sigma0", "decay_power", "modes", "cap", "alpha"});
        if (const auto* v = find(*noi, "kind"))
            c.noise_kind = parse_noise_kind(as_string(*v, "noise.kind"));
        if (const auto* v = find(*noi, "sigma0")) c.sigma0 = as_double(*v, "noise.sigma0");
        if (const auto* v = find(*noi, "decay_power"))
            c.noise_decay = as_double(*v, "noise.decay_power");
        if (const auto* v = find(*noi, "modes")) c.noise_modes = as_int(*v, "noise.modes");
        if (const auto* v = find(*noi, "cap")) c.cap = as_double(*v, "noise.cap");
        if (const auto* v = find(*noi, "alpha")) c.alpha = as_double(*v, "noise.alpha");
    }
    require_config(c.sigma0 >= 0.0, "noise.sigma0 must be nonnegative");
    require_config(c.noise_decay >= 0.0, "noise.decay_power must be nonnegative");
    require_config(c.cap > 0.0, "noise.cap must be positive");
    require_config(c.alpha >= 0.0 && c.alpha < 1.0, "noise.alpha must lie in [0,1)");

    if (const auto* integ = find(root, "integrator")) {
        require_config(integ->is_object(), "key \"integrator\": expected an object");
        detail::check_keys(*integ, "integrator",
                           {"dt", "t_final", "blow_up_guard", "dealias", "level",
                            "record_coeffs"});
        if (const auto* v = find(*integ, "dt")) c.dt = as_double(*v, "integrator.dt");
        if (const auto* v = find(*integ, "t_final"))
            c.t_final = as_double(*v, "integrator.t_final");
        if (const auto* v = find(*integ, "blow_up_guard"))
            c.blow_up_guard = as_double(*v, "integrator.blow_up_guard");
        if (const auto* v = find(*integ, "dealias")) c.dealias = as_bool(*v, "integrator.dealias");
        if (const auto* v = find(*integ, "level")) c.sim_level = as_int(*v, "integrator.level");
        if (const auto* v = find(*integ, "record_coeffs"))
            c.record_coeffs = as_bool(*v, "integrator.record_coeffs");
    }
    steps_for(c.dt, c.t_final); // validates positivity and divisibility
    require_config(c.blow_up_guard > 0.0, "integrator.blow_up_guard must be positive");

    if (const auto* st = find(root, "study")) {
        require_config(st->is_object(), "key \"study\": expected an object");
        detail::check_keys(*st, "study",
                           {"name", "levels", "reference_level", "epsilon", "n_samples",
                            "k_list", "variant", "k_scale", "delta", "t_list"});
        if (const auto* v = find(*st, "name")) c.study_name = as_string(*v, "study.name");
        if (const auto* v = find(*st, "levels")) c.levels = detail::as_int_list(*v, "study.levels");
        if (const auto* v = find(*st, "reference_level"))
            c.reference_level = as_int(*v, "study.reference_level");
        if (const auto* v = find(*st, "epsilon")) c.epsilon = as_double(*v, "study.epsilon");
        if (const auto* v = find(*st, "n_samples")) c.n_samples = as_int(*v, "study.n_samples");
        if (const auto* v = find(*st, "k_list")) c.k_list = detail::as_int_list(*v, "study.k_list");
        if (const auto* v = find(*st, "variant")) c.variant = as_string(*v, "study.variant");
        if (const auto* v = find(*st, "k_scale")) c.k_scale = as_double(*v, "study.k_scale");
        if (const auto* v = find(*st, "delta")) c.delta = as_double(*v, "study.delta");
        if (const auto* v = find(*st, "t_list"))
            c.t_list = detail::as_double_list(*v, "study.t_list");
    }
    require_config(c.epsilon > 0.0 && c.epsilon < 1.0, "study.epsilon must lie in (0,1)");
    require_config(c.n_samples >= 1, "study.n_samples must be at least 1");
    for (const int k : c.k_list)
        require_config(k >= 1, "study.k_list entries must be at least 1");
    require_config(c.k_scale >= 0.0, "study.k_scale must be nonnegative (0 = auto)");
    require_config(c.delta >= 0.0, "study.delta must be nonnegative (0 = auto)");

    if (const auto* v = find(root, "seed")) c.seed = detail::as_u64(*v, "seed");

    // Cross-field checks that need no basis.
    if (c.reference_level == 0) c.reference_level = c.n_modes;
    require_config(c.reference_level >= 1 && c.reference_level <= c.n_modes,
                   "study.reference_level must lie in [1, basis.n_modes]");
    for (const int l : c.levels)
        require_config(l >= 1 && l <= c.reference_level,
                       "study.levels entries must lie in [1, reference_level]");
    if (c.noise_modes == 0) c.noise_modes = c.reference_level;
    require_config(c.noise_modes >= 1 && c.noise_modes <= c.reference_level,
                   "noise.modes must lie in [1, reference_level]");
    if (c.sim_level == 0) c.sim_level = c.reference_level;
    require_config(c.sim_level >= 1 && c.sim_level <= c.n_modes,
                   "integrator.level must lie in [1, basis.n_modes]");
    for (std::size_t i = 0; i < c.t_list.size(); ++i) {
        require_config(c.t_list[i] > 0.0 && c.t_list[i] <= c.t_final + 1e-12,
                       "study.t_list entries must lie in (0, t_final]");
        if (i > 0)
            require_config(c.t_list[i] > c.t_list[i - 1], "study.t_list must be ascending");
    }
    return c;
}

/// Read a config file; a run manifest (object with "format_version" and
/// "config") is unwrapped to its embedded config.
inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    require_config(in.good(), "cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error in ") + path + ": " + e.what());
    }
    if (j.is_object() && j.contains("format_version") && j.contains("config"))
        return parse_config(j["config"]);
    return parse_config(j);
}

/// Fully resolved config (defaults and auto-selected values materialized);
/// reruns from a manifest parse this and reproduce the run byte for byte.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["domain"] = {{"kind", to_string(c.domain.kind)},
                   {"side_length", c.domain.side_length},
                   {"grid_points", c.domain.grid_points}};
    j["basis"] = {{"n_modes", c.n_modes}, {"cache_dir", c.cache_dir}};
    j["physics"] = {{"viscosity", c.viscosity},
                    {"nonlinear", c.nonlinear},
                    {"forcing", detail::field_to_json(c.forcing)},
                    {"initial", detail::field_to_json(c.initial)}};
    j["noise"] = {{"kind", to_string(c.noise_kind)}, {"sigma0", c.sigma0},
                  {"decay_power", c.noise_decay},   {"modes", c.noise_modes},
                  {"cap", c.cap},                   {"alpha", c.alpha}};
    j["integrator"] = {{"dt", c.dt},
                       {"t_final", c.t_final},
                       {"blow_up_guard", c.blow_up_guard},
                       {"dealias", c.dealias},
                       {"level", c.sim_level},
                       {"record_coeffs", c.record_coeffs}};
    j["study"] = {{"name", c.study_name}, {"levels", c.levels},
                  {"reference_level", c.reference_level}, {"epsilon", c.epsilon},
                  {"n_samples", c.n_samples}, {"k_list", c.k_list},
                  {"variant", c.variant}, {"k_scale", c.k_scale},
                  {"delta", c.delta}, {"t_list", c.t_list}};
    j["seed"] = c.seed;
    return j;
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

inline SpectralField resolve_field(const FieldSpec& f, const StokesBasis& basis, int dim) {
    require_config(dim >= 1 && dim <= basis.dim(), "field resolution: bad dimension");
    SpectralField u = SpectralField::zero(dim);
    if (f.preset == "zero") return u;
    if (f.preset == "coeffs") {
        require_config(static_cast<int>(f.values.size()) <= dim,
                       "field coeffs list longer than the target dimension");
        for (std::size_t k = 0; k < f.values.size(); ++k)
            u.coeffs(static_cast<int>(k)) = f.values[k];
        return u;
    }
    if (f.preset == "single_mode") {
        require_config(f.index < dim, "field index outside the target dimension");
        u.coeffs(f.index) = f.amplitude;
        return u;
    }
    const int band = f.preset == "band" ? std::min(f.modes, dim) : dim;
    const double lam1 = basis.eigenvalues(0);
    for (int k = 0; k < band; ++k)
        u.coeffs(k) = f.amplitude * std::pow(lam1 / basis.eigenvalues(k), f.decay_power);
    return u;
}

/// A config turned into runnable objects.  The basis lives on the heap so
/// the workspace's reference stays valid as the scenario moves.
struct MaterializedScenario {
    std::unique_ptr<StokesBasis> basis;
    std::string basis_sha256;
    bool basis_from_cache = false;
    std::unique_ptr<BilinearWorkspace> ws;
    RunParams params;
    std::vector<int> levels;
    int reference_level = 0;
    int sim_level = 0;
};

inline std::string effective_cache_dir(const ExperimentConfig& c) {
    if (!c.cache_dir.empty()) return c.cache_dir;
    if (const char* env = std::getenv("SNSE_BASIS_CACHE")) return env;
    return "";
}

inline MaterializedScenario materialize(const ExperimentConfig& c) {
    MaterializedScenario s;
    CachedBasis cached = build_or_load_basis(c.domain, c.n_modes, effective_cache_dir(c));
    s.basis = std::make_unique<StokesBasis>(std::move(cached.basis));
    s.basis_sha256 = cached.sha256;
    s.basis_from_cache = cached.from_cache;
    s.ws = std::make_unique<BilinearWorkspace>(*s.basis, c.dealias);

    s.reference_level = c.reference_level;
    s.sim_level = c.sim_level;
    s.levels = c.levels;

    s.params.stepper.viscosity = c.viscosity;
    s.params.stepper.dt = c.dt;
    s.params.stepper.nonlinear = c.nonlinear;
    s.params.stepper.blow_up_guard = c.blow_up_guard;
    s.params.t_final = c.t_final;
    s.params.u0 = resolve_field(c.initial, *s.basis, c.reference_level);
    s.params.forcing = resolve_field(c.forcing, *s.basis, c.reference_level);
    s.params.noise = make_noise_model(c.noise_kind, s.basis->eigenvalues, c.noise_modes, c.sigma0,
                                      c.noise_decay, c.cap, c.alpha);
    s.params.seed = c.seed;
    return s;
}

} // namespace snse
