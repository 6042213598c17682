// snse-lab: configuration-driven command line for the spectral stochastic
// flow laboratory.
//
// Subcommands
//   basis-info      eigenvalue table for the configured basis
//   check           cancellation / isometry / martingale / growth suites
//   simulate        one seeded trajectory -> CSV
//   study-v         tempered-log gradient-error convergence table
//   study-h         L^2-error moment table (poly / exp variants)
//   study-bound     level-uniform boundedness table
//   study-prob      tail-frequency table with Wilson intervals
//   study-breckner  strong-norm error functional table
//
// Every table-producing subcommand writes its data file plus manifest.json,
// which embeds the fully resolved configuration (defaults filled, auto
// parameters calibrated).  Passing a manifest back through --config
// reproduces the run byte for byte; the parallelism degree --jobs never
// changes any output byte.
//
// Exit codes: 0 success, 1 failed check or contract violation,
// 2 configuration error, 3 numeric failure (blow-up exclusions included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "snse/config.hpp"
#include "snse/io.hpp"
#include "snse/sha256.hpp"

namespace {

namespace fs = std::filesystem;

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool has_seed = false;
    int jobs = 0;
};

int effective_jobs(const CliOptions& o) {
    if (o.jobs >= 1) return o.jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? static_cast<int>(hw) : 1;
}

snse::ExperimentConfig load_cfg(const CliOptions& o) {
    snse::ExperimentConfig c = snse::load_config_file(o.config_path);
    if (o.has_seed) c.seed = o.seed;
    return c;
}

/// Twelve hex characters of the resolved-config digest; keys every table row
/// to the exact scenario that produced it.
std::string scenario_hash(const nlohmann::json& resolved_config) {
    return snse::sha256_hex(resolved_config.dump()).substr(0, 12);
}

nlohmann::json make_manifest(const std::string& subcommand, const nlohmann::json& resolved_config,
                             const snse::MaterializedScenario& sc,
                             const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["format_version"] = 1;
    m["tool"] = "snse-lab";
    m["subcommand"] = subcommand;
    m["config"] = resolved_config;
    m["seed"] = resolved_config["seed"];
    m["scenario_hash"] = scenario_hash(resolved_config);
    m["basis_sha256"] = sc.basis_sha256;
    m["outputs"] = outputs;
    return m;
}

void write_text_file(const fs::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f.good()) throw snse::ConfigError("cannot write output file: " + path.string());
    f << contents;
}

// ---------------------------------------------------------------------------
// basis-info
// ---------------------------------------------------------------------------

int cmd_basis_info(const CliOptions& o) {
    const snse::ExperimentConfig cfg = load_cfg(o);
    const snse::CachedBasis cached =
        snse::build_or_load_basis(cfg.domain, cfg.n_modes, snse::effective_cache_dir(cfg));
    const snse::StokesBasis& b = cached.basis;

    std::cout << "# domain " << snse::to_string(b.domain.kind) << "  side_length "
              << snse::g17(b.domain.side_length) << "  grid " << b.nodes_per_axis() << "^2\n";
    std::cout << "# modes " << b.dim() << "  lambda_min " << snse::g17(b.lambda_min())
              << "  lambda_max " << snse::g17(b.lambda_max()) << "\n";
    std::cout << "# basis_sha256 " << cached.sha256 << (cached.from_cache ? "  (cache)" : "  (built)")
              << "\n";
    std::cout << "# gram_deviation " << snse::g17(snse::gram_deviation(b)) << "  max_divergence "
              << snse::g17(snse::max_mode_divergence(b)) << "\n";
    if (b.is_periodic()) {
        std::cout << "index,eigenvalue,k1,k2,parity\n";
        for (int k = 0; k < b.dim(); ++k)
            std::cout << k << ',' << snse::g17(b.eigenvalues(k)) << ',' << b.modes[static_cast<std::size_t>(k)].k1
                      << ',' << b.modes[static_cast<std::size_t>(k)].k2 << ','
                      << (b.modes[static_cast<std::size_t>(k)].is_sine ? "sine" : "cosine") << "\n";
    } else {
        std::cout << "index,eigenvalue\n";
        for (int k = 0; k < b.dim(); ++k)
            std::cout << k << ',' << snse::g17(b.eigenvalues(k)) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

struct CheckReport {
    int failed = 0;

    void line(const std::string& name, double value, double bound) {
        const bool ok = value <= bound;
        if (!ok) ++failed;
        std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << "  value " << snse::g17(value)
                  << "  bound " << snse::g17(bound) << "\n";
    }
};

snse::SpectralField unit_random_field(const snse::StokesBasis& basis, std::uint64_t seed,
                                      std::uint64_t stream) {
    snse::PhiloxStream rng(seed, stream);
    snse::SpectralField u = snse::SpectralField::zero(basis.dim());
    for (int k = 0; k < u.dim(); ++k) u.coeffs(k) = rng.next_normal();
    const double h = std::sqrt(basis.norms(u).h_sq);
    if (h > 0.0) u.coeffs /= h;
    return u;
}

int cmd_check(const CliOptions& o) {
    const snse::ExperimentConfig cfg = load_cfg(o);
    const snse::MaterializedScenario sc = snse::materialize(cfg);
    const snse::StokesBasis& basis = *sc.basis;
    const bool torus = basis.is_periodic();
    CheckReport rep;

    // -- cancellation suite -------------------------------------------------
    rep.line("gram_identity_deviation", snse::gram_deviation(basis), torus ? 1e-10 : 1e-6);
    rep.line("max_mode_divergence", snse::max_mode_divergence(basis), torus ? 1e-10 : 1e-8);

    double worst_skew = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const snse::SpectralField u = unit_random_field(basis, cfg.seed, 0x636b00 + 2 * i);
        const snse::SpectralField v = unit_random_field(basis, cfg.seed, 0x636b00 + 2 * i + 1);
        worst_skew = std::max(worst_skew, std::abs(sc.ws->skew_pairing(u, v)));
    }
    // Exact on the dealiased torus; a finite-difference quadrature residual
    // (decaying under grid refinement) on the square.
    rep.line("skew_pairing_unit_pairs", worst_skew, torus ? 1e-10 : 0.5);

    double worst_energy = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const snse::SpectralField u = unit_random_field(basis, cfg.seed, 0x9e7000 + i);
        worst_energy = std::max(worst_energy, sc.ws->interpolation_ratio(u));
    }
    // The advection/dissipation pairing cancels on the torus and is only
    // interpolation-bounded on the square.
    rep.line("energy_pairing_ratio", worst_energy, torus ? 1e-8 : 1.0);

    // -- isometry suite -----------------------------------------------------
    {
        const int K = std::min(basis.dim(), 8);
        const int steps = 32;
        const double dt = 1.0 / steps;
        Eigen::VectorXd ladder(K);
        for (int k = 0; k < K; ++k) ladder(k) = std::pow(basis.eigenvalues(k), -0.5);
        Eigen::MatrixXd scales(steps, K);
        scales = ladder.transpose().replicate(steps, 1);
        const double exact = ladder.squaredNorm(); // sum sigma_k^2 * T, T = 1
        const int paths = 10000;
        double acc = 0.0;
        for (int i = 0; i < paths; ++i) {
            const snse::WienerIncrements w =
                snse::sample_wiener(K, steps, dt, cfg.seed, static_cast<std::uint64_t>(i));
            acc += snse::ito_integral(scales, w).squaredNorm();
        }
        rep.line("ito_isometry_rel_error", std::abs(acc / paths - exact) / exact, 0.05);
    }

    // -- martingale suite ---------------------------------------------------
    {
        // Driftless additive ladder: isolates the stochastic integral from
        // the state feedback, so Doob's constant applies exactly.
        const int K = std::min(basis.dim(), 8);
        const double s0 = cfg.sigma0 > 0.0 ? cfg.sigma0 : 1.0;
        const snse::NoiseModel add =
            snse::make_noise_model(snse::NoiseKind::Additive, basis.eigenvalues, K, s0,
                                   cfg.noise_decay, cfg.cap, cfg.alpha);
        const auto r2 = snse::martingale_moment_ratio(add, basis.eigenvalues, 2, 3000, 64,
                                                      1.0 / 64, cfg.seed + 1);
        rep.line("martingale_p2_doob_ratio", r2.ratio, 4.2);
        const auto r4 = snse::martingale_moment_ratio(add, basis.eigenvalues, 4, 3000, 64,
                                                      1.0 / 64, cfg.seed + 1);
        rep.line("martingale_p4_bdg_ratio", r4.ratio, 10.0);
    }

    // -- growth / Lipschitz suite ------------------------------------------
    {
        const snse::NoiseModel& m = sc.params.noise;
        const int K = m.n_driven();
        const double sig_max = m.sigma.size() > 0 ? m.sigma.maxCoeff() : 0.0;
        for (int j = 0; j <= 2; ++j) {
            double ladder_sq = 0.0;
            for (int k = 0; k < K; ++k)
                ladder_sq += std::pow(basis.eigenvalues(k), j) * m.sigma(k) * m.sigma(k);
            const double ladder = std::sqrt(ladder_sq);
            const auto g =
                snse::verify_noise_growth(m, basis.eigenvalues, j, 200, 2.0, cfg.seed + 2);
            double growth_bound = 0.0, lip_bound = 0.0;
            switch (m.kind) {
                case snse::NoiseKind::Additive:
                    growth_bound = ladder + 1e-12;
                    lip_bound = 1e-15;
                    break;
                case snse::NoiseKind::DiagonalLinear:
                    growth_bound = sig_max + 1e-12;
                    lip_bound = sig_max + 1e-12;
                    break;
                case snse::NoiseKind::SaturatedDiagonal:
                    growth_bound = m.cap * ladder + 1e-12;
                    lip_bound = sig_max + 1e-12;
                    break;
                case snse::NoiseKind::AlphaGrowth:
                    growth_bound =
                        2.0 * ladder * std::max(1.0, std::pow(basis.lambda_min(), -0.5 * j)) +
                        1e-12;
                    lip_bound = -1.0; // sublinear but not globally Lipschitz
                    break;
            }
            const std::string tag = "_j" + std::to_string(j);
            rep.line("noise_growth_ratio" + tag, g.growth_ratio, growth_bound);
            if (lip_bound >= 0.0)
                rep.line("noise_lipschitz_ratio" + tag, g.lipschitz_ratio, lip_bound);
            else
                rep.line("noise_not_globally_lipschitz" + tag, g.globally_lipschitz ? 1.0 : 0.0,
                         0.0);
        }
    }

    if (rep.failed > 0) {
        std::cout << "check: " << rep.failed << " assertion(s) FAILED\n";
        return 1;
    }
    std::cout << "check: all assertions passed\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CliOptions& o) {
    snse::ExperimentConfig cfg = load_cfg(o);
    const snse::MaterializedScenario sc = snse::materialize(cfg);
    const int level = sc.sim_level;
    if (cfg.nonlinear) sc.ws->ensure_tensor(level);

    const snse::SpectralField u0 = snse::resolve_field(cfg.initial, *sc.basis, level);
    const snse::SpectralField f = snse::resolve_field(cfg.forcing, *sc.basis, level);
    const snse::TrajectoryRecord rec =
        snse::simulate(*sc.ws, sc.params.stepper, u0, f, sc.params.noise, cfg.t_final, cfg.seed,
                       0, cfg.record_coeffs);

    const nlohmann::json cfg_json = snse::config_to_json(cfg);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    {
        std::ostringstream os;
        snse::write_trajectory_csv(os, rec);
        write_text_file(dir / "trajectory.csv", os.str());
    }
    write_text_file(dir / "manifest.json",
                    make_manifest("simulate", cfg_json, sc, {"trajectory.csv"}).dump(2) + "\n");

    std::cout << "simulate: level " << level << ", " << rec.recorded() << " states -> "
              << (dir / "trajectory.csv").string() << "\n";
    if (rec.blown_up) {
        std::cerr << "numeric failure: trajectory hit the blow-up guard at t "
                  << snse::g17(rec.times.back())
                  << "; decrease integrator.dt or raise integrator.blow_up_guard\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// studies
// ---------------------------------------------------------------------------

int cmd_study(const std::string& name, const CliOptions& o) {
    snse::ExperimentConfig cfg = load_cfg(o);
    const snse::MaterializedScenario sc = snse::materialize(cfg);
    snse::RunParams p = sc.params;
    const int jobs = effective_jobs(o);

    snse::StudyTable table;
    if (name == "study-v") {
        table = snse::study_v_convergence(*sc.ws, p, sc.levels, sc.reference_level, cfg.epsilon,
                                          cfg.n_samples, jobs);
    } else if (name == "study-h") {
        table = snse::study_h_moments(*sc.ws, p, sc.levels, sc.reference_level, cfg.k_list,
                                      cfg.variant, cfg.k_scale, cfg.n_samples, jobs);
    } else if (name == "study-bound") {
        snse::require_config(!sc.levels.empty(), "study.levels must be nonempty");
        p.u0 = p.u0.truncated(sc.levels.back());
        table = snse::study_log_boundedness(*sc.ws, p, sc.levels, cfg.t_list, cfg.n_samples,
                                            jobs);
    } else if (name == "study-prob") {
        table = snse::study_probability_tail(*sc.ws, p, sc.levels, sc.reference_level, cfg.delta,
                                             cfg.n_samples, jobs);
    } else {
        table = snse::study_breckner(*sc.ws, p, sc.levels, sc.reference_level, cfg.n_samples,
                                     jobs);
    }

    // Bake auto-calibrated parameters into the manifest config so a rerun
    // skips calibration yet lands on identical numbers.
    if (const auto it = table.resolved.find("k_scale"); it != table.resolved.end())
        cfg.k_scale = it->second;
    if (const auto it = table.resolved.find("delta"); it != table.resolved.end())
        cfg.delta = it->second;

    const nlohmann::json cfg_json = snse::config_to_json(cfg);
    const std::string hash = scenario_hash(cfg_json);

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    const std::string stem = "study_" + table.study;
    std::string data_name;
    if (o.format == "json") {
        data_name = stem + ".json";
        write_text_file(dir / data_name, snse::study_to_json(table, hash).dump(2) + "\n");
    } else {
        data_name = stem + ".csv";
        std::ostringstream os;
        snse::write_study_csv(os, table, hash);
        write_text_file(dir / data_name, os.str());
    }
    write_text_file(dir / "manifest.json",
                    make_manifest(name, cfg_json, sc, {data_name}).dump(2) + "\n");

    std::cout << table.study << ": " << table.rows.size() << " rows, scenario " << hash << " -> "
              << (dir / data_name).string() << "\n";
    for (const auto& [key, value] : table.resolved)
        std::cout << "  resolved " << key << " = " << snse::g17(value) << "\n";

    if (table.total_excluded() > 0) {
        std::cerr << "numeric failure: " << table.total_excluded() << " of " << cfg.n_samples
                  << " sample paths hit the blow-up guard and were excluded; decrease "
                     "integrator.dt or raise integrator.blow_up_guard\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral stochastic flow laboratory"};
    app.require_subcommand(1);
    CliOptions opt;

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"basis-info", "print the eigenvalue table of the configured basis"},
        {"check", "run the cancellation/isometry/martingale/growth suites"},
        {"simulate", "integrate one seeded trajectory and write it as CSV"},
        {"study-v", "tempered-log gradient-error convergence study"},
        {"study-h", "L^2-error moment study (poly / exp variants)"},
        {"study-bound", "level-uniform boundedness study"},
        {"study-prob", "tail-frequency study with Wilson intervals"},
        {"study-breckner", "strong-norm error functional study"}};
    for (const auto& [name, desc] : subs) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config_path,
                        "experiment configuration (JSON file or run manifest)")
            ->required();
        sub->add_option("--seed", opt.seed, "override the configured seed")
            ->each([&opt](const std::string&) { opt.has_seed = true; });
        sub->add_option("--jobs", opt.jobs, "worker threads (default: available cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", opt.out_dir, "output directory (default: current)");
        sub->add_option("--format", opt.format, "table format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    }

    CLI11_PARSE(app, argc, argv);
    const std::string name = app.get_subcommands().front()->get_name();

    try {
        if (name == "basis-info") return cmd_basis_info(opt);
        if (name == "check") return cmd_check(opt);
        if (name == "simulate") return cmd_simulate(opt);
        return cmd_study(name, opt);
    } catch (const snse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const snse::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const snse::ContractError& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
