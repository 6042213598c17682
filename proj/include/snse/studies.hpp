#pragma once

// Monte Carlo convergence and boundedness studies over coupled multilevel
// simulations.
//
// Every study reduces to the same pattern: per sample, advance all requested
// truncation levels plus the reference level against one shared increment
// matrix, form the level-error trajectories against the reference, apply a
// moment functional to a pathwise norm statistic, and average across the
// ensemble.  A sample whose trajectory (at any level) hits the blow-up guard
// is excluded from every cell of the study; callers must treat a nonzero
// exclusion count as failure of the study.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "snse/integrator.hpp"
#include "snse/io.hpp"
#include "snse/moments.hpp"

namespace snse {

/// Everything below the basis level that defines one stochastic scenario.
struct RunParams {
    StepperOptions stepper;
    double t_final = 1.0;
    SpectralField u0;      ///< dim = reference level
    SpectralField forcing; ///< coefficient vector, constant in time
    NoiseModel noise;
    std::uint64_t seed = 0;
};

struct StudyRow {
    std::string metric;
    int level = 0;
    double t = 0.0;
    double param = 0.0;
    CellStats stats;
};

struct StudyTable {
    std::string study;
    std::vector<StudyRow> rows;
    std::map<std::string, double> resolved; ///< auto-calibrated parameters

    int total_excluded() const {
        int worst = 0;
        for (const StudyRow& r : rows) worst = std::max(worst, r.stats.n_excluded);
        return worst;
    }
};

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_study_csv(std::ostream& os, const StudyTable& t,
                            const std::string& scenario_hash) {
    os << "study,scenario_hash,metric,level,T,param,n_samples,mean,ci_halfwidth,min,max,excluded\n";
    for (const StudyRow& r : t.rows) {
        os << t.study << ',' << scenario_hash << ',' << r.metric << ',' << r.level << ','
           << g17(r.t) << ',' << g17(r.param) << ',' << r.stats.n_kept << ',' << g17(r.stats.mean)
           << ',' << g17(r.stats.ci_halfwidth) << ',' << g17(r.stats.min) << ','
           << g17(r.stats.max) << ',' << r.stats.n_excluded << "\n";
    }
}

inline nlohmann::json study_to_json(const StudyTable& t, const std::string& scenario_hash) {
    nlohmann::json rows = nlohmann::json::array();
    for (const StudyRow& r : t.rows) {
        rows.push_back({{"study", t.study},
                        {"scenario_hash", scenario_hash},
                        {"metric", r.metric},
                        {"level", r.level},
                        {"T", r.t},
                        {"param", r.param},
                        {"n_samples", r.stats.n_kept},
                        {"mean", r.stats.mean},
                        {"ci_halfwidth", r.stats.ci_halfwidth},
                        {"min", r.stats.min},
                        {"max", r.stats.max},
                        {"excluded", r.stats.n_excluded}});
    }
    nlohmann::json out;
    out["study"] = t.study;
    out["rows"] = rows;
    out["resolved"] = t.resolved;
    return out;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

namespace detail {

/// Number of error rows for a run list `all` built from user `levels`.
/// Listing the reference level itself requests an explicit self-difference
/// row: the reference compared against itself, identically zero (one for
/// exponential functionals), which anchors reports and costs nothing.
inline int error_row_count(const std::vector<int>& all, const std::vector<int>& levels,
                           int n_ref) {
    return static_cast<int>(all.size()) - (levels.back() == n_ref ? 0 : 1);
}

/// levels must be ascending, distinct, inside [1, n_ref]; returns the run
/// list with the reference appended (unless already present as the last).
inline std::vector<int> levels_with_reference(const std::vector<int>& levels, int n_ref,
                                              int basis_dim) {
    require_config(!levels.empty(), "study.levels must be nonempty");
    require_config(n_ref >= 1 && n_ref <= basis_dim,
                   "study.reference_level must lie in [1, basis dimension]");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        require_config(levels[i] >= 1 && levels[i] <= n_ref,
                       "study.levels entries must lie in [1, reference_level]");
        if (i > 0)
            require_config(levels[i] > levels[i - 1], "study.levels must be strictly ascending");
    }
    std::vector<int> all = levels;
    if (all.back() != n_ref) all.push_back(n_ref);
    return all;
}

/// Tensor slices must exist before the workspace is shared across workers.
inline void prepare_tensors(BilinearWorkspace& ws, const std::vector<int>& levels,
                            bool nonlinear) {
    if (!nonlinear) return;
    for (const int n : levels) ws.ensure_tensor(n);
}

inline double trapezoid(const std::vector<double>& y, double dt) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dt;
}

inline double max_of(const std::vector<double>& y) {
    return *std::max_element(y.begin(), y.end());
}

/// Largest sup_t |u|_H across pilot reference runs, used to temper the
/// exponential functionals: k_scale = 4 * max_path sup_t |u(t)|_H.
inline double calibrate_k_scale(const BilinearWorkspace& ws, const RunParams& p, int n_ref,
                                int pilot_samples) {
    double worst = 0.0;
    int kept = 0;
    for (int i = 0; i < pilot_samples; ++i) {
        const TrajectoryRecord rec =
            simulate(ws, p.stepper, p.u0.truncated(n_ref), p.forcing, p.noise, p.t_final, p.seed,
                     static_cast<std::uint64_t>(i), false);
        if (rec.blown_up) continue;
        ++kept;
        worst = std::max(worst, std::sqrt(max_of(rec.h_sq)));
    }
    require_numeric(kept > 0, "k_scale pilot: every pilot path hit the blow-up guard");
    return std::max(4.0 * worst, 1e-8);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Tempered-logarithmic gradient-norm convergence: per level n the cells are
///   sup_logpow_err_v :  E[ (log(1 + sup_t |u_ref - u_n|_V^2))^{1-epsilon} ]
///   err_v_sq_final   :  E[ |u_ref(T) - u_n(T)|_V^2 ]
inline StudyTable study_v_convergence(BilinearWorkspace& ws, const RunParams& p,
                                      const std::vector<int>& levels, int n_ref, double epsilon,
                                      int n_samples, int jobs) {
    MomentFunctional phi{FunctionalKind::LogPow, epsilon};
    phi.validate();
    const std::vector<int> all = detail::levels_with_reference(levels, n_ref, ws.basis().dim());
    require_config(p.u0.dim() == n_ref, "initial state must live at the reference level");
    detail::prepare_tensors(ws, all, p.stepper.nonlinear);

    const int n_err = detail::error_row_count(all, levels, n_ref);
    const int n_cells = 2 * n_err;
    auto sample_fn = [&](std::uint64_t stream) {
        SampleOutcome out;
        const CoupledRun run = simulate_coupled(ws, p.stepper, p.u0, p.forcing, p.noise,
                                                p.t_final, all, p.seed, stream, true);
        for (const TrajectoryRecord& r : run.records)
            if (r.blown_up) {
                out.excluded = true;
                return out;
            }
        out.values.reserve(static_cast<std::size_t>(n_cells));
        for (int l = 0; l < n_err; ++l) {
            const ErrorTrajectory e =
                error_trajectory(ws.basis(), run.reference(), run.records[static_cast<std::size_t>(l)]);
            out.values.push_back(phi(detail::max_of(e.v_sq)));
            out.values.push_back(e.v_sq.back());
        }
        return out;
    };
    const std::vector<CellStats> cells = monte_carlo_cells(sample_fn, n_samples, n_cells, jobs);

    StudyTable t;
    t.study = "v_convergence";
    for (int l = 0; l < n_err; ++l) {
        t.rows.push_back({"sup_logpow_err_v", all[static_cast<std::size_t>(l)], p.t_final, epsilon,
                          cells[static_cast<std::size_t>(2 * l)]});
        t.rows.push_back({"err_v_sq_final", all[static_cast<std::size_t>(l)], p.t_final, epsilon,
                          cells[static_cast<std::size_t>(2 * l + 1)]});
    }
    return t;
}

/// Level-uniform boundedness of E[log(1 + sup_{s<=T} |u_n|_V^2)] across
/// truncation levels and horizons.  Uses the state itself (no differences),
/// one run per level per sample, all levels sharing increments.
inline StudyTable study_log_boundedness(BilinearWorkspace& ws, const RunParams& p,
                                        const std::vector<int>& levels,
                                        const std::vector<double>& t_list, int n_samples,
                                        int jobs) {
    const std::vector<int> all =
        detail::levels_with_reference(levels, levels.back(), ws.basis().dim());
    require_config(p.u0.dim() == levels.back(), "initial state must live at the largest level");
    require_config(!t_list.empty(), "study.t_list must be nonempty");
    const int steps = steps_for(p.stepper.dt, p.t_final);
    std::vector<int> t_idx;
    for (const double t : t_list) {
        const int idx = static_cast<int>(std::llround(t / p.stepper.dt));
        require_config(idx >= 1 && idx <= steps &&
                           std::abs(idx * p.stepper.dt - t) <= 1e-9 * std::max(1.0, t),
                       "study.t_list entries must be multiples of dt inside (0, t_final]");
        t_idx.push_back(idx);
    }
    detail::prepare_tensors(ws, all, p.stepper.nonlinear);

    const MomentFunctional phi{FunctionalKind::Log};
    const int n_levels = static_cast<int>(all.size());
    const int n_cells = n_levels * static_cast<int>(t_list.size());
    auto sample_fn = [&](std::uint64_t stream) {
        SampleOutcome out;
        const CoupledRun run = simulate_coupled(ws, p.stepper, p.u0, p.forcing, p.noise,
                                                p.t_final, all, p.seed, stream, false);
        for (const TrajectoryRecord& r : run.records)
            if (r.blown_up) {
                out.excluded = true;
                return out;
            }
        out.values.reserve(static_cast<std::size_t>(n_cells));
        for (const TrajectoryRecord& r : run.records) {
            double running = 0.0;
            std::size_t pos = 0;
            for (const int idx : t_idx) {
                for (; pos <= static_cast<std::size_t>(idx); ++pos)
                    running = std::max(running, r.v_sq[pos]);
                out.values.push_back(phi(running));
            }
        }
        return out;
    };
    const std::vector<CellStats> cells = monte_carlo_cells(sample_fn, n_samples, n_cells, jobs);

    StudyTable t;
    t.study = "log_boundedness";
    int c = 0;
    for (const int n : all)
        for (const double horizon : t_list)
            t.rows.push_back({"log_sup_v", n, horizon, 0.0, cells[static_cast<std::size_t>(c++)]});
    return t;
}

/// Tail frequencies P(sup_t |u_ref - u_n|_V^2 >= delta) with Wilson score
/// confidence intervals.  delta <= 0 selects the median initial projection
/// error across the requested levels.
inline StudyTable study_probability_tail(BilinearWorkspace& ws, const RunParams& p,
                                         const std::vector<int>& levels, int n_ref, double delta,
                                         int n_samples, int jobs) {
    const std::vector<int> all = detail::levels_with_reference(levels, n_ref, ws.basis().dim());
    require_config(p.u0.dim() == n_ref, "initial state must live at the reference level");
    detail::prepare_tensors(ws, all, p.stepper.nonlinear);

    double delta_used = delta;
    if (delta_used <= 0.0) {
        std::vector<double> tails;
        for (std::size_t l = 0; l + 1 < all.size(); ++l) {
            double tail = 0.0;
            for (int k = all[l]; k < n_ref; ++k)
                tail += ws.basis().eigenvalues(k) * p.u0.coeffs(k) * p.u0.coeffs(k);
            tails.push_back(tail);
        }
        std::sort(tails.begin(), tails.end());
        const std::size_t m = tails.size();
        delta_used = (m % 2 == 1) ? tails[m / 2] : 0.5 * (tails[m / 2 - 1] + tails[m / 2]);
        require_config(delta_used > 0.0,
                       "auto threshold came out nonpositive; give study.delta explicitly");
    }

    const int n_err = detail::error_row_count(all, levels, n_ref);
    auto sample_fn = [&](std::uint64_t stream) {
        SampleOutcome out;
        const CoupledRun run = simulate_coupled(ws, p.stepper, p.u0, p.forcing, p.noise,
                                                p.t_final, all, p.seed, stream, true);
        for (const TrajectoryRecord& r : run.records)
            if (r.blown_up) {
                out.excluded = true;
                return out;
            }
        for (int l = 0; l < n_err; ++l) {
            const ErrorTrajectory e =
                error_trajectory(ws.basis(), run.reference(), run.records[static_cast<std::size_t>(l)]);
            out.values.push_back(detail::max_of(e.v_sq) >= delta_used ? 1.0 : 0.0);
        }
        return out;
    };
    std::vector<CellStats> cells = monte_carlo_cells(sample_fn, n_samples, n_err, jobs);
    // Binomial cells: replace the normal-theory interval with Wilson's.
    for (CellStats& s : cells) {
        if (s.n_kept == 0) continue;
        const int successes = static_cast<int>(std::llround(s.mean * s.n_kept));
        const auto [lo, hi] = wilson_interval(successes, s.n_kept);
        s.ci_halfwidth = std::max(hi - s.mean, s.mean - lo);
    }

    StudyTable t;
    t.study = "probability_tail";
    t.resolved["delta"] = delta_used;
    for (int l = 0; l < n_err; ++l)
        t.rows.push_back({"freq_sup_err_v_ge_delta", all[static_cast<std::size_t>(l)], p.t_final,
                          delta_used, cells[static_cast<std::size_t>(l)]});
    return t;
}

/// L^2-error moments.  Variants:
///   poly        E[ sup_t |err|_H^{2k} ] for each k in k_list
///   exp_bounded E[ exp( sup_t |err|_H / k_scale ) ]  (bounded noise only)
///   exp_alpha   E[ exp( sup_t |err|_H^{2(1-alpha)} / k_scale ) ]
///                                                    (alpha_growth noise only)
/// k_scale <= 0 requests pilot calibration from the reference trajectories.
inline StudyTable study_h_moments(BilinearWorkspace& ws, const RunParams& p,
                                  const std::vector<int>& levels, int n_ref,
                                  const std::vector<int>& k_list, const std::string& variant,
                                  double k_scale, int n_samples, int jobs) {
    const std::vector<int> all = detail::levels_with_reference(levels, n_ref, ws.basis().dim());
    require_config(p.u0.dim() == n_ref, "initial state must live at the reference level");
    detail::prepare_tensors(ws, all, p.stepper.nonlinear);

    StudyTable t;
    std::vector<MomentFunctional> funcs;
    std::vector<double> params;
    if (variant == "poly") {
        require_config(!k_list.empty(), "study.k_list must be nonempty for the poly variant");
        for (const int k : k_list) {
            MomentFunctional f{FunctionalKind::Poly};
            f.power = k;
            f.validate();
            funcs.push_back(f);
            params.push_back(static_cast<double>(k));
        }
        t.study = "h_moments_poly";
    } else if (variant == "exp_bounded") {
        require_config(p.noise.is_bounded(),
                       "exp_bounded moments require a bounded noise model (additive or "
                       "saturated_diagonal)");
        const double ks =
            k_scale > 0.0 ? k_scale
                          : detail::calibrate_k_scale(ws, p, n_ref, std::min(100, n_samples));
        MomentFunctional f{FunctionalKind::Exp};
        f.k_scale = ks;
        f.validate();
        funcs.push_back(f);
        params.push_back(ks);
        t.study = "h_moments_exp_bounded";
        t.resolved["k_scale"] = ks;
    } else if (variant == "exp_alpha") {
        require_config(p.noise.kind == NoiseKind::AlphaGrowth,
                       "exp_alpha moments require the alpha_growth noise model");
        const double ks =
            k_scale > 0.0 ? k_scale
                          : detail::calibrate_k_scale(ws, p, n_ref, std::min(100, n_samples));
        MomentFunctional f{FunctionalKind::ExpAlpha};
        f.k_scale = ks;
        f.alpha = p.noise.alpha;
        f.validate();
        funcs.push_back(f);
        params.push_back(p.noise.alpha);
        t.study = "h_moments_exp_alpha";
        t.resolved["k_scale"] = ks;
    } else {
        throw ConfigError("unknown study.variant \"" + variant +
                          "\"; expected poly, exp_bounded or exp_alpha");
    }

    const int n_err = detail::error_row_count(all, levels, n_ref);
    const int n_funcs = static_cast<int>(funcs.size());
    const int n_cells = n_err * n_funcs;
    auto sample_fn = [&](std::uint64_t stream) {
        SampleOutcome out;
        const CoupledRun run = simulate_coupled(ws, p.stepper, p.u0, p.forcing, p.noise,
                                                p.t_final, all, p.seed, stream, true);
        for (const TrajectoryRecord& r : run.records)
            if (r.blown_up) {
                out.excluded = true;
                return out;
            }
        for (int l = 0; l < n_err; ++l) {
            const ErrorTrajectory e =
                error_trajectory(ws.basis(), run.reference(), run.records[static_cast<std::size_t>(l)]);
            const double sup_h = detail::max_of(e.h_sq);
            for (const MomentFunctional& f : funcs) out.values.push_back(f(sup_h));
        }
        return out;
    };
    const std::vector<CellStats> cells = monte_carlo_cells(sample_fn, n_samples, n_cells, jobs);

    const std::string metric = variant == "poly"         ? "sup_err_h_pow"
                               : variant == "exp_bounded" ? "exp_sup_err_h"
                                                          : "exp_alpha_sup_err_h";
    int c = 0;
    for (int l = 0; l < n_err; ++l)
        for (int fi = 0; fi < n_funcs; ++fi)
            t.rows.push_back({metric, all[static_cast<std::size_t>(l)], p.t_final,
                              params[static_cast<std::size_t>(fi)],
                              cells[static_cast<std::size_t>(c++)]});
    return t;
}

/// Strong-norm error functionals per level:
///   breckner_weak   E[ sup_t |err|_H^2 + int_0^T |err|_V^2 dt ]
///   breckner_strong E[ sup_t |err|_V^2 + nu int_0^T |err|_A^2 dt ]
inline StudyTable study_breckner(BilinearWorkspace& ws, const RunParams& p,
                                 const std::vector<int>& levels, int n_ref, int n_samples,
                                 int jobs) {
    const std::vector<int> all = detail::levels_with_reference(levels, n_ref, ws.basis().dim());
    require_config(p.u0.dim() == n_ref, "initial state must live at the reference level");
    detail::prepare_tensors(ws, all, p.stepper.nonlinear);

    const int n_err = detail::error_row_count(all, levels, n_ref);
    const int n_cells = 2 * n_err;
    const double dt = p.stepper.dt;
    const double nu = p.stepper.viscosity;
    auto sample_fn = [&](std::uint64_t stream) {
        SampleOutcome out;
        const CoupledRun run = simulate_coupled(ws, p.stepper, p.u0, p.forcing, p.noise,
                                                p.t_final, all, p.seed, stream, true);
        for (const TrajectoryRecord& r : run.records)
            if (r.blown_up) {
                out.excluded = true;
                return out;
            }
        for (int l = 0; l < n_err; ++l) {
            const ErrorTrajectory e =
                error_trajectory(ws.basis(), run.reference(), run.records[static_cast<std::size_t>(l)]);
            out.values.push_back(detail::max_of(e.h_sq) + detail::trapezoid(e.v_sq, dt));
            out.values.push_back(detail::max_of(e.v_sq) + nu * detail::trapezoid(e.a_sq, dt));
        }
        return out;
    };
    const std::vector<CellStats> cells = monte_carlo_cells(sample_fn, n_samples, n_cells, jobs);

    StudyTable t;
    t.study = "breckner";
    for (int l = 0; l < n_err; ++l) {
        t.rows.push_back({"breckner_weak", all[static_cast<std::size_t>(l)], p.t_final, 0.0,
                          cells[static_cast<std::size_t>(2 * l)]});
        t.rows.push_back({"breckner_strong", all[static_cast<std::size_t>(l)], p.t_final, 0.0,
                          cells[static_cast<std::size_t>(2 * l + 1)]});
    }
    return t;
}

} // namespace snse
