#pragma once

// Semi-implicit Euler-Maruyama time stepping for the spectral Galerkin
// system
//
//   d c_k = ( -nu lambda_k c_k - B_k(u) + f_k ) dt + sigma_k m_k(u) dW_k,
//
// with the stiff Stokes term treated implicitly:
//
//   (1 + nu lambda_k dt) c_k^+ = c_k + dt (f_k - B_k(u)) + sigma_k m_k(u) dWk.
//
// The implicit factor is unconditionally contractive for the linear part;
// the explicit advection term imposes the mild step restriction
// dt <= 0.1 / sqrt(lambda_max) enforced at entry.
//
// Coupled multilevel runs advance every truncation level with the *same*
// increment matrix, so level differences estimate the Galerkin truncation
// error without independent-noise variance.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "snse/bilinear.hpp"
#include "snse/noise.hpp"

namespace snse {

struct StepperOptions {
    double viscosity = 1.0;
    double dt = 1e-3;
    bool nonlinear = true;        ///< include the advection term
    double blow_up_guard = 1e12;  ///< trajectory is truncated once |u|_H^2 exceeds this
};

/// Number of steps dt must take to land exactly on t_final.
inline int steps_for(double dt, double t_final) {
    require_config(dt > 0.0 && std::isfinite(dt), "integrator.dt must be positive");
    require_config(t_final > 0.0 && std::isfinite(t_final), "integrator.t_final must be positive");
    const double ratio = t_final / dt;
    const long long m = std::llround(ratio);
    require_config(m >= 1 && std::abs(static_cast<double>(m) * dt - t_final) <=
                                 1e-9 * std::max(1.0, t_final),
                   "integrator.dt must divide t_final exactly");
    return static_cast<int>(m);
}

inline void check_step_stability(const StokesBasis& basis, int level, double dt) {
    const double lam = basis.eigenvalues(level - 1);
    require_config(dt <= 0.1 / std::sqrt(lam) * (1.0 + 1e-12),
                   "integrator.dt exceeds the stability threshold 0.1/sqrt(lambda_max) for this "
                   "truncation level");
}

/// One Euler-Maruyama step at truncation level u.dim().
inline SpectralField em_step(const BilinearWorkspace& ws, const StepperOptions& opt,
                             const SpectralField& u, const SpectralField& f,
                             const NoiseModel& noise,
                             const Eigen::Ref<const Eigen::RowVectorXd>& dw_row) {
    const int n = u.dim();
    SpectralField drift = ws.explicit_drift(u, f, n, opt.nonlinear);
    const Eigen::VectorXd s = noise.scales(u);
    SpectralField out = SpectralField::zero(n);
    const int kn = std::min(n, static_cast<int>(s.size()));
    const Eigen::VectorXd& lambda = ws.basis().eigenvalues;
    for (int k = 0; k < n; ++k) {
        double rhs = u.coeffs(k) + opt.dt * drift.coeffs(k);
        if (k < kn) rhs += s(k) * dw_row(k);
        out.coeffs(k) = rhs / (1.0 + opt.viscosity * lambda(k) * opt.dt);
    }
    return out;
}

/// One sample path: times, spectral norms, running dissipation, optionally
/// the full coefficient history.  On blow-up the record is truncated at the
/// last finite state below the guard; no non-finite value is ever stored.
struct TrajectoryRecord {
    int level = 0;
    std::uint64_t seed = 0, stream_id = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> h_sq, v_sq, a_sq;
    std::vector<double> dissipation; ///< running nu * int |Au|^2 dt (trapezoid)
    Eigen::MatrixXd coeffs;          ///< recorded x level, only if record_coeffs
    bool record_coeffs = false;
    bool blown_up = false;
    int blow_step = -1; ///< index of the first step whose state was rejected
    SpectralField final_state;

    int recorded() const { return static_cast<int>(times.size()); }
};

/// Advance one level against a fixed increment matrix.
inline TrajectoryRecord integrate_with_increments(const BilinearWorkspace& ws,
                                                  const StepperOptions& opt,
                                                  const SpectralField& u0,
                                                  const SpectralField& f,
                                                  const NoiseModel& noise,
                                                  const WienerIncrements& w,
                                                  bool record_coeffs) {
    const int n = u0.dim();
    require_contract(n >= 1 && n <= ws.basis().dim(),
                     "integrate: initial state dimension out of range");
    require_contract(u0.is_finite(), "integrate: initial state is not finite");
    check_step_stability(ws.basis(), n, opt.dt);
    const int steps = w.steps();

    TrajectoryRecord rec;
    rec.level = n;
    rec.seed = w.seed;
    rec.stream_id = w.stream_id;
    rec.dt = opt.dt;
    rec.record_coeffs = record_coeffs;
    rec.times.reserve(static_cast<std::size_t>(steps) + 1);
    rec.h_sq.reserve(static_cast<std::size_t>(steps) + 1);
    rec.v_sq.reserve(static_cast<std::size_t>(steps) + 1);
    rec.a_sq.reserve(static_cast<std::size_t>(steps) + 1);
    rec.dissipation.reserve(static_cast<std::size_t>(steps) + 1);
    if (record_coeffs) rec.coeffs.resize(steps + 1, n);

    auto push_state = [&](int m, const SpectralField& u) {
        const NormSet ns = ws.basis().norms(u);
        rec.times.push_back(m * opt.dt);
        rec.h_sq.push_back(ns.h_sq);
        rec.v_sq.push_back(ns.v_sq);
        rec.a_sq.push_back(ns.a_sq);
        if (m == 0) {
            rec.dissipation.push_back(0.0);
        } else {
            const double prev_a = rec.a_sq[rec.a_sq.size() - 2];
            rec.dissipation.push_back(rec.dissipation.back() +
                                      opt.viscosity * opt.dt * 0.5 * (prev_a + ns.a_sq));
        }
        if (record_coeffs) rec.coeffs.row(m) = u.coeffs.transpose();
    };

    SpectralField u = u0;
    push_state(0, u);
    for (int m = 0; m < steps; ++m) {
        SpectralField next = em_step(ws, opt, u, f, noise, w.dw.row(m));
        if (!next.is_finite() || next.coeffs.squaredNorm() > opt.blow_up_guard) {
            rec.blown_up = true;
            rec.blow_step = m + 1;
            if (record_coeffs) rec.coeffs.conservativeResize(rec.recorded(), n);
            break;
        }
        u = std::move(next);
        push_state(m + 1, u);
    }
    rec.final_state = u;
    return rec;
}

/// Single-level run with its own increments.
inline TrajectoryRecord simulate(const BilinearWorkspace& ws, const StepperOptions& opt,
                                 const SpectralField& u0, const SpectralField& f,
                                 const NoiseModel& noise, double t_final, std::uint64_t seed,
                                 std::uint64_t stream_id, bool record_coeffs = false) {
    const int steps = steps_for(opt.dt, t_final);
    const WienerIncrements w = sample_wiener(noise.n_driven(), steps, opt.dt, seed, stream_id);
    return integrate_with_increments(ws, opt, u0, f, noise, w, record_coeffs);
}

/// All requested truncation levels advanced against one shared increment
/// matrix.  `levels` must be strictly ascending; the last entry is the
/// reference level and must match u0_ref.dim().  Every level starts from the
/// projection (coefficient prefix) of the same initial state.
struct CoupledRun {
    std::vector<int> levels;
    std::vector<TrajectoryRecord> records; ///< same order as levels
    std::uint64_t seed = 0, stream_id = 0;

    const TrajectoryRecord& reference() const { return records.back(); }
};

inline CoupledRun simulate_coupled(const BilinearWorkspace& ws, const StepperOptions& opt,
                                   const SpectralField& u0_ref, const SpectralField& f,
                                   const NoiseModel& noise, double t_final,
                                   const std::vector<int>& levels, std::uint64_t seed,
                                   std::uint64_t stream_id, bool record_coeffs = true) {
    require_contract(!levels.empty(), "simulate_coupled: need at least one level");
    for (std::size_t i = 1; i < levels.size(); ++i)
        require_contract(levels[i] > levels[i - 1], "simulate_coupled: levels must be ascending");
    require_contract(levels.front() >= 1 && levels.back() <= ws.basis().dim(),
                     "simulate_coupled: level out of range");
    require_contract(u0_ref.dim() == levels.back(),
                     "simulate_coupled: initial state must live at the reference level");
    // Every level must see the same driven modes or the shared-increment
    // coupling is meaningless.  State-dependent amplitudes on modes a level
    // does not carry cannot be reproduced at that level, so reject them;
    // additive amplitudes are state-free and truncate exactly.
    if (noise.kind != NoiseKind::Additive)
        require_config(noise.n_driven() <= levels.front(),
                       "coupled run: state-dependent noise drives mode " +
                           std::to_string(noise.n_driven()) + " but the smallest level is " +
                           std::to_string(levels.front()) +
                           "; lower noise.modes to at most the smallest level");

    const int steps = steps_for(opt.dt, t_final);
    const WienerIncrements w = sample_wiener(noise.n_driven(), steps, opt.dt, seed, stream_id);

    CoupledRun run;
    run.levels = levels;
    run.seed = seed;
    run.stream_id = stream_id;
    run.records.reserve(levels.size());
    for (const int n : levels)
        run.records.push_back(integrate_with_increments(ws, opt, u0_ref.truncated(n), f, noise, w,
                                                        record_coeffs));
    return run;
}

/// Spectral norms of the difference between the reference record and a level
/// record at each shared time.  valid is false when either trajectory blew
/// up (the sample is then excluded upstream).
struct ErrorTrajectory {
    int level = 0;
    std::vector<double> times;
    std::vector<double> h_sq, v_sq, a_sq;
    bool valid = true;
};

inline ErrorTrajectory error_trajectory(const StokesBasis& basis, const TrajectoryRecord& ref,
                                        const TrajectoryRecord& lvl) {
    require_contract(ref.record_coeffs && lvl.record_coeffs,
                     "error_trajectory: records need coefficient histories");
    require_contract(ref.level >= lvl.level, "error_trajectory: reference level too small");
    require_contract(ref.dt == lvl.dt, "error_trajectory: step size mismatch");
    ErrorTrajectory e;
    e.level = lvl.level;
    if (ref.blown_up || lvl.blown_up) {
        e.valid = false;
        return e;
    }
    const int steps = std::min(ref.recorded(), lvl.recorded());
    const int n = lvl.level;
    e.times.reserve(static_cast<std::size_t>(steps));
    e.h_sq.reserve(static_cast<std::size_t>(steps));
    e.v_sq.reserve(static_cast<std::size_t>(steps));
    e.a_sq.reserve(static_cast<std::size_t>(steps));
    for (int m = 0; m < steps; ++m) {
        double h = 0.0, v = 0.0, a = 0.0;
        // Error = reference minus level: shared modes differ, tail modes of
        // the reference pass through whole.
        for (int k = 0; k < ref.level; ++k) {
            const double d = ref.coeffs(m, k) - (k < n ? lvl.coeffs(m, k) : 0.0);
            const double lam = basis.eigenvalues(k);
            h += d * d;
            v += lam * d * d;
            a += lam * lam * d * d;
        }
        e.times.push_back(ref.times[static_cast<std::size_t>(m)]);
        e.h_sq.push_back(h);
        e.v_sq.push_back(v);
        e.a_sq.push_back(a);
    }
    return e;
}

/// First recorded time at which the energy-dissipation functional
/// |u(t)|_V^2 + nu int_0^t |Au|^2 ds reaches the threshold.  If the record
/// blew up before crossing, the first unrecorded time is returned (the
/// functional is treated as infinite there); otherwise nullopt.
inline std::optional<double> stopping_time(const TrajectoryRecord& rec, double threshold) {
    for (int m = 0; m < rec.recorded(); ++m) {
        if (rec.v_sq[static_cast<std::size_t>(m)] + rec.dissipation[static_cast<std::size_t>(m)] >=
            threshold)
            return rec.times[static_cast<std::size_t>(m)];
    }
    if (rec.blown_up) return rec.times.back() + rec.dt;
    return std::nullopt;
}

} // namespace snse
