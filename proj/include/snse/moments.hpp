#pragma once

// Moment functionals applied to pathwise norm suprema, and a Monte Carlo
// engine whose output is bit-identical for any worker count.
//
// Functionals act on x = a squared spectral norm (so x >= 0).  All are
// nondecreasing on [0, inf), which lets the pathwise supremum be exchanged
// with the functional: sup_t Phi(x(t)) = Phi(sup_t x(t)).
//
//   log        log(1 + x)
//   log_log    log(1 + log(1 + x))
//   log_pow    (log(1 + x))^{1 - epsilon},          0 < epsilon < 1
//   poly       x^k                                  (moments of order 2k)
//   exp        exp(sqrt(x) / k_scale)               (norm itself in the exponent)
//   exp_alpha  exp(x^{1 - alpha} / k_scale),        0 <= alpha < 1
//
// The determinism contract of the engine: sample i always draws from stream
// id i, every sample's contribution is stored in slot i, and the reduction
// runs in slot order after all workers finish.  Thread scheduling therefore
// cannot change a single output bit.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "snse/errors.hpp"

namespace snse {

enum class FunctionalKind { Log, LogLog, LogPow, Poly, Exp, ExpAlpha };

struct MomentFunctional {
    FunctionalKind kind = FunctionalKind::Log;
    double epsilon = 0.25; ///< log_pow exponent defect
    int power = 1;         ///< poly order k
    double k_scale = 1.0;  ///< exponential tempering scale
    double alpha = 0.5;    ///< exp_alpha growth exponent

    double operator()(double x) const {
        require_contract(x >= 0.0 || std::isnan(x), "moment functional: negative argument");
        switch (kind) {
            case FunctionalKind::Log: return std::log1p(x);
            case FunctionalKind::LogLog: return std::log1p(std::log1p(x));
            case FunctionalKind::LogPow: return std::pow(std::log1p(x), 1.0 - epsilon);
            case FunctionalKind::Poly: return std::pow(x, power);
            case FunctionalKind::Exp: return std::exp(std::sqrt(x) / k_scale);
            case FunctionalKind::ExpAlpha: return std::exp(std::pow(x, 1.0 - alpha) / k_scale);
        }
        return 0.0;
    }

    void validate() const {
        switch (kind) {
            case FunctionalKind::LogPow:
                require_config(epsilon > 0.0 && epsilon < 1.0,
                               "study.epsilon must lie in (0,1)");
                break;
            case FunctionalKind::Poly:
                require_config(power >= 1, "moment order must be at least 1");
                break;
            case FunctionalKind::Exp:
                require_config(k_scale > 0.0, "study.k_scale must be positive");
                break;
            case FunctionalKind::ExpAlpha:
                require_config(k_scale > 0.0, "study.k_scale must be positive");
                require_config(alpha >= 0.0 && alpha < 1.0, "noise.alpha must lie in [0,1)");
                break;
            default: break;
        }
    }
};

/// Phi(sup_t x_t) using monotonicity; evaluating Phi once keeps exp-type
/// functionals out of the overflow range for intermediate times.
inline double pathwise_sup_functional(const std::vector<double>& x_path,
                                      const MomentFunctional& phi) {
    require_contract(!x_path.empty(), "pathwise sup of an empty trajectory");
    const double sup = *std::max_element(x_path.begin(), x_path.end());
    return phi(sup);
}

// ---------------------------------------------------------------------------
// Ensemble statistics
// ---------------------------------------------------------------------------

struct CellStats {
    int n_kept = 0;
    int n_excluded = 0;
    double mean = 0.0;
    double ci_halfwidth = 0.0; ///< 1.96 * sd / sqrt(n) (normal approximation)
    double min = 0.0;
    double max = 0.0;
};

/// Two-pass mean/variance over the kept samples of one cell, in slot order.
inline CellStats reduce_cell(const std::vector<double>& values, const std::vector<char>& excluded) {
    CellStats s;
    double sum = 0.0;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (excluded[i]) {
            ++s.n_excluded;
            continue;
        }
        ++s.n_kept;
        sum += values[i];
        s.min = std::min(s.min, values[i]);
        s.max = std::max(s.max, values[i]);
    }
    if (s.n_kept == 0) {
        s.min = s.max = 0.0;
        return s;
    }
    s.mean = sum / s.n_kept;
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (excluded[i]) continue;
        const double d = values[i] - s.mean;
        ss += d * d;
    }
    if (s.n_kept > 1) {
        const double sd = std::sqrt(ss / (s.n_kept - 1));
        s.ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(s.n_kept));
    }
    return s;
}

/// Wilson score interval for a binomial frequency; returns (low, high).
inline std::pair<double, double> wilson_interval(int successes, int n, double z = 1.96) {
    require_contract(n >= 1 && successes >= 0 && successes <= n, "wilson_interval: bad counts");
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Monte Carlo engine
// ---------------------------------------------------------------------------

/// One sample's contribution: a value per cell, or exclusion of the whole
/// sample (all cells) when the underlying trajectory hit the blow-up guard.
struct SampleOutcome {
    bool excluded = false;
    std::vector<double> values;
};

/// Computes outcomes for streams 0..n_samples-1 (possibly across threads) and
/// reduces them cell-wise in stream order.
inline std::vector<CellStats> monte_carlo_cells(
    const std::function<SampleOutcome(std::uint64_t stream_id)>& sample_fn, int n_samples,
    int n_cells, int jobs) {
    require_contract(n_samples >= 1, "monte_carlo_cells: need at least one sample");
    require_contract(n_cells >= 1, "monte_carlo_cells: need at least one cell");
    std::vector<std::vector<double>> values(
        static_cast<std::size_t>(n_cells),
        std::vector<double>(static_cast<std::size_t>(n_samples), 0.0));
    std::vector<char> excluded(static_cast<std::size_t>(n_samples), 0);

    auto run_sample = [&](int i) {
        const SampleOutcome out = sample_fn(static_cast<std::uint64_t>(i));
        if (out.excluded) {
            excluded[static_cast<std::size_t>(i)] = 1;
            return;
        }
        require_contract(static_cast<int>(out.values.size()) == n_cells,
                         "monte_carlo_cells: sample returned wrong cell count");
        for (int c = 0; c < n_cells; ++c)
            values[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = out.values[static_cast<std::size_t>(c)];
    };

    if (jobs <= 1) {
        for (int i = 0; i < n_samples; ++i) run_sample(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
        const int workers = std::min(jobs, n_samples);
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t]() {
                try {
                    for (int i = next.fetch_add(1); i < n_samples; i = next.fetch_add(1))
                        run_sample(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<CellStats> stats;
    stats.reserve(static_cast<std::size_t>(n_cells));
    for (int c = 0; c < n_cells; ++c)
        stats.push_back(reduce_cell(values[static_cast<std::size_t>(c)], excluded));
    return stats;
}

/// Scalar convenience wrapper: mean of one functional of the sample paths.
inline CellStats monte_carlo_expectation(
    const std::function<SampleOutcome(std::uint64_t stream_id)>& sample_fn, int n_samples,
    int jobs) {
    return monte_carlo_cells(sample_fn, n_samples, 1, jobs).front();
}

} // namespace snse
