#pragma once

// Divergence-free Stokes eigenbases on the torus and the no-slip square.
//
// A basis is a finite family e_1, ..., e_N of discrete velocity fields that
// are orthonormal in the discrete L^2 inner product, divergence-free, and
// ordered by ascending Stokes eigenvalue.  Solution states are coefficient
// vectors in this basis, so the L^2 / gradient / Laplacian norms become
// weighted sums of squared coefficients.
//
// Torus: modes are the classical analytic family
//     e = sqrt(2)/L * kperp_hat * {sin, cos}(2 pi k.x / L),
// enumerated over half-plane wavevectors (k1 > 0, or k1 == 0 and k2 > 0),
// sorted by |k|^2 with lexicographic (k1, k2) tie-break, sine before cosine.
//
// Square: modes come from the stream-function formulation.  With u = curl(psi)
// and u = 0 on the boundary, psi satisfies the clamped-plate conditions
// psi = dpsi/dn = 0, and the Stokes eigenproblem becomes the symmetric
// definite pencil  Delta^2 psi = lambda (-Delta) psi  on interior nodes.
// The biharmonic operator uses the 13-point stencil with the mirror ghost
// rule (psi_{-1} = psi_1) that encodes dpsi/dn = 0 at second order; velocity
// is recovered with central differences and re-orthonormalized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snse/domain.hpp"
#include "snse/eigensolve.hpp"
#include "snse/errors.hpp"

namespace snse {

// ---------------------------------------------------------------------------
// Coefficient vectors
// ---------------------------------------------------------------------------

/// A velocity field expressed by its coefficients in a basis prefix.
/// dim() may be smaller than the dimension of the basis it refers to; the
/// field then lives in the corresponding Galerkin subspace.
struct SpectralField {
    Eigen::VectorXd coeffs;

    SpectralField() = default;
    explicit SpectralField(Eigen::VectorXd c) : coeffs(std::move(c)) {}

    static SpectralField zero(int n) {
        require_contract(n >= 0, "SpectralField: dimension must be nonnegative");
        return SpectralField(Eigen::VectorXd::Zero(n));
    }

    int dim() const { return static_cast<int>(coeffs.size()); }

    bool is_finite() const { return coeffs.allFinite(); }

    /// First n coefficients (the Galerkin projection onto the level-n space).
    SpectralField truncated(int n) const {
        require_contract(n >= 0 && n <= dim(), "SpectralField::truncated: bad size");
        return SpectralField(coeffs.head(n));
    }
};

struct NormSet {
    double h_sq = 0.0; ///< squared L^2 norm
    double v_sq = 0.0; ///< squared gradient (energy) norm
    double a_sq = 0.0; ///< squared Stokes-operator norm
};

// ---------------------------------------------------------------------------
// Mode bookkeeping
// ---------------------------------------------------------------------------

/// Analytic descriptor of one torus mode; unused for the square.
struct PeriodicMode {
    int k1 = 0;
    int k2 = 0;
    bool is_sine = true;
};

/// Half-plane wavevectors sorted by |k|^2 then (k1, k2); each contributes a
/// sine and a cosine mode.  Returns at least n_modes entries.
inline std::vector<PeriodicMode> enumerate_periodic_modes(int n_modes) {
    require_config(n_modes >= 1, "basis.n_modes must be positive");
    struct Wave {
        int k1, k2, r2;
    };
    std::vector<Wave> waves;
    int radius = 2;
    while (true) {
        waves.clear();
        for (int k1 = 0; k1 <= radius; ++k1) {
            for (int k2 = -radius; k2 <= radius; ++k2) {
                const bool half_plane = (k1 > 0) || (k1 == 0 && k2 > 0);
                if (!half_plane) continue;
                const int r2 = k1 * k1 + k2 * k2;
                if (r2 <= radius * radius) waves.push_back({k1, k2, r2});
            }
        }
        // Shells with |k| <= radius are complete, so the sorted prefix is
        // correct as long as enough of them fit.
        if (2 * static_cast<int>(waves.size()) >= n_modes + 2) break;
        radius *= 2;
    }
    std::sort(waves.begin(), waves.end(), [](const Wave& a, const Wave& b) {
        if (a.r2 != b.r2) return a.r2 < b.r2;
        if (a.k1 != b.k1) return a.k1 < b.k1;
        return a.k2 < b.k2;
    });
    std::vector<PeriodicMode> modes;
    modes.reserve(static_cast<std::size_t>(n_modes) + 1);
    for (const Wave& w : waves) {
        modes.push_back({w.k1, w.k2, true});
        modes.push_back({w.k1, w.k2, false});
        if (static_cast<int>(modes.size()) >= n_modes) break;
    }
    modes.resize(static_cast<std::size_t>(n_modes));
    return modes;
}

/// Nodal samples of the analytic torus modes and their first derivatives on a
/// uniform nodes_per_axis x nodes_per_axis grid (row-major, x fastest).  Used
/// both for the basis grid and for the finer dealiasing grid.
struct PeriodicModeTable {
    Eigen::MatrixXd vx, vy;                 ///< node_count x n_modes
    Eigen::MatrixXd dvx_dx, dvx_dy;         ///< derivatives of the x-component
    Eigen::MatrixXd dvy_dx, dvy_dy;         ///< derivatives of the y-component
};

inline PeriodicModeTable evaluate_periodic_modes(const std::vector<PeriodicMode>& modes,
                                                 double side_length, int nodes_per_axis) {
    const int n = static_cast<int>(modes.size());
    const int g = nodes_per_axis;
    const int p = g * g;
    PeriodicModeTable t;
    t.vx.resize(p, n);
    t.vy.resize(p, n);
    t.dvx_dx.resize(p, n);
    t.dvx_dy.resize(p, n);
    t.dvy_dx.resize(p, n);
    t.dvy_dy.resize(p, n);
    const double kappa = 2.0 * M_PI / side_length;
    const double amp = std::sqrt(2.0) / side_length;
    for (int j = 0; j < n; ++j) {
        const PeriodicMode& m = modes[static_cast<std::size_t>(j)];
        const double norm_k = std::sqrt(static_cast<double>(m.k1 * m.k1 + m.k2 * m.k2));
        const double ax = amp * (-m.k2) / norm_k;
        const double ay = amp * m.k1 / norm_k;
        for (int iy = 0; iy < g; ++iy) {
            for (int ix = 0; ix < g; ++ix) {
                // theta = kappa * k . x with x = (ix, iy) * L / g
                const double theta =
                    2.0 * M_PI * (static_cast<double>(m.k1) * ix + static_cast<double>(m.k2) * iy) / g;
                const double s = std::sin(theta);
                const double c = std::cos(theta);
                const double val = m.is_sine ? s : c;
                const double der = m.is_sine ? c : -s; // d(trig)/d(theta)
                const int node = iy * g + ix;
                t.vx(node, j) = ax * val;
                t.vy(node, j) = ay * val;
                t.dvx_dx(node, j) = ax * der * kappa * m.k1;
                t.dvx_dy(node, j) = ax * der * kappa * m.k2;
                t.dvy_dx(node, j) = ay * der * kappa * m.k1;
                t.dvy_dy(node, j) = ay * der * kappa * m.k2;
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// The basis object
// ---------------------------------------------------------------------------

struct StokesBasis {
    DomainSpec domain;
    Eigen::VectorXd eigenvalues;       ///< ascending Stokes eigenvalues
    Eigen::MatrixXd vx, vy;            ///< node_count x dim nodal mode samples
    Eigen::VectorXd quad_weights;      ///< node_count quadrature weights
    std::vector<PeriodicMode> modes;   ///< analytic descriptors; empty on the square

    int dim() const { return static_cast<int>(eigenvalues.size()); }
    int nodes_per_axis() const { return domain.nodes_per_axis(); }
    int node_count() const { return domain.node_count(); }
    bool is_periodic() const { return domain.kind == DomainKind::PeriodicTorus; }

    double lambda_min() const { return eigenvalues(0); }
    double lambda_max() const { return eigenvalues(dim() - 1); }

    /// Weighted L^2 inner product of two nodal velocity fields.
    double grid_inner(const Eigen::VectorXd& ax, const Eigen::VectorXd& ay,
                      const Eigen::VectorXd& bx, const Eigen::VectorXd& by) const {
        return (quad_weights.array() * (ax.array() * bx.array() + ay.array() * by.array())).sum();
    }

    /// Norms of a coefficient vector; valid for any prefix dimension.
    NormSet norms(const SpectralField& u) const {
        require_contract(u.dim() <= dim(), "norms: field dimension exceeds basis dimension");
        NormSet out;
        for (int k = 0; k < u.dim(); ++k) {
            const double c2 = u.coeffs(k) * u.coeffs(k);
            const double lam = eigenvalues(k);
            out.h_sq += c2;
            out.v_sq += lam * c2;
            out.a_sq += lam * lam * c2;
        }
        return out;
    }

    /// Nodal samples of a coefficient vector.
    void reconstruct(const SpectralField& u, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y) const {
        require_contract(u.dim() <= dim(), "reconstruct: field dimension exceeds basis dimension");
        const int n = u.dim();
        out_x = vx.leftCols(n) * u.coeffs;
        out_y = vy.leftCols(n) * u.coeffs;
    }

    /// L^2 projection of a nodal field onto the first n modes.
    SpectralField project(const Eigen::VectorXd& grid_x, const Eigen::VectorXd& grid_y, int n) const {
        require_contract(n >= 0 && n <= dim(), "project: bad target dimension");
        require_contract(grid_x.size() == node_count() && grid_y.size() == node_count(),
                         "project: grid field has wrong node count");
        const Eigen::VectorXd wx = quad_weights.array() * grid_x.array();
        const Eigen::VectorXd wy = quad_weights.array() * grid_y.array();
        SpectralField out;
        out.coeffs = vx.leftCols(n).transpose() * wx + vy.leftCols(n).transpose() * wy;
        return out;
    }
};

// ---------------------------------------------------------------------------
// Torus builder
// ---------------------------------------------------------------------------

inline StokesBasis build_periodic_basis(const DomainSpec& domain, int n_modes) {
    domain.validate();
    require_config(domain.kind == DomainKind::PeriodicTorus,
                   "build_periodic_basis: domain must be the periodic torus");
    require_config(n_modes >= 1, "basis.n_modes must be positive");

    StokesBasis b;
    b.domain = domain;
    b.modes = enumerate_periodic_modes(n_modes);

    const int g = domain.grid_points;
    int kmax = 0;
    for (const PeriodicMode& m : b.modes)
        kmax = std::max({kmax, std::abs(m.k1), std::abs(m.k2)});
    require_config(kmax <= g / 2 - 1,
                   "basis.n_modes=" + std::to_string(n_modes) + " uses wavevector components up to " +
                       std::to_string(kmax) + ", but domain.grid_points=" + std::to_string(g) +
                       " resolves only components <= " + std::to_string(g / 2 - 1));

    const double kappa = 2.0 * M_PI / domain.side_length;
    b.eigenvalues.resize(n_modes);
    for (int j = 0; j < n_modes; ++j) {
        const PeriodicMode& m = b.modes[static_cast<std::size_t>(j)];
        b.eigenvalues(j) = kappa * kappa * static_cast<double>(m.k1 * m.k1 + m.k2 * m.k2);
    }

    PeriodicModeTable t = evaluate_periodic_modes(b.modes, domain.side_length, g);
    b.vx = std::move(t.vx);
    b.vy = std::move(t.vy);

    const double w = domain.h() * domain.h(); // rectangle rule, exact for this band
    b.quad_weights = Eigen::VectorXd::Constant(domain.node_count(), w);
    return b;
}

// ---------------------------------------------------------------------------
// Square (no-slip) builder
// ---------------------------------------------------------------------------

namespace detail {

/// 13-point clamped biharmonic matrix on the (G-1)^2 interior nodes, scaled
/// by 1/h^4.  Ghost values outside the boundary follow the mirror rule
/// psi_{-1} = psi_{1}, which folds into the diagonal band and keeps the
/// assembled matrix exactly symmetric.
inline Eigen::MatrixXd clamped_biharmonic_matrix(int g, double h) {
    const int m = g - 1;
    const int n = m * m;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    const double inv_h4 = 1.0 / (h * h * h * h);
    auto idx = [m](int i, int j) { return j * m + i; }; // interior (i, j) in [0, m)
    // Stencil offsets and weights for the discrete Delta^2.
    struct Tap {
        int di, dj;
        double w;
    };
    const Tap taps[] = {
        {0, 0, 20.0},  {1, 0, -8.0},  {-1, 0, -8.0}, {0, 1, -8.0},  {0, -1, -8.0},
        {1, 1, 2.0},   {1, -1, 2.0},  {-1, 1, 2.0},  {-1, -1, 2.0}, {2, 0, 1.0},
        {-2, 0, 1.0},  {0, 2, 1.0},   {0, -2, 1.0},
    };
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int row = idx(i, j);
            for (const Tap& t : taps) {
                int ii = i + t.di;
                int jj = j + t.dj;
                // Interior indices run 1..G-1 in grid coordinates; grid index
                // = interior index + 1.  Boundary (grid 0 or G) carries
                // psi = 0; one step beyond mirrors back inside.
                int gi = ii + 1;
                int gj = jj + 1;
                if (gi == -1) gi = 1;
                if (gi == g + 1) gi = g - 1;
                if (gj == -1) gj = 1;
                if (gj == g + 1) gj = g - 1;
                if (gi == 0 || gi == g || gj == 0 || gj == g) continue; // psi = 0
                K(row, idx(gi - 1, gj - 1)) += t.w * inv_h4;
            }
        }
    }
    return K;
}

/// 5-point discrete -Laplacian on interior nodes, scaled by 1/h^2.
inline Eigen::MatrixXd dirichlet_laplacian_matrix(int g, double h) {
    const int m = g - 1;
    const int n = m * m;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    const double inv_h2 = 1.0 / (h * h);
    auto idx = [m](int i, int j) { return j * m + i; };
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int row = idx(i, j);
            M(row, row) = 4.0 * inv_h2;
            if (i > 0) M(row, idx(i - 1, j)) = -inv_h2;
            if (i + 1 < m) M(row, idx(i + 1, j)) = -inv_h2;
            if (j > 0) M(row, idx(i, j - 1)) = -inv_h2;
            if (j + 1 < m) M(row, idx(i, j + 1)) = -inv_h2;
        }
    }
    return M;
}

/// Diagonal-mirror image of an interior stream-function array:
/// (Rz)(i, j) = z(j, i).  Both square stencils commute with R, so R restricts
/// to an involution on every eigenspace of the pencil.
inline Eigen::VectorXd mirror_stream(const Eigen::VectorXd& z, int m) {
    Eigen::VectorXd r(z.size());
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) r(j * m + i) = z(i * m + j);
    return r;
}

/// a^T M b with the interior 5-point -Laplacian (the pencil's mass metric);
/// the 1/h^2 scale is dropped because only ratios of these products matter.
inline double stream_mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int m) {
    auto at = [&](int i, int j) { return (i < 0 || i >= m || j < 0 || j >= m) ? 0.0 : b(j * m + i); };
    double s = 0.0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            s += a(j * m + i) *
                 (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1));
    return s;
}

/// Dense solvers rotate the members of an exactly degenerate eigenpair
/// arbitrarily (and grid-dependently).  The square pencil's doublets are
/// mirror pairs, so the reflection-symmetric / antisymmetric combinations
/// give a refinement-stable convention: replace each doublet by those two,
/// symmetric member first.  Runs longer than two and pairs on which the
/// mirror does not act as a proper involution are left untouched.
inline void canonicalize_mirror_pairs(Eigen::VectorXd& values, Eigen::MatrixXd& vectors, int m) {
    const int n = static_cast<int>(values.size());
    int j = 0;
    while (j < n) {
        int run = 1;
        while (j + run < n &&
               std::abs(values(j + run) - values(j)) <= 1e-9 * std::max(1.0, values(j)))
            ++run;
        if (run == 2) {
            const Eigen::VectorXd z1 = vectors.col(j);
            const Eigen::VectorXd z2 = vectors.col(j + 1);
            const Eigen::VectorXd r1 = mirror_stream(z1, m);
            const Eigen::VectorXd r2 = mirror_stream(z2, m);
            Eigen::Matrix2d G;
            G << stream_mass_inner(z1, r1, m), stream_mass_inner(z1, r2, m),
                stream_mass_inner(z2, r1, m), stream_mass_inner(z2, r2, m);
            // Normalize against the pair's own mass Gram (h^2-free products).
            const double scale = 0.5 * (stream_mass_inner(z1, z1, m) + stream_mass_inner(z2, z2, m));
            G /= scale;
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (G + G.transpose()));
            if (std::abs(es.eigenvalues()(0) + 1.0) < 1e-6 &&
                std::abs(es.eigenvalues()(1) - 1.0) < 1e-6) {
                const Eigen::Vector2d anti = es.eigenvectors().col(0);
                const Eigen::Vector2d sym = es.eigenvectors().col(1);
                vectors.col(j) = sym(0) * z1 + sym(1) * z2;
                vectors.col(j + 1) = anti(0) * z1 + anti(1) * z2;
            }
        }
        j += run;
    }
}

/// Deterministic sign: make the entry of largest magnitude positive
/// (first occurrence in scan order wins ties).
inline void fix_sign(Eigen::VectorXd& v) {
    int best = 0;
    double best_abs = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (v(best) < 0.0) v = -v;
}

} // namespace detail

inline StokesBasis build_dirichlet_basis(const DomainSpec& domain, int n_modes) {
    domain.validate();
    require_config(domain.kind == DomainKind::DirichletSquare,
                   "build_dirichlet_basis: domain must be the no-slip square");
    require_config(n_modes >= 1, "basis.n_modes must be positive");
    const int g = domain.grid_points;
    const int m = g - 1;
    const int n_interior = m * m;
    require_config(n_modes <= n_interior / 4,
                   "basis.n_modes=" + std::to_string(n_modes) + " is too large for grid_points=" +
                       std::to_string(g) + "; need n_modes <= " + std::to_string(n_interior / 4) +
                       " for resolved modes");

    const double h = domain.h();
    Eigen::MatrixXd K = detail::clamped_biharmonic_matrix(g, h);
    Eigen::MatrixXd M = detail::dirichlet_laplacian_matrix(g, h);
    EigenPairs eig = lowest_eigenpairs_pencil(std::move(K), std::move(M), n_modes);
    for (int j = 1; j < n_modes; ++j)
        require_numeric(eig.values(j) >= eig.values(j - 1) * (1.0 - 1e-12),
                        "pencil eigenvalues not ascending");
    require_numeric(eig.values(0) > 0.0, "pencil produced a nonpositive eigenvalue");
    detail::canonicalize_mirror_pairs(eig.values, eig.vectors, m);

    StokesBasis b;
    b.domain = domain;
    b.eigenvalues = eig.values;

    const int nx = g + 1;
    const int p = nx * nx;
    b.vx.resize(p, n_modes);
    b.vy.resize(p, n_modes);

    // Trapezoid weights (boundary rows count half); since every mode vanishes
    // on the boundary this is effectively h^2 on the interior.
    b.quad_weights.resize(p);
    for (int iy = 0; iy < nx; ++iy) {
        const double cy = (iy == 0 || iy == g) ? 0.5 : 1.0;
        for (int ix = 0; ix < nx; ++ix) {
            const double cx = (ix == 0 || ix == g) ? 0.5 : 1.0;
            b.quad_weights(iy * nx + ix) = h * h * cx * cy;
        }
    }

    // Stream function -> velocity, one mode at a time.
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < n_modes; ++j) {
        Eigen::VectorXd z = eig.vectors.col(j);
        detail::fix_sign(z);
        psi.setZero();
        for (int jy = 0; jy < m; ++jy)
            for (int jx = 0; jx < m; ++jx)
                psi((jy + 1) * nx + (jx + 1)) = z(jy * m + jx);
        // u = (d psi/dy, -d psi/dx) with central differences at interior
        // nodes; u = 0 on the boundary.  The boundary values of the central
        // differences vanish as well (psi = 0 along each edge), so the
        // discrete field is curl-form everywhere and its interior central
        // divergence cancels exactly.
        for (int iy = 0; iy < nx; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const int node = iy * nx + ix;
                if (ix == 0 || ix == g || iy == 0 || iy == g) {
                    b.vx(node, j) = 0.0;
                    b.vy(node, j) = 0.0;
                } else {
                    b.vx(node, j) = (psi((iy + 1) * nx + ix) - psi((iy - 1) * nx + ix)) / (2.0 * h);
                    b.vy(node, j) = -(psi(iy * nx + (ix + 1)) - psi(iy * nx + (ix - 1))) / (2.0 * h);
                }
            }
        }
    }

    // Modified Gram-Schmidt in the weighted L^2 inner product.  The raw
    // fields are already nearly orthogonal (the stream functions are exactly
    // pencil-orthogonal), so this only removes O(h^2) discretization leakage
    // and fixes the normalization.
    for (int j = 0; j < n_modes; ++j) {
        Eigen::VectorXd cx = b.vx.col(j);
        Eigen::VectorXd cy = b.vy.col(j);
        for (int i = 0; i < j; ++i) {
            const double r = b.grid_inner(b.vx.col(i), b.vy.col(i), cx, cy);
            cx -= r * b.vx.col(i);
            cy -= r * b.vy.col(i);
        }
        const double nrm = std::sqrt(b.grid_inner(cx, cy, cx, cy));
        require_numeric(nrm > 0.0, "Gram-Schmidt breakdown: dependent mode " + std::to_string(j));
        b.vx.col(j) = cx / nrm;
        b.vy.col(j) = cy / nrm;
    }
    return b;
}

inline StokesBasis build_basis(const DomainSpec& domain, int n_modes) {
    return domain.kind == DomainKind::PeriodicTorus ? build_periodic_basis(domain, n_modes)
                                                    : build_dirichlet_basis(domain, n_modes);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Max absolute deviation of the mode Gram matrix from the identity.
inline double gram_deviation(const StokesBasis& b) {
    const int n = b.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double g = b.grid_inner(b.vx.col(i), b.vy.col(i), b.vx.col(j), b.vy.col(j));
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

namespace detail {

/// Periodic spectral differentiation matrix on nodes_per_axis points spanning
/// [0, L): exact nodal derivatives for trigonometric polynomials below the
/// Nyquist frequency.
inline Eigen::MatrixXd periodic_diff_matrix(int g, double side_length) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(g, g);
    const double scale = M_PI / side_length;
    for (int j = 0; j < g; ++j) {
        for (int l = 0; l < g; ++l) {
            if (j == l) continue;
            const int d = j - l;
            const double sign = (d % 2 == 0) ? 1.0 : -1.0;
            D(j, l) = scale * sign / std::tan(M_PI * static_cast<double>(d) / g);
        }
    }
    return D;
}

} // namespace detail

/// Nodal divergence of a grid velocity field.  On the torus the derivative is
/// spectral (exact for resolved bands); on the square it is the central
/// difference at interior nodes with zeros along the boundary.
inline Eigen::VectorXd divergence_grid(const StokesBasis& b, const Eigen::VectorXd& ux,
                                       const Eigen::VectorXd& uy) {
    const int nx = b.nodes_per_axis();
    require_contract(ux.size() == b.node_count() && uy.size() == b.node_count(),
                     "divergence_grid: wrong node count");
    Eigen::VectorXd div = Eigen::VectorXd::Zero(b.node_count());
    if (b.is_periodic()) {
        const Eigen::MatrixXd D = detail::periodic_diff_matrix(nx, b.domain.side_length);
        // Rows of the grid are y-slices; x varies fastest.
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            UX(ux.data(), nx, nx), UY(uy.data(), nx, nx);
        Eigen::MatrixXd dux = UX * D.transpose(); // d/dx along each row
        Eigen::MatrixXd duy = D * UY.matrix();    // d/dy down each column
        for (int iy = 0; iy < nx; ++iy)
            for (int ix = 0; ix < nx; ++ix) div(iy * nx + ix) = dux(iy, ix) + duy(iy, ix);
    } else {
        const double h = b.domain.h();
        const int g = b.domain.grid_points;
        for (int iy = 1; iy < g; ++iy) {
            for (int ix = 1; ix < g; ++ix) {
                const double ddx = (ux(iy * nx + ix + 1) - ux(iy * nx + ix - 1)) / (2.0 * h);
                const double ddy = (uy((iy + 1) * nx + ix) - uy((iy - 1) * nx + ix)) / (2.0 * h);
                div(iy * nx + ix) = ddx + ddy;
            }
        }
    }
    return div;
}

/// Largest nodal divergence over all basis modes.
inline double max_mode_divergence(const StokesBasis& b) {
    double worst = 0.0;
    for (int j = 0; j < b.dim(); ++j) {
        const Eigen::VectorXd d = divergence_grid(b, b.vx.col(j), b.vy.col(j));
        worst = std::max(worst, d.cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace snse
