#pragma once

// The Navier-Stokes bilinear term B(u, v) = P(u . grad v) restricted to the
// Galerkin space, evaluated pseudo-spectrally: reconstruct both fields on a
// quadrature grid, form the advection product pointwise, and project back
// onto the basis.
//
// On the torus the quadrature grid is the 3/2-padded grid (3N/2 points per
// axis).  Because every basis mode has wavevector components <= N/2 - 1, the
// rectangle rule on the padded grid integrates both quadratic and cubic mode
// products exactly, so the discrete pairings inherit the continuum
// cancellations to rounding:  <B(u,v), v> = 0  and  <B(u,u), Au> = 0.
// On the no-slip square the product is integrated with the trapezoid rule on
// the basis grid; the pairings then carry O(h) quadrature residuals that
// shrink under grid refinement but do not vanish.
//
// For time stepping, the workspace can precompute the Galerkin tensor
// T[(i,j), k] = <(e_i . grad) e_j, e_k> for a truncation level n; evaluating
// B(u, u) then costs one (n^2 x n) mat-vec instead of a full grid pass and is
// algebraically identical to the quadrature route.

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "snse/basis.hpp"

namespace snse {

class BilinearWorkspace {
public:
    /// dealias selects the 3/2-padded quadrature grid on the torus; it is
    /// ignored on the square, which has no padding rule.
    BilinearWorkspace(const StokesBasis& basis, bool dealias)
        : basis_(&basis), dealias_(dealias && basis.is_periodic()) {
        if (basis.is_periodic()) {
            const int n_base = basis.domain.grid_points;
            q_ = dealias_ ? (3 * n_base) / 2 : n_base;
            PeriodicModeTable t = evaluate_periodic_modes(basis.modes, basis.domain.side_length, q_);
            phi_x_ = std::move(t.vx);
            phi_y_ = std::move(t.vy);
            gxx_ = std::move(t.dvx_dx);
            gxy_ = std::move(t.dvx_dy);
            gyx_ = std::move(t.dvy_dx);
            gyy_ = std::move(t.dvy_dy);
            const double w = (basis.domain.side_length / q_) * (basis.domain.side_length / q_);
            qw_ = Eigen::VectorXd::Constant(q_ * q_, w);
        } else {
            q_ = basis.nodes_per_axis();
            phi_x_ = basis.vx;
            phi_y_ = basis.vy;
            qw_ = basis.quad_weights;
            central_difference_gradients();
        }
    }

    const StokesBasis& basis() const { return *basis_; }
    bool dealiased() const { return dealias_; }
    int quad_nodes_per_axis() const { return q_; }

    /// Coefficients of B(u, v) in the first n modes, by quadrature.
    SpectralField bilinear(const SpectralField& u, const SpectralField& v, int n) const {
        require_contract(n >= 0 && n <= basis_->dim(), "bilinear: bad target dimension");
        Eigen::VectorXd wx, wy;
        advection_grid(u, v, wx, wy);
        SpectralField out;
        out.coeffs = phi_x_.leftCols(n).transpose() * (qw_.array() * wx.array()).matrix() +
                     phi_y_.leftCols(n).transpose() * (qw_.array() * wy.array()).matrix();
        return out;
    }

    /// <B(u, v), v>: zero for the continuum operator; the discrete value
    /// measures the quadrature residual.
    double skew_pairing(const SpectralField& u, const SpectralField& v) const {
        Eigen::VectorXd wx, wy, rx, ry;
        advection_grid(u, v, wx, wy);
        reconstruct_on_quad(v, rx, ry);
        return (qw_.array() * (wx.array() * rx.array() + wy.array() * ry.array())).sum();
    }

    /// <B(u, u), Au>: zero for the continuum operator on the torus, nonzero
    /// in general on the square.
    double grad_pairing(const SpectralField& u) const {
        Eigen::VectorXd wx, wy, rx, ry;
        advection_grid(u, u, wx, wy);
        SpectralField au = u;
        for (int k = 0; k < u.dim(); ++k) au.coeffs(k) *= basis_->eigenvalues(k);
        reconstruct_on_quad(au, rx, ry);
        return (qw_.array() * (wx.array() * rx.array() + wy.array() * ry.array())).sum();
    }

    /// |<B(u,u), Au>| / (|u|_H^{1/2} |u|_V |Au|_H^{3/2}), the normalization
    /// under which the advection/dissipation pairing is uniformly bounded in
    /// two dimensions.  Returns 0 for the zero field.
    double interpolation_ratio(const SpectralField& u) const {
        const NormSet n = basis_->norms(u);
        const double denom =
            std::pow(n.h_sq, 0.25) * std::sqrt(n.v_sq) * std::pow(n.a_sq, 0.75);
        if (denom == 0.0) return 0.0;
        return std::abs(grad_pairing(u)) / denom;
    }

    /// Explicit part of the Galerkin drift: f - B(u, u), restricted to the
    /// first n modes.  with_bilinear=false drops the advection term (linear
    /// dynamics used by the closed-form oracles).
    SpectralField explicit_drift(const SpectralField& u, const SpectralField& f, int n,
                                 bool with_bilinear) const {
        SpectralField out = SpectralField::zero(n);
        const int nf = std::min(n, f.dim());
        out.coeffs.head(nf) = f.coeffs.head(nf);
        if (with_bilinear) {
            const SpectralField b = has_tensor(n) ? bilinear_tensor(u, n) : bilinear(u, u, n);
            out.coeffs -= b.coeffs;
        }
        return out;
    }

    // -- tensor fast path ---------------------------------------------------

    /// Precompute the level-n Galerkin tensor.  Not thread-safe; call before
    /// sharing the workspace across Monte Carlo workers.
    void ensure_tensor(int n) {
        require_contract(n >= 1 && n <= basis_->dim(), "ensure_tensor: bad level");
        if (tensor_.count(n)) return;
        Eigen::MatrixXd T(n * n, n);
        Eigen::MatrixXd wx(q_ * q_, n), wy(q_ * q_, n);
        for (int i = 0; i < n; ++i) {
            const auto ux = phi_x_.col(i).array();
            const auto uy = phi_y_.col(i).array();
            for (int j = 0; j < n; ++j) {
                wx.col(j) = ux * gxx_.col(j).array() + uy * gxy_.col(j).array();
                wy.col(j) = ux * gyx_.col(j).array() + uy * gyy_.col(j).array();
            }
            // rows (i*n + j), columns k:  <(e_i . grad) e_j, e_k>
            T.middleRows(i * n, n) =
                (phi_x_.leftCols(n).transpose() * (wx.array().colwise() * qw_.array()).matrix() +
                 phi_y_.leftCols(n).transpose() * (wy.array().colwise() * qw_.array()).matrix())
                    .transpose();
        }
        tensor_.emplace(n, std::move(T));
    }

    bool has_tensor(int n) const { return tensor_.count(n) != 0; }

    /// B(u, u) through the precomputed tensor; identical (up to rounding) to
    /// bilinear(u, u, n).
    SpectralField bilinear_tensor(const SpectralField& u, int n) const {
        const auto it = tensor_.find(n);
        require_contract(it != tensor_.end(), "bilinear_tensor: level not prepared");
        require_contract(u.dim() == n, "bilinear_tensor: field dimension != level");
        Eigen::VectorXd outer(n * n);
        for (int i = 0; i < n; ++i) outer.segment(i * n, n) = u.coeffs(i) * u.coeffs;
        return SpectralField(it->second.transpose() * outer);
    }

    // -- diagnostics --------------------------------------------------------

    /// Max relative deviation between the stored mode gradients and central
    /// differences of the sampled modes on the quadrature grid.  On the torus
    /// this measures the O(h^2) finite-difference error against the analytic
    /// derivative; on the square the stored gradients are the central
    /// differences, so the deviation is zero.
    double gradient_consistency() const {
        if (!basis_->is_periodic()) return 0.0;
        const int g = q_;
        const double h = basis_->domain.side_length / g;
        double worst = 0.0;
        for (int j = 0; j < basis_->dim(); ++j) {
            double num = 0.0, den = 0.0;
            for (int iy = 0; iy < g; ++iy) {
                for (int ix = 0; ix < g; ++ix) {
                    const int node = iy * g + ix;
                    const int xp = iy * g + (ix + 1) % g;
                    const int xm = iy * g + (ix + g - 1) % g;
                    const int yp = ((iy + 1) % g) * g + ix;
                    const int ym = ((iy + g - 1) % g) * g + ix;
                    const double fd[4] = {
                        (phi_x_(xp, j) - phi_x_(xm, j)) / (2.0 * h),
                        (phi_x_(yp, j) - phi_x_(ym, j)) / (2.0 * h),
                        (phi_y_(xp, j) - phi_y_(xm, j)) / (2.0 * h),
                        (phi_y_(yp, j) - phi_y_(ym, j)) / (2.0 * h),
                    };
                    const double an[4] = {gxx_(node, j), gxy_(node, j), gyx_(node, j),
                                          gyy_(node, j)};
                    for (int c = 0; c < 4; ++c) {
                        num = std::max(num, std::abs(fd[c] - an[c]));
                        den = std::max(den, std::abs(an[c]));
                    }
                }
            }
            if (den > 0.0) worst = std::max(worst, num / den);
        }
        return worst;
    }

private:
    void reconstruct_on_quad(const SpectralField& u, Eigen::VectorXd& rx,
                             Eigen::VectorXd& ry) const {
        rx = phi_x_.leftCols(u.dim()) * u.coeffs;
        ry = phi_y_.leftCols(u.dim()) * u.coeffs;
    }

    /// (u . grad) v sampled on the quadrature grid.
    void advection_grid(const SpectralField& u, const SpectralField& v, Eigen::VectorXd& wx,
                        Eigen::VectorXd& wy) const {
        require_contract(u.dim() <= basis_->dim() && v.dim() <= basis_->dim(),
                         "bilinear: field dimension exceeds basis dimension");
        Eigen::VectorXd ux, uy;
        reconstruct_on_quad(u, ux, uy);
        const int nv = v.dim();
        const Eigen::VectorXd vxx = gxx_.leftCols(nv) * v.coeffs;
        const Eigen::VectorXd vxy = gxy_.leftCols(nv) * v.coeffs;
        const Eigen::VectorXd vyx = gyx_.leftCols(nv) * v.coeffs;
        const Eigen::VectorXd vyy = gyy_.leftCols(nv) * v.coeffs;
        wx = (ux.array() * vxx.array() + uy.array() * vxy.array()).matrix();
        wy = (ux.array() * vyx.array() + uy.array() * vyy.array()).matrix();
    }

    /// Square-domain gradients: central differences at interior nodes, zero
    /// on the boundary rows.  The advection integrand multiplies them by a
    /// velocity that vanishes on the boundary, so the boundary rows never
    /// contribute to a quadrature.
    void central_difference_gradients() {
        const int nx = q_;
        const int g = nx - 1;
        const int n = basis_->dim();
        const double h = basis_->domain.h();
        gxx_ = Eigen::MatrixXd::Zero(nx * nx, n);
        gxy_ = Eigen::MatrixXd::Zero(nx * nx, n);
        gyx_ = Eigen::MatrixXd::Zero(nx * nx, n);
        gyy_ = Eigen::MatrixXd::Zero(nx * nx, n);
        for (int j = 0; j < n; ++j) {
            for (int iy = 1; iy < g; ++iy) {
                for (int ix = 1; ix < g; ++ix) {
                    const int node = iy * nx + ix;
                    gxx_(node, j) = (phi_x_(node + 1, j) - phi_x_(node - 1, j)) / (2.0 * h);
                    gyx_(node, j) = (phi_y_(node + 1, j) - phi_y_(node - 1, j)) / (2.0 * h);
                    gxy_(node, j) = (phi_x_(node + nx, j) - phi_x_(node - nx, j)) / (2.0 * h);
                    gyy_(node, j) = (phi_y_(node + nx, j) - phi_y_(node - nx, j)) / (2.0 * h);
                }
            }
        }
    }

    const StokesBasis* basis_;
    bool dealias_;
    int q_ = 0;
    Eigen::MatrixXd phi_x_, phi_y_;
    Eigen::MatrixXd gxx_, gxy_, gyx_, gyy_;
    Eigen::VectorXd qw_;
    std::map<int, Eigen::MatrixXd> tensor_;
};

} // namespace snse
