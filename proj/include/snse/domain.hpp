#pragma once

// Computational domains: the periodic square torus and the no-slip
// (homogeneous Dirichlet) square cavity, both discretized on uniform
// tensor-product grids.

#include <cmath>
#include <string>

#include "snse/errors.hpp"

namespace snse {

enum class DomainKind {
    PeriodicTorus,   ///< [0, L)^2 with periodic boundary conditions
    DirichletSquare, ///< [0, L]^2 with u = 0 on the boundary
};

inline std::string to_string(DomainKind kind) {
    return kind == DomainKind::PeriodicTorus ? "periodic_torus" : "dirichlet_square";
}

/// Geometry plus grid resolution.  For the torus, grid_points is the number
/// of nodes per axis (the right edge is identified with the left); for the
/// Dirichlet square it is the number of intervals per axis, so there are
/// grid_points + 1 nodes per axis including the boundary.
struct DomainSpec {
    DomainKind kind = DomainKind::PeriodicTorus;
    double side_length = 2.0 * M_PI;
    int grid_points = 32;

    void validate() const {
        require_config(std::isfinite(side_length) && side_length > 0.0,
                       "domain.side_length must be positive");
        require_config(grid_points >= 8, "domain.grid_points must be at least 8");
        require_config(grid_points % 2 == 0, "domain.grid_points must be even");
    }

    /// Grid spacing.
    double h() const { return side_length / grid_points; }

    /// Number of distinct nodes per axis actually stored.
    int nodes_per_axis() const {
        return kind == DomainKind::PeriodicTorus ? grid_points : grid_points + 1;
    }

    int node_count() const {
        const int n = nodes_per_axis();
        return n * n;
    }

    bool operator==(const DomainSpec& o) const {
        return kind == o.kind && side_length == o.side_length && grid_points == o.grid_points;
    }
};

} // namespace snse
