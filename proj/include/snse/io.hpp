#pragma once

// Deterministic text output: CSV/JSON table writers and trajectory export.
// Floating-point fields use %.17g so that a value survives a round trip
// through text exactly; byte-identical reruns depend on it.

#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "snse/integrator.hpp"

namespace snse {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
    os << "time,h_sq,v_sq,a_sq,dissipation";
    if (rec.record_coeffs)
        for (int k = 0; k < rec.level; ++k) os << ",c" << k;
    os << "\n";
    for (int m = 0; m < rec.recorded(); ++m) {
        const auto i = static_cast<std::size_t>(m);
        os << g17(rec.times[i]) << ',' << g17(rec.h_sq[i]) << ',' << g17(rec.v_sq[i]) << ','
           << g17(rec.a_sq[i]) << ',' << g17(rec.dissipation[i]);
        if (rec.record_coeffs)
            for (int k = 0; k < rec.level; ++k) os << ',' << g17(rec.coeffs(m, k));
        os << "\n";
    }
}

} // namespace snse
