#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "coresim/cbf_filter.hpp"

namespace coresim_test {

using coresim::ControlInput;

/// Exact minimizer of ||u - u_nom||^2 over the grid {-1, -1+step, ..., 1}^3
/// subject to a^T u >= b. The inner coordinate is resolved without scanning:
/// the grid minimum of a separable 1-D convex function over a ray is its
/// clamped nearest grid point, which keeps the search exact and fast.
struct GridOracle {
    double step = 1e-3;

    static double snap_down(double v, double step) {
        return -1.0 + std::floor((v + 1.0) / step) * step;
    }

    double best_objective(const ControlInput& u_nom, const std::array<double, 3>& a,
                          double b) const {
        const std::array<double, 3> n{u_nom.vx, u_nom.vy, u_nom.omega};
        const int cells = static_cast<int>(std::llround(2.0 / step));
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= cells; ++i) {
            const double u0 = -1.0 + i * step;
            for (int j = 0; j <= cells; ++j) {
                const double u1 = -1.0 + j * step;
                const double rem = b - a[0] * u0 - a[1] * u1;
                double u2;
                if (std::abs(a[2]) < 1e-15) {
                    if (rem > 1e-12) continue;  // infeasible for any u2
                    u2 = std::clamp(n[2], -1.0, 1.0);
                    u2 = std::clamp(snap_down(u2, step), -1.0, 1.0);
                    const double up = std::min(1.0, u2 + step);
                    if (std::abs(up - n[2]) < std::abs(u2 - n[2])) u2 = up;
                } else {
                    const double bound = rem / a[2];
                    double lo = -1.0, hi = 1.0;
                    if (a[2] > 0.0) lo = bound;   // u2 >= bound
                    else hi = bound;              // u2 <= bound
                    if (lo > hi) continue;
                    // grid points inside [lo, hi]: snap the target inward
                    const double lo_g = -1.0 + std::ceil((lo + 1.0) / step - 1e-9) * step;
                    const double hi_g = -1.0 + std::floor((hi + 1.0) / step + 1e-9) * step;
                    if (lo_g > hi_g + 1e-15) continue;
                    u2 = std::clamp(n[2], lo_g, hi_g);
                    double down = snap_down(u2, step);
                    down = std::clamp(down, lo_g, hi_g);
                    const double up = std::clamp(down + step, lo_g, hi_g);
                    u2 = std::abs(down - n[2]) <= std::abs(up - n[2]) ? down : up;
                }
                const double d0 = u0 - n[0], d1 = u1 - n[1], d2 = u2 - n[2];
                best = std::min(best, d0 * d0 + d1 * d1 + d2 * d2);
            }
        }
        return best;
    }
};

}  // namespace coresim_test
