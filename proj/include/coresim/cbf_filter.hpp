#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "coresim/geometry.hpp"
#include "coresim/safety_grid.hpp"

namespace coresim {

using RobotState = Pose;

/// Body-frame command: planar velocity plus yaw rate.
struct ControlInput {
    double vx = 0.0;
    double vy = 0.0;
    double omega = 0.0;

    double planar_norm() const { return std::sqrt(vx * vx + vy * vy); }
};

inline double control_distance(const ControlInput& a, const ControlInput& b) {
    const double dx = a.vx - b.vx, dy = a.vy - b.vy, dw = a.omega - b.omega;
    return std::sqrt(dx * dx + dy * dy + dw * dw);
}

struct DynamicsModel {
    double dt = 0.1;
};

/// Linear extended class-K function alpha(h) = slope * h.
struct ClassK {
    double slope = 0.25;
    double operator()(double h) const { return slope * h; }
};

/// Rotation-matrix velocity integration: x' = x + dt * R(theta) * u.
inline RobotState step_dynamics(const RobotState& s, const ControlInput& u, double dt) {
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    RobotState out;
    out.x = s.x + dt * (c * u.vx - sn * u.vy);
    out.y = s.y + dt * (sn * u.vx + c * u.vy);
    out.theta = wrap_angle(s.theta + dt * u.omega);
    return out;
}

/// Halfspace a^T u >= b in control space.
struct HalfspaceConstraint {
    std::array<double, 3> a{0.0, 0.0, 0.0};
    double b = 0.0;
};

/**
 * Assembles the forward-invariance constraint <grad h, g(x) u> >= -alpha(h)
 * at the current state: a = R(theta)^T grad h (zero heading component, h is
 * planar), b = -alpha(h). Uses the side-corrected control sample so the
 * constraint keeps braking through the boundary-cell ribbon.
 */
inline HalfspaceConstraint cbf_constraint(const RobotState& s, const Barrier& barrier,
                                          const ClassK& alpha) {
    const BarrierSample smp = barrier_control_sample(barrier, s.position());
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    HalfspaceConstraint hc;
    hc.a = {c * smp.gradient.x + sn * smp.gradient.y, -sn * smp.gradient.x + c * smp.gradient.y,
            0.0};
    hc.b = -alpha(smp.h);
    return hc;
}

struct InputBounds {
    bool enabled = false;
    std::array<double, 3> lo{-1.0, -1.0, -1.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};

    double clamp(int k, double v) const { return std::clamp(v, lo[k], hi[k]); }
};

struct QpResult {
    ControlInput u;
    bool degenerate = false;  // vanishing constraint with infeasible offset
};

/**
 * Minimally invasive safe input: argmin ||u - u_nom||^2 s.t. a^T u >= b.
 * Closed-form halfspace projection; with box bounds enabled the scalar dual
 * is solved by monotone bisection (exact for this piecewise-linear system).
 * A vanishing 'a' with a violated offset returns u = 0 and flags degeneracy
 * (the zero input is always feasible when h >= 0).
 */
inline QpResult solve_qp(const ControlInput& u_nom, const std::array<double, 3>& a, double b,
                         const InputBounds& bounds = {}) {
    for (double v : a)
        if (!std::isfinite(v)) throw std::invalid_argument("solve_qp: non-finite constraint");
    if (!std::isfinite(b)) throw std::invalid_argument("solve_qp: non-finite constraint offset");

    const std::array<double, 3> n{u_nom.vx, u_nom.vy, u_nom.omega};
    const double norm2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    const double an = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];

    QpResult res;
    if (norm2 < 1e-18) {
        if (an >= b) {
            res.u = u_nom;
            if (bounds.enabled)
                res.u = {bounds.clamp(0, n[0]), bounds.clamp(1, n[1]), bounds.clamp(2, n[2])};
            return res;
        }
        res.u = ControlInput{};
        res.degenerate = true;
        return res;
    }

    if (!bounds.enabled) {
        if (an >= b) {
            res.u = u_nom;
            return res;
        }
        const double lam = (b - an) / norm2;
        res.u = {n[0] + lam * a[0], n[1] + lam * a[1], n[2] + lam * a[2]};
        return res;
    }

    // Box-constrained path: u(lambda) = clamp(u_nom + lambda a), with
    // phi(lambda) = a^T u(lambda) - b nondecreasing in lambda.
    auto u_of = [&](double lam) {
        std::array<double, 3> u;
        for (int k = 0; k < 3; ++k) u[k] = bounds.clamp(k, n[k] + lam * a[k]);
        return u;
    };
    auto phi = [&](double lam) {
        const auto u = u_of(lam);
        return a[0] * u[0] + a[1] * u[1] + a[2] * u[2] - b;
    };
    if (phi(0.0) >= 0.0) {
        const auto u = u_of(0.0);
        res.u = {u[0], u[1], u[2]};
        return res;
    }
    double lo = 0.0, hi = 1.0;
    while (phi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
    if (phi(hi) < 0.0) {
        // Constraint unreachable inside the box; best effort at the box face.
        const auto u = u_of(hi);
        res.u = {u[0], u[1], u[2]};
        res.degenerate = true;
        return res;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (phi(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    const auto u = u_of(hi);
    res.u = {u[0], u[1], u[2]};
    return res;
}

struct FilterDiagnostics {
    double h = 0.0;
    double margin = 0.0;        // a^T u_safe - b
    double intervention = 0.0;  // ||u_safe - u_nom||
    bool intervened = false;
    bool degenerate = false;
    Vec2 gradient;
};

/// One filter evaluation: assemble the constraint from the barrier, project
/// the nominal input, record whether and how much the filter intervened.
inline std::pair<ControlInput, FilterDiagnostics> filter_step(const RobotState& s,
                                                              const ControlInput& u_nom,
                                                              const Barrier& barrier,
                                                              const ClassK& alpha,
                                                              const InputBounds& bounds = {}) {
    const BarrierSample smp = barrier_control_sample(barrier, s.position());
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    HalfspaceConstraint hc;
    hc.a = {c * smp.gradient.x + sn * smp.gradient.y, -sn * smp.gradient.x + c * smp.gradient.y,
            0.0};
    hc.b = -alpha(smp.h);
    const QpResult qp = solve_qp(u_nom, hc.a, hc.b, bounds);
    FilterDiagnostics d;
    d.h = smp.h;
    d.gradient = smp.gradient;
    d.margin = hc.a[0] * qp.u.vx + hc.a[1] * qp.u.vy + hc.a[2] * qp.u.omega - hc.b;
    d.intervention = control_distance(qp.u, u_nom);
    d.intervened = d.intervention > 1e-12;
    d.degenerate = qp.degenerate;
    return {qp.u, d};
}

}  // namespace coresim
