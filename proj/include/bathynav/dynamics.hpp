#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "bathynav/common.hpp"

namespace bathynav {

template<typename Scalar>
using Vector6T = Eigen::Matrix<Scalar, 6, 1>;

/// Rigid-body parameters plus the velocity-tracking controller that maps commanded (u, omega)
/// to surge force and yaw moment. Gains default to 5*m and 5*I_z.
template<typename Scalar>
struct BodyParamsT {
    Scalar mass = 30;
    Scalar inertia_x = 2;
    Scalar inertia_y = 3;
    Scalar inertia_z = 4;

    Scalar surge_gain = 150;  // K_u
    Scalar yaw_gain = 20;     // K_r
    Scalar surge_drag = 1;    // D_u, quadratic
    Scalar sway_drag = 1;     // D_v, quadratic
    Scalar sway_linear_drag = 240;  // lateral hull resistance, N s/m
    Scalar yaw_drag = 1;      // D_r, quadratic

    Scalar max_surge_force = 400;
    Scalar max_yaw_moment = 60;

    Scalar min_surge = Scalar(-0.5);
    Scalar max_surge = 2;
    Scalar max_yaw_rate = 1;

    void validate() const {
        const bool ok = mass > 0 && inertia_x > 0 && inertia_y > 0 && inertia_z > 0 && surge_gain >= 0 && yaw_gain >= 0 &&
                        surge_drag >= 0 && sway_drag >= 0 && sway_linear_drag >= 0 && yaw_drag >= 0 && max_surge_force > 0 && max_yaw_moment > 0 &&
                        min_surge <= max_surge && max_yaw_rate >= 0;
        if (!ok) { throw InvalidParams("invalid body parameters"); }
    }
};
using BodyParams = BodyParamsT<double>;

/// Body-frame velocities nu = (u, v, w, p, q, r) and world pose eta = (x, y, z, roll, pitch, yaw).
template<typename Scalar>
struct FullBodyStateT {
    Vector6T<Scalar> nu = Vector6T<Scalar>::Zero();
    Vector6T<Scalar> eta = Vector6T<Scalar>::Zero();
};
using FullBodyState = FullBodyStateT<double>;

/// (X, Y, Z, K, M, N): forces in surge/sway/heave and moments about roll/pitch/yaw.
template<typename Scalar>
using Wrench6T = Vector6T<Scalar>;
using Wrench6 = Wrench6T<double>;

template<typename Scalar>
struct FullDerivativesT {
    Vector6T<Scalar> nu_dot;
    Vector6T<Scalar> eta_dot;
};

/// Six-DOF rigid-body equations solved for the accelerations, plus ZYX Euler kinematics.
template<typename Scalar>
FullDerivativesT<Scalar> full_derivatives(const FullBodyStateT<Scalar> &s, const Wrench6T<Scalar> &f, const BodyParamsT<Scalar> &p) {
    const Scalar u = s.nu[0], v = s.nu[1], w = s.nu[2];
    const Scalar pr = s.nu[3], q = s.nu[4], r = s.nu[5];
    const Scalar m = p.mass, ix = p.inertia_x, iy = p.inertia_y, iz = p.inertia_z;

    FullDerivativesT<Scalar> d;
    d.nu_dot[0] = f[0] / m - q * w + r * v;
    d.nu_dot[1] = f[1] / m - r * u + pr * w;
    d.nu_dot[2] = f[2] / m - pr * v + q * u;
    d.nu_dot[3] = (f[3] - (iz - iy) * q * r) / ix;
    d.nu_dot[4] = (f[4] - (ix - iz) * r * pr) / iy;
    d.nu_dot[5] = (f[5] - (iy - ix) * pr * q) / iz;

    const Scalar phi = s.eta[3], theta = s.eta[4], psi = s.eta[5];
    const Scalar cphi = std::cos(phi), sphi = std::sin(phi);
    const Scalar cth = std::cos(theta), sth = std::sin(theta);
    const Scalar cpsi = std::cos(psi), spsi = std::sin(psi);

    Eigen::Matrix<Scalar, 3, 3> rot;
    rot << cpsi * cth, -spsi * cphi + cpsi * sth * sphi, spsi * sphi + cpsi * cphi * sth,
           spsi * cth, cpsi * cphi + sphi * sth * spsi, -cpsi * sphi + sth * spsi * cphi,
           -sth, cth * sphi, cth * cphi;
    d.eta_dot.template head<3>() = rot * s.nu.template head<3>();
    d.eta_dot[3] = pr + (q * sphi + r * cphi) * std::tan(theta);
    d.eta_dot[4] = q * cphi - r * sphi;
    d.eta_dot[5] = (q * sphi + r * cphi) / cth;
    return d;
}

/// Planar state: world position, heading in (-pi, pi], body-frame surge, sway and yaw rate.
template<typename Scalar>
struct AsvStateT {
    Scalar x = 0;
    Scalar y = 0;
    Scalar psi = 0;
    Scalar u = 0;
    Scalar v = 0;
    Scalar r = 0;

    [[nodiscard]] Vec2T<Scalar> position() const { return {x, y}; }
    friend bool operator==(const AsvStateT &, const AsvStateT &) = default;
};
using AsvState = AsvStateT<double>;

template<typename Scalar>
struct ActionT {
    Scalar surge = 0;     // commanded u
    Scalar yaw_rate = 0;  // commanded omega

    [[nodiscard]] ActionT clamped(const BodyParamsT<Scalar> &p) const {
        return {std::clamp(surge, p.min_surge, p.max_surge), std::clamp(yaw_rate, -p.max_yaw_rate, p.max_yaw_rate)};
    }
    friend bool operator==(const ActionT &, const ActionT &) = default;
};
using Action = ActionT<double>;

template<typename Scalar>
struct PlanarWrenchT {
    Scalar surge = 0;  // X_tot
    Scalar sway = 0;   // Y_tot
    Scalar yaw = 0;    // N_tot
};
using PlanarWrench = PlanarWrenchT<double>;

template<typename Scalar>
struct ReducedDerivativesT {
    Scalar u_dot, v_dot, r_dot;
    Scalar x_dot, y_dot, psi_dot;
};

/// Three-DOF horizontal-plane reduction (p = q = w = 0).
template<typename Scalar>
ReducedDerivativesT<Scalar> reduced_derivatives(const AsvStateT<Scalar> &s, const PlanarWrenchT<Scalar> &f, const BodyParamsT<Scalar> &p) {
    const Scalar c = std::cos(s.psi), sn = std::sin(s.psi);
    return {f.surge / p.mass + s.r * s.v,
            f.sway / p.mass - s.r * s.u,
            f.yaw / p.inertia_z,
            s.u * c - s.v * sn,
            s.u * sn + s.v * c,
            s.r};
}

/// Proportional velocity tracking with quadratic drag. Sway is unactuated and damped.
template<typename Scalar>
PlanarWrenchT<Scalar> velocity_controller(const AsvStateT<Scalar> &s, const ActionT<Scalar> &a, const BodyParamsT<Scalar> &p) {
    const Scalar x = p.surge_gain * (a.surge - s.u) - p.surge_drag * s.u * std::abs(s.u);
    const Scalar n = p.yaw_gain * (a.yaw_rate - s.r) - p.yaw_drag * s.r * std::abs(s.r);
    return {std::clamp(x, -p.max_surge_force, p.max_surge_force),
            -(p.sway_linear_drag + p.sway_drag * std::abs(s.v)) * s.v,
            std::clamp(n, -p.max_yaw_moment, p.max_yaw_moment)};
}

template<typename Scalar>
struct StepResultT {
    AsvStateT<Scalar> state;
    Scalar surge_accel = 0;  // u_dot at the start of the step
    Scalar yaw_accel = 0;    // r_dot at the start of the step
};
using StepResult = StepResultT<double>;

/// One semi-implicit Euler step under a given wrench. Velocities advance first: the force term
/// is applied as an impulse and the Coriolis coupling (u_dot = r v, v_dot = -r u) is integrated
/// exactly as a rotation of (u, v), which keeps body speed invariant when no force acts. The
/// pose then advances with the new velocities.
template<typename Scalar>
StepResultT<Scalar> integrate(const AsvStateT<Scalar> &s, const PlanarWrenchT<Scalar> &f, Scalar dt, const BodyParamsT<Scalar> &p) {
    const auto der = reduced_derivatives(s, f, p);

    const Scalar u1 = s.u + dt * (f.surge / p.mass);
    const Scalar v1 = s.v + dt * (f.sway / p.mass);
    const Scalar turn = s.r * dt;
    const Scalar ct = std::cos(turn), st = std::sin(turn);

    AsvStateT<Scalar> n;
    n.u = ct * u1 + st * v1;
    n.v = ct * v1 - st * u1;
    n.r = s.r + dt * der.r_dot;

    const Scalar c = std::cos(s.psi), sn = std::sin(s.psi);
    n.x = s.x + dt * (n.u * c - n.v * sn);
    n.y = s.y + dt * (n.u * sn + n.v * c);
    n.psi = wrap_angle(s.psi + dt * n.r);
    return {n, der.u_dot, der.r_dot};
}

/// Controller + integrator; realized surge and yaw rate are kept within the kinematic limits.
template<typename Scalar>
StepResultT<Scalar> step(const AsvStateT<Scalar> &s, const ActionT<Scalar> &a, Scalar dt, const BodyParamsT<Scalar> &p) {
    const auto cmd = a.clamped(p);
    auto res = integrate(s, velocity_controller(s, cmd, p), dt, p);
    res.state.u = std::clamp(res.state.u, p.min_surge, p.max_surge);
    res.state.r = std::clamp(res.state.r, -p.max_yaw_rate, p.max_yaw_rate);
    return res;
}

}  // namespace bathynav
