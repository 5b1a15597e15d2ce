#pragma once

// Dimensional synthesis from a prescribed cubic workspace.
//
// Velocity transmission factors are bounded on the cube diagonal p = (u,u,u),
// where the Jacobian spectrum is closed form (see diagonal_spectrum).  The
// factors equal 1 at u = 0 and degrade monotonically toward the direct
// singularity u -> 1/sqrt(3)*L and the reach boundary u -> -1/sqrt(6)*L, so
// the feasible diagonal segment [u1, u2] is located by bisection on each
// side.  The cube with main diagonal spanning that segment then fixes the
// leg length:  L = side / (u2_hat - u1_hat)  with u_hat = u / L.

#include "orthoglide/kinematics.hpp"
#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <cmath>

namespace orthoglide {

struct SynthesisSpec {
    double cube_side = 200.0;  // prescribed workspace edge, mm
    double psi_lo = 0.5;       // lower transmission-factor bound
    double psi_hi = 2.0;       // upper transmission-factor bound
    double bisect_tol = 1e-10; // bisection width on normalized u
};

struct SynthesisReport {
    // Normalized (L = 1) feasible diagonal segment, certified feasible at
    // both returned endpoints.
    double u_hat_lo = 0.0;
    double u_hat_hi = 0.0;

    double leg_length = 0.0;
    Cube cube;           // synthesized workspace cube (per-axis placement)
    double q_lo = 0.0;   // per-axis cube coordinate bounds: [q_lo, q_hi]
    double q_hi = 0.0;

    double rho_min = 0.0;  // actuated-joint excursion over the cube
    double rho_max = 0.0;
    double stroke = 0.0;

    // Achieved factors at the two diagonal corners (the active constraints).
    TransmissionFactors at_q_lo;
    TransmissionFactors at_q_hi;

    SynthesisSpec spec;
    MachineParams params;  // ready-to-use machine model
};

namespace detail {

/// Transmission constraints at normalized diagonal coordinate u (L = 1).
inline bool diagonal_feasible(double u, double psi_lo, double psi_hi) {
    if (!(std::abs(u) < 1.0 / std::sqrt(2.0))) return false;
    const auto [lo, hi] = diagonal_spectrum(u, 1.0);
    return lo >= psi_lo && hi <= psi_hi;
}

/// Bisect between a feasible and an infeasible endpoint until the bracket
/// width drops below tol; returns the feasible endpoint (the reported
/// segment is therefore certified feasible, never optimistic).
inline double bisect_feasibility_edge(double feasible, double infeasible, double psi_lo,
                                      double psi_hi, double tol) {
    while (std::abs(infeasible - feasible) > tol) {
        const double mid = 0.5 * (feasible + infeasible);
        if (mid == feasible || mid == infeasible) break;  // bracket exhausted
        if (diagonal_feasible(mid, psi_lo, psi_hi))
            feasible = mid;
        else
            infeasible = mid;
    }
    return feasible;
}

}  // namespace detail

/// Feasible diagonal segment [u1_hat, u2_hat] for the given factor bounds,
/// normalized to L = 1.  For the default bounds [0.5, 2] the endpoints are
/// -1/sqrt(18) and +1/sqrt(6).
inline std::pair<double, double> locate_critical_points(double psi_lo, double psi_hi,
                                                        double tol = 1e-10) {
    if (!(psi_lo > 0.0) || !(psi_lo < 1.0) || !(psi_hi > 1.0) || !(tol > 0.0) ||
        !std::isfinite(psi_lo) || !std::isfinite(psi_hi))
        throw DegenerateSpecError(
            "transmission bounds must satisfy 0 < psi_lo < 1 < psi_hi (factors equal 1 "
            "at the cube center)");

    // u = 0 is feasible (J = I there); the brackets end just inside the
    // reach boundary u = -1/sqrt(6) and the direct singularity u = 1/sqrt(3),
    // both of which violate any finite bounds.
    const double lo_edge = -1.0 / std::sqrt(6.0) + 1e-9;
    const double hi_edge = 1.0 / std::sqrt(3.0) - 1e-9;
    const double u1 = detail::bisect_feasibility_edge(0.0, lo_edge, psi_lo, psi_hi, tol);
    const double u2 = detail::bisect_feasibility_edge(0.0, hi_edge, psi_lo, psi_hi, tol);
    return {u1, u2};
}

/// Leg length putting the cube diagonal onto the feasible segment.
inline double size_leg_length(double u_hat_lo, double u_hat_hi, double cube_side) {
    if (!(cube_side > 0.0) || !std::isfinite(cube_side))
        throw DegenerateSpecError("cube side must be positive");
    if (!(u_hat_hi > u_hat_lo))
        throw DegenerateSpecError("empty feasible diagonal segment");
    return cube_side / (u_hat_hi - u_hat_lo);
}

/// Actuated-joint range over the machine's cube (identical for every leg of
/// the canonical-axis machine; the envelope over legs is returned otherwise).
inline JointRange actuator_range(const MachineParams& m) {
    JointRange env = m.joint_limits[0];
    for (int i = 1; i < 3; ++i) {
        env.lo = std::min(env.lo, m.joint_limits[i].lo);
        env.hi = std::max(env.hi, m.joint_limits[i].hi);
    }
    return env;
}

/// Full synthesis: factor bounds + cube side -> machine dimensions, joint
/// ranges, and the achieved corner factors.
inline SynthesisReport synthesize(const SynthesisSpec& spec) {
    SynthesisReport rep;
    rep.spec = spec;

    auto [u1, u2] = locate_critical_points(spec.psi_lo, spec.psi_hi, spec.bisect_tol);
    rep.u_hat_lo = u1;
    rep.u_hat_hi = u2;
    rep.leg_length = size_leg_length(u1, u2, spec.cube_side);

    RawMachineParams raw;
    raw.leg_length = rep.leg_length;
    raw.cube_side = spec.cube_side;
    const double center = 0.5 * (u1 + u2) * rep.leg_length;
    raw.cube_offset = Vec3::Constant(center);
    rep.params = validate_params(raw);

    rep.cube = rep.params.cube;
    rep.q_lo = rep.cube.min_corner().x();
    rep.q_hi = rep.cube.max_corner().x();

    const JointRange range = actuator_range(rep.params);
    rep.rho_min = range.lo;
    rep.rho_max = range.hi;
    rep.stroke = range.hi - range.lo;

    rep.at_q_lo = transmission_factors(rep.cube.min_corner(), rep.params);
    rep.at_q_hi = transmission_factors(rep.cube.max_corner(), rep.params);
    return rep;
}

}  // namespace orthoglide
