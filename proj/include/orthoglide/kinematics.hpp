#pragma once

// Kinematics of the reduced translational model.
//
// Leg i constrains the platform point p by  ||p - rho_i * a_i|| = L  where
// a_i is the unit direction of the i-th linear axis and rho_i the joint
// coordinate.  With orthonormal axes the inverse map is closed form:
//
//   rho_i = <a_i, p> + branch * sqrt(L^2 - ||p||^2 + <a_i, p>^2)
//
// branch = -1 places the carriage behind the platform point along the axis
// (the assembly mode used by the synthesis convention).

#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace orthoglide {

struct JointCoords {
    Vec3 rho = Vec3::Zero();
};

struct IkResult {
    JointCoords joints;
    std::array<bool, 3> within_limits{true, true, true};  // non-fatal limit flags

    bool all_within_limits() const {
        return within_limits[0] && within_limits[1] && within_limits[2];
    }
};

/// Velocity transmission factors: extreme singular values of J = dp/drho.
struct TransmissionFactors {
    double psi_min = 0.0;
    double psi_max = 0.0;

    // The same quantities as eigenvalues of J*J^T (amplification of squared
    // speeds), kept for reporting alongside psi.
    double jjt_eigen_min() const { return psi_min * psi_min; }
    double jjt_eigen_max() const { return psi_max * psi_max; }
};

namespace detail {

/// Radicand of leg i's closed-form solution: L^2 - (squared distance of p
/// from the i-th axis line).
inline double leg_radicand(const Vec3& p, const MachineParams& m, int i) {
    const double along = m.actuator_axes[i].dot(p);
    return m.leg_length * m.leg_length - (p.squaredNorm() - along * along);
}

}  // namespace detail

/// Closed-form inverse kinematics.  Throws UnreachableError naming the legs
/// that cannot reach p; joint-limit violations are flagged, not fatal.
inline IkResult inverse_kinematics(const Vec3& p, const MachineParams& m) {
    std::array<bool, 3> fail{false, false, false};
    Vec3 rho;
    for (int i = 0; i < 3; ++i) {
        const double rad = detail::leg_radicand(p, m, i);
        if (rad < 0.0) {
            fail[i] = true;
            continue;
        }
        rho[i] = m.actuator_axes[i].dot(p) + m.ik_branch * std::sqrt(rad);
    }
    if (fail[0] || fail[1] || fail[2]) {
        std::string which;
        for (int i = 0; i < 3; ++i)
            if (fail[i]) which += char('x' + i);
        throw UnreachableError("point outside reach of leg(s) " + which, fail);
    }
    IkResult out;
    out.joints.rho = rho;
    for (int i = 0; i < 3; ++i)
        out.within_limits[i] =
            rho[i] >= m.joint_limits[i].lo && rho[i] <= m.joint_limits[i].hi;
    return out;
}

/// Analytic inverse Jacobian, row i = d rho_i / d p:
///   a_i - (branch / s_i) * (p - <a_i,p> a_i),   s_i = |<a_i,p> - rho_i|.
/// Throws SingularError if any leg radicand vanishes (row undefined).
inline Mat3 inverse_jacobian(const Vec3& p, const MachineParams& m) {
    Mat3 jinv;
    for (int i = 0; i < 3; ++i) {
        const double rad = detail::leg_radicand(p, m, i);
        if (rad <= 0.0)
            throw SingularError("inverse Jacobian undefined: leg " + std::to_string(i) +
                                " at reach boundary");
        const double s = std::sqrt(rad);
        const Vec3& a = m.actuator_axes[i];
        const Vec3 transverse = p - a.dot(p) * a;
        jinv.row(i) = (a - (m.ik_branch / s) * transverse).transpose();
    }
    return jinv;
}

/// Kinematic Jacobian J = dp/drho.  Throws SingularError when |det J^-1|
/// falls below 1e-12 (direct or inverse singularity).
inline Mat3 jacobian(const Vec3& p, const MachineParams& m) {
    const Mat3 jinv = inverse_jacobian(p, m);
    const double det = jinv.determinant();
    if (std::abs(det) < 1e-12)
        throw SingularError("Jacobian singular at queried posture (|det| = " +
                            std::to_string(std::abs(det)) + ")");
    return jinv.inverse();
}

/// Extreme singular values of J, computed from the analytic J^-1.
inline TransmissionFactors transmission_factors(const Vec3& p, const MachineParams& m) {
    const Mat3 jinv = inverse_jacobian(p, m);
    if (std::abs(jinv.determinant()) < 1e-12)
        throw SingularError("transmission factors undefined at singular posture");
    Eigen::JacobiSVD<Mat3> svd(jinv);
    TransmissionFactors tf;
    tf.psi_min = 1.0 / svd.singularValues()(0);  // largest sigma of J^-1
    tf.psi_max = 1.0 / svd.singularValues()(2);  // smallest sigma of J^-1
    return tf;
}

/// Singular-value pair of J along the cube diagonal p = (u,u,u), sorted
/// ascending.  With s = sqrt(L^2 - 2u^2):
///   sigma(J^-1) = { 1 + 2u/s  (once),  1 - u/s  (twice) }
/// so psi values are the reciprocals of their absolute values.
/// Requires |u| < L/sqrt(2) (diagonal reach).
inline std::pair<double, double> diagonal_spectrum(double u, double L) {
    if (!(std::abs(u) < L / std::sqrt(2.0)))
        throw UnreachableError("diagonal point outside reach", {true, true, true});
    const double s = std::sqrt(L * L - 2.0 * u * u);
    const double sig_diag = std::abs(1.0 + 2.0 * u / s);
    const double sig_perp = std::abs(1.0 - u / s);
    const double psi_a = 1.0 / sig_diag;
    const double psi_b = 1.0 / sig_perp;
    return {std::min(psi_a, psi_b), std::max(psi_a, psi_b)};
}

// ---------------------------------------------------------------------------
// Forward kinematics
// ---------------------------------------------------------------------------

/// Newton solve for the common point of three spheres |p - c_i| = r_i.
/// Damped: steps clamped to step_clamp, at most max_iter iterations,
/// converged when every residual is below tol (mm).  Shared by nominal FK
/// and the perturbed-geometry solves of the sensitivity module.
inline Vec3 intersect_leg_spheres(const std::array<Vec3, 3>& centers,
                                  const std::array<double, 3>& radii, Vec3 seed,
                                  double step_clamp, double tol = 1e-9, int max_iter = 50) {
    Vec3 p = seed;
    for (int iter = 0; iter < max_iter; ++iter) {
        Vec3 res;
        Mat3 grad;  // rows: unit vectors from sphere centers to p
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            const Vec3 d = p - centers[i];
            const double dist = d.norm();
            if (dist < 1e-9)
                throw SingularError("forward kinematics: iterate collapsed onto a leg anchor");
            res[i] = dist - radii[i];
            grad.row(i) = (d / dist).transpose();
            worst = std::max(worst, std::abs(res[i]));
        }
        if (worst <= tol) return p;
        if (std::abs(grad.determinant()) < 1e-12)
            throw SingularError("forward kinematics: constraint gradient singular");
        Vec3 step = grad.partialPivLu().solve(-res);
        const double len = step.norm();
        if (len > step_clamp) step *= step_clamp / len;
        p += step;
    }
    throw NoConvergenceError("forward kinematics did not converge in 50 iterations");
}

/// Forward kinematics by damped Newton on the leg constraints, seeded at
/// `seed`.  Converges to the assembly mode nearest the seed.
inline Vec3 forward_kinematics(const Vec3& rho, const MachineParams& m, const Vec3& seed) {
    std::array<Vec3, 3> centers;
    std::array<double, 3> radii;
    for (int i = 0; i < 3; ++i) {
        centers[i] = rho[i] * m.actuator_axes[i];
        radii[i] = m.leg_length;
    }
    return intersect_leg_spheres(centers, radii, seed, 0.5 * m.leg_length);
}

/// Convenience overload seeding at the cube center.
inline Vec3 forward_kinematics(const Vec3& rho, const MachineParams& m) {
    return forward_kinematics(rho, m, m.cube.center);
}

}  // namespace orthoglide
