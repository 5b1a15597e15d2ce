#pragma once

// Shared scalar/vector types, unit conventions and error taxonomy for the
// orthoglide toolkit.
//
// Unit conventions used throughout the library:
//   lengths/positions  mm
//   forces             N
//   angles             rad
//   torques            N*mm
//   stiffness          N/mm (translational), N*mm/rad (rotational)

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace orthoglide {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all orthoglide exceptions.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Requested point lies outside the reachable volume of one or more legs.
struct UnreachableError : Error {
    std::array<bool, 3> leg_failed{false, false, false};
    UnreachableError(const std::string& msg, std::array<bool, 3> failed)
        : Error(msg), leg_failed(failed) {}
};

/// Kinematic Jacobian is singular (platform at / numerically at a singularity).
struct SingularError : Error {
    using Error::Error;
};

/// Iterative solve exhausted its iteration budget.
struct NoConvergenceError : Error {
    using Error::Error;
};

/// Synthesis spec admits no solution (e.g. factor bounds exclude isotropy).
struct DegenerateSpecError : Error {
    using Error::Error;
};

/// Reactive subspace of a leg is numerically singular (stiffness undefined).
struct ReactiveSubspaceError : Error {
    using Error::Error;
};

/// Assembled stiffness matrix is singular / not positive definite.
struct SingularStructureError : Error {
    using Error::Error;
};

/// Malformed or inconsistent configuration input.
struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small value types
// ---------------------------------------------------------------------------

/// Platform pose deviation: translation dp (mm) and small rotation dphi (rad).
struct PoseDeviation {
    Vec3 dp = Vec3::Zero();
    Vec3 dphi = Vec3::Zero();

    Vec6 as_vec6() const {
        Vec6 v;
        v << dp, dphi;
        return v;
    }
    static PoseDeviation from_vec6(const Vec6& v) {
        PoseDeviation d;
        d.dp = v.head<3>();
        d.dphi = v.tail<3>();
        return d;
    }
};

/// External load on the platform: force (N) and torque (N*mm).
struct Wrench {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();

    Vec6 as_vec6() const {
        Vec6 v;
        v << force, torque;
        return v;
    }
};

/// 6x6 symmetric matrix wrapper.  Construction symmetrizes the input and
/// rejects matrices whose asymmetry exceeds a relative tolerance, so that
/// downstream consumers can rely on exact symmetry.
class SymMat6 {
  public:
    SymMat6() : m_(Mat6::Zero()) {}

    static SymMat6 from(const Mat6& m, double rel_tol = 1e-9) {
        const double scale = m.norm();
        const double asym = (m - m.transpose()).norm();
        if (scale > 0.0 && asym > rel_tol * scale)
            throw ConfigError("SymMat6: input asymmetric beyond tolerance (|M-M^T|/|M| = " +
                              std::to_string(asym / scale) + ")");
        SymMat6 s;
        s.m_ = 0.5 * (m + m.transpose());
        return s;
    }

    const Mat6& matrix() const { return m_; }
    operator const Mat6&() const { return m_; }

    /// Positive semidefinite up to round-off: eigenvalues >= -tol*||K||.
    bool is_psd(double rel_tol = 1e-9) const {
        Eigen::SelfAdjointEigenSolver<Mat6> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -rel_tol * m_.norm();
    }

  private:
    Mat6 m_;
};

/// Skew-symmetric cross-product matrix of v.
inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return s;
}

}  // namespace orthoglide
