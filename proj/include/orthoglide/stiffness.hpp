#pragma once

// Virtual-joint stiffness model of the overconstrained structure.
//
// Each leg is a serial chain: actuated prismatic joint rho along the leg
// axis, a rigid foot of length L_f, and a parallelogram of length L_B
// modeled as a circular translation (it moves the platform without rotating
// it).  Compliance is lumped into 7 virtual springs theta0..theta6 and the
// chain has 3 passive joints q1, q2, q3 (q3 = -q1 keeps the platform level):
//
//   Tx(rho - L_f + th0) Ry(th1) Rz(th2) Rx(th3)      actuator + foot base
//   Tx(L_f) Rz(th4)                                   foot tip
//   Rz(q1) Trans((L_B + th5) * m(q2)) Rot(m(q2), th6) Rz(q3)
//
// in the leg frame (x' = actuator axis), with m(q2) = Ry(q2) x'.  The leg
// frames are the cyclic permutations of the machine axes.  Cartesian leg
// stiffness follows the SVD null-space partition: with S = J_th K_th^-1
// J_th^T and U_d spanning the null space of Jq^T,
//
//   K_leg = U_d (U_d^T S U_d)^-1 U_d^T,
//
// a rank-3 map that resists exactly the wrenches the passive joints cannot
// absorb.  The machine stiffness is the superposition over the three legs.
//
// Geometry note: the parallelogram length used for kinematic closure is the
// machine's leg_length; the stiffness parameter L_B enters the spring
// formulas only.  They coincide for the nominal design but are allowed to
// differ so section data can be tuned without touching the kinematics.

#include "orthoglide/kinematics.hpp"
#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace orthoglide {

// ---------------------------------------------------------------------------
// Parameters and spring constants
// ---------------------------------------------------------------------------

/// Elastic parameters of one leg.  Defaults are order-of-magnitude estimates
/// for an aluminum prototype (see configs/): treat them as placeholders to
/// calibrate, not as measured data.
struct LegStiffnessParams {
    double k_act = 2.88e3;  // actuator servo stiffness, N/mm
    double E = 7.0e4;       // Young's modulus, N/mm^2
    double G = 2.6e4;       // shear modulus, N/mm^2
    double L_f = 150.0;     // foot length, mm
    double b_f = 25.0;      // foot section width, mm
    double h_f = 12.0;      // foot section height, mm
    double L_B = 310.0;     // parallelogram bar length, mm
    double S_B = 100.0;     // parallelogram bar section area, mm^2
    double d = 80.0;        // distance between parallelogram bars, mm

    // Optional direct spring overrides (index 0..6); an override replaces
    // the formula value verbatim, including k6's cos^2(q2) dependence.
    std::array<std::optional<double>, 7> spring_override{};

    double I_f1() const { return b_f * h_f * h_f * h_f / 12.0; }
    double I_f2() const { return h_f * b_f * b_f * b_f / 12.0; }
    double I_f0() const { return I_f1() + I_f2(); }
};

inline void validate_stiffness_params(const LegStiffnessParams& p) {
    const std::array<std::pair<const char*, double>, 9> fields{{{"k_act", p.k_act},
                                                                {"E", p.E},
                                                                {"G", p.G},
                                                                {"L_f", p.L_f},
                                                                {"b_f", p.b_f},
                                                                {"h_f", p.h_f},
                                                                {"L_B", p.L_B},
                                                                {"S_B", p.S_B},
                                                                {"d", p.d}}};
    std::string bad;
    for (const auto& [name, v] : fields)
        if (!(v > 0.0) || !std::isfinite(v)) bad += std::string(bad.empty() ? "" : ", ") + name;
    for (int j = 0; j < 7; ++j)
        if (p.spring_override[j] && !(*p.spring_override[j] > 0.0))
            bad += std::string(bad.empty() ? "" : ", ") + "k" + std::to_string(j);
    if (!bad.empty())
        throw ConfigError("stiffness parameters must be positive: " + bad);
}

/// Diagonal spring constants K_theta = diag(k0..k6).  Units: N/mm for the
/// translational springs (k0, k5), N*mm/rad for the rotational ones.  k6
/// depends on the parallelogram elevation q2 (the bar pair loses torsional
/// leverage as it folds).
struct VirtualSprings {
    std::array<double, 7> k{};

    Eigen::Matrix<double, 7, 7> K_theta() const {
        Eigen::Matrix<double, 7, 7> m = Eigen::Matrix<double, 7, 7>::Zero();
        for (int i = 0; i < 7; ++i) m(i, i) = k[i];
        return m;
    }
};

inline VirtualSprings spring_constants(const LegStiffnessParams& p, double q2 = 0.0) {
    validate_stiffness_params(p);
    const double c = std::cos(q2);
    VirtualSprings s;
    s.k[0] = p.k_act;
    s.k[1] = 3.0 * p.E * p.I_f1() / p.L_f;
    s.k[2] = 2.0 * p.E * p.I_f2() / p.L_f;
    s.k[3] = p.G * p.I_f0() / p.L_f;
    s.k[4] = p.E * p.I_f2() / p.L_f;
    s.k[5] = 2.0 * p.E * p.S_B / p.L_B;
    s.k[6] = p.E * p.S_B * p.d * p.d * c * c / (2.0 * p.L_B);
    for (int j = 0; j < 7; ++j)
        if (p.spring_override[j]) s.k[j] = *p.spring_override[j];
    return s;
}

// ---------------------------------------------------------------------------
// Leg geometry
// ---------------------------------------------------------------------------

/// Rotation mapping leg-frame axes to machine axes: legs X, Y, Z use the
/// cyclic permutations (x,y,z), (y,z,x), (z,x,y).
inline Mat3 leg_frame(int leg) {
    Mat3 c = Mat3::Zero();
    for (int a = 0; a < 3; ++a) c((a + leg) % 3, a) = 1.0;
    return c;
}

struct LegConfiguration {
    int leg = 0;         // 0 = X, 1 = Y, 2 = Z
    double rho = 0.0;    // actuated coordinate (machine convention), mm
    double q1 = 0.0;     // passive rotation about the leg z'-axis, rad
    double q2 = 0.0;     // parallelogram elevation about y', rad
    double q3 = 0.0;     // platform-side compensation, = -q1
    Vec3 n = Vec3::Zero();       // parallelogram direction, machine frame
    Vec3 p = Vec3::Zero();       // platform point, machine frame
    double L_geom = 0.0;         // parallelogram length used for closure, mm
};

/// Passive-joint values closing leg `leg` onto platform point p.
inline LegConfiguration leg_configuration(const Vec3& p, const MachineParams& m, int leg) {
    if (!m.axes_are_canonical())
        throw ConfigError("leg stiffness model requires the canonical axis layout");
    if (leg < 0 || leg > 2) throw ConfigError("leg index must be 0, 1, or 2");

    const IkResult ik = inverse_kinematics(p, m);

    LegConfiguration cfg;
    cfg.leg = leg;
    cfg.rho = ik.joints.rho[leg];
    cfg.p = p;
    cfg.L_geom = m.leg_length;

    const Mat3 C = leg_frame(leg);
    const Vec3 p_leg = C.transpose() * p;
    const Vec3 n_leg = (p_leg - cfg.rho * Vec3::UnitX()) / m.leg_length;
    // n_leg = (cos q1 cos q2, sin q1 cos q2, -sin q2)
    cfg.q2 = -std::asin(std::clamp(n_leg.z(), -1.0, 1.0));
    cfg.q1 = std::atan2(n_leg.y(), n_leg.x());
    cfg.q3 = -cfg.q1;
    cfg.n = C * n_leg;
    return cfg;
}

/// Chain forward map with explicit spring and passive offsets, machine
/// frame.  Returns platform position and orientation; used for validating
/// the screw Jacobians by finite differences.
inline std::pair<Vec3, Mat3> leg_chain_pose(const LegConfiguration& cfg,
                                            const LegStiffnessParams& sp,
                                            const Eigen::Matrix<double, 7, 1>& theta,
                                            const Vec3& q) {
    using Eigen::AngleAxisd;
    const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();

    Vec3 pos = (cfg.rho - sp.L_f + theta[0]) * x;
    Mat3 R = (AngleAxisd(theta[1], y) * AngleAxisd(theta[2], z) * AngleAxisd(theta[3], x))
                 .toRotationMatrix();
    pos += R * (sp.L_f * x);
    R = R * AngleAxisd(theta[4], z).toRotationMatrix() * AngleAxisd(q[0], z).toRotationMatrix();
    const Vec3 mdir(std::cos(q[1]), 0.0, -std::sin(q[1]));
    pos += R * ((cfg.L_geom + theta[5]) * mdir);
    R = R * AngleAxisd(theta[6], mdir).toRotationMatrix() *
        AngleAxisd(q[2], z).toRotationMatrix();

    const Mat3 C = leg_frame(cfg.leg);
    return {C * pos, C * R * C.transpose()};
}

// ---------------------------------------------------------------------------
// Leg Jacobians (screw columns at the nominal configuration)
// ---------------------------------------------------------------------------

struct LegJacobians {
    Eigen::Matrix<double, 6, 7> Jtheta;              // spring directions
    Eigen::Matrix<double, 6, Eigen::Dynamic> Jq;     // passive directions
};

inline LegJacobians leg_jacobians(const LegConfiguration& cfg, const LegStiffnessParams& sp) {
    const Mat3 C = leg_frame(cfg.leg);
    const Vec3 ax = C.col(0), ay = C.col(1), az = C.col(2);  // leg axes, machine frame

    const Vec3 B = (cfg.rho - sp.L_f) * ax;  // foot base (springs 1-3)
    const Vec3 F = cfg.rho * ax;             // foot tip (spring 4, q1)
    const Vec3& p = cfg.p;

    auto revolute = [&](const Vec3& axis, const Vec3& at) {
        Vec6 col;
        col.head<3>() = axis.cross(p - at);
        col.tail<3>() = axis;
        return col;
    };
    auto prismatic = [&](const Vec3& dir) {
        Vec6 col;
        col.head<3>() = dir;
        col.tail<3>().setZero();
        return col;
    };

    LegJacobians J;
    J.Jtheta.col(0) = prismatic(ax);
    J.Jtheta.col(1) = revolute(ay, B);
    J.Jtheta.col(2) = revolute(az, B);
    J.Jtheta.col(3) = revolute(ax, B);
    J.Jtheta.col(4) = revolute(az, F);
    J.Jtheta.col(5) = prismatic(cfg.n);
    J.Jtheta.col(6) = revolute(cfg.n, p);

    // Passive columns: q1 rotates everything past the foot tip; q2 swings
    // the bar direction without rotating the platform (circular
    // translation); q3 spins the platform about z' in place.
    const Vec3 m_deriv = -(std::sin(cfg.q2) * ax + std::cos(cfg.q2) * az);  // d m / d q2, leg frame axes
    const Mat3 Rz_q1 = Eigen::AngleAxisd(cfg.q1, az).toRotationMatrix();

    J.Jq.resize(6, 3);
    J.Jq.col(0) = revolute(az, F);
    J.Jq.col(1) = prismatic(cfg.L_geom * (Rz_q1 * m_deriv));
    J.Jq.col(2) = revolute(az, p);
    return J;
}

// ---------------------------------------------------------------------------
// Cartesian stiffness
// ---------------------------------------------------------------------------

/// SVD null-space partition: K = U_d (U_d^T S U_d)^-1 U_d^T with
/// S = J_th K_th^-1 J_th^T and U_d a basis of null(Jq^T).  With no passive
/// columns this reduces to K = S^-1.
inline Mat6 leg_cartesian_stiffness(const LegJacobians& J, const VirtualSprings& springs) {
    Eigen::Matrix<double, 7, 7> Kinv = Eigen::Matrix<double, 7, 7>::Zero();
    for (int i = 0; i < 7; ++i) {
        if (!(springs.k[i] > 0.0))
            throw ConfigError("virtual spring k" + std::to_string(i) + " must be positive");
        Kinv(i, i) = 1.0 / springs.k[i];
    }
    const Mat6 S = J.Jtheta * Kinv * J.Jtheta.transpose();

    const Eigen::Index nq = J.Jq.cols();
    if (nq == 0) {
        Eigen::SelfAdjointEigenSolver<Mat6> es(S);
        if (es.eigenvalues()(0) < 1e-12 * es.eigenvalues()(5))
            throw ReactiveSubspaceError("spring compliance map is rank deficient");
        return S.inverse();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J.Jq, Eigen::ComputeFullU);
    const double sig_max = svd.singularValues()(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-12 * std::max(sig_max, 1.0)) ++rank;
    const Eigen::MatrixXd Ud = svd.matrixU().rightCols(6 - rank);

    const Eigen::MatrixXd Z = Ud.transpose() * S * Ud;
    Eigen::JacobiSVD<Eigen::MatrixXd> zsvd(Z);
    const auto& zs = zsvd.singularValues();
    if (zs(zs.size() - 1) <= 0.0 || zs(0) / zs(zs.size() - 1) > 1e12)
        throw ReactiveSubspaceError(
            "reactive subspace compliance is numerically singular (condition > 1e12)");

    const Eigen::MatrixXd Ki = Ud * Z.inverse() * Ud.transpose();
    return 0.5 * (Ki + Ki.transpose());  // exact-symmetry cleanup
}

struct TotalStiffness {
    SymMat6 K;
    std::array<Mat6, 3> per_leg{};
    std::array<LegConfiguration, 3> legs{};
};

/// Superposition over the three legs at platform point p.
inline TotalStiffness total_stiffness(const Vec3& p, const MachineParams& m,
                                      const LegStiffnessParams& sp) {
    validate_stiffness_params(sp);
    TotalStiffness out;
    Mat6 K = Mat6::Zero();
    for (int leg = 0; leg < 3; ++leg) {
        out.legs[leg] = leg_configuration(p, m, leg);
        const LegJacobians J = leg_jacobians(out.legs[leg], sp);
        out.per_leg[leg] = leg_cartesian_stiffness(J, spring_constants(sp, out.legs[leg].q2));
        K += out.per_leg[leg];
    }

    Eigen::SelfAdjointEigenSolver<Mat6> es(K);
    if (!(es.eigenvalues()(0) > 1e-9 * es.eigenvalues()(5)))
        throw SingularStructureError(
            "assembled stiffness is singular at this posture (legs do not span the "
            "full wrench space)");

    out.K = SymMat6::from(K, 1e-9);
    return out;
}

// ---------------------------------------------------------------------------
// Load-deflection case study
// ---------------------------------------------------------------------------

/// Milling wrench at the platform point P for a cutting force applied at
/// tool height h_z: F = [Fx, Fy, Fz, -Fy*h_z, Fx*h_z, 0].
inline Wrench build_milling_wrench(double fx, double fy, double fz, double h_z) {
    Wrench w;
    w.force = Vec3(fx, fy, fz);
    w.torque = Vec3(-fy * h_z, fx * h_z, 0.0);
    return w;
}

/// Platform pose deviation under a wrench: delta_t = K^-1 F.
inline PoseDeviation deflection_under_wrench(const SymMat6& K, const Wrench& F) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(K.matrix());
    if (!(es.eigenvalues()(0) > 1e-12 * std::max(es.eigenvalues()(5), 1.0)))
        throw SingularStructureError("stiffness matrix is not positive definite");
    const Vec6 dt = es.eigenvectors() *
                    (es.eigenvectors().transpose() * F.as_vec6()).cwiseQuotient(
                        es.eigenvalues());
    return PoseDeviation::from_vec6(dt);
}

/// Transport of a platform-point deviation to the tool center point at
/// offset h: rotation unchanged, translation picks up dphi x h.
inline PoseDeviation tcp_adjustment(const PoseDeviation& dt, const Vec3& h) {
    PoseDeviation out = dt;
    out.dp += dt.dphi.cross(h);
    return out;
}

struct MillingSpec {
    double fx = 215.0;  // N
    double fy = -10.0;  // N
    double fz = -25.0;  // N
    double h_z = 100.0; // tool length, mm
};

struct MillingReport {
    Vec3 p = Vec3::Zero();
    Wrench wrench;
    Vec3 tool_offset = Vec3::Zero();
    SymMat6 stiffness;
    PoseDeviation at_p;
    PoseDeviation at_tcp;
};

/// Full case study: stiffness at p, deflection under the milling wrench,
/// TCP transport with tool offset (0, 0, h_z).
inline MillingReport milling_case_study(const MachineParams& m, const LegStiffnessParams& sp,
                                        const Vec3& p, const MillingSpec& spec = {}) {
    MillingReport rep;
    rep.p = p;
    rep.wrench = build_milling_wrench(spec.fx, spec.fy, spec.fz, spec.h_z);
    rep.tool_offset = Vec3(0.0, 0.0, spec.h_z);
    rep.stiffness = total_stiffness(p, m, sp).K;
    rep.at_p = deflection_under_wrench(rep.stiffness, rep.wrench);
    rep.at_tcp = tcp_adjustment(rep.at_p, rep.tool_offset);
    return rep;
}

// ---------------------------------------------------------------------------
// Field scan (for CSV export / variation diagnostics)
// ---------------------------------------------------------------------------

struct StiffnessFieldSample {
    Vec3 p = Vec3::Zero();
    Vec6 diagonal = Vec6::Zero();  // diagonal of K at p
};

struct StiffnessField {
    std::vector<StiffnessFieldSample> samples;
    double k_trans_min = 0.0;  // extremes of the translational diagonal entries
    double k_trans_max = 0.0;
};

inline StiffnessField stiffness_field(const MachineParams& m, const LegStiffnessParams& sp,
                                      int resolution) {
    if (resolution < 2) throw ConfigError("stiffness_field: resolution must be >= 2");
    StiffnessField field;
    field.k_trans_min = std::numeric_limits<double>::infinity();
    field.k_trans_max = 0.0;
    const Vec3 lo = m.cube.min_corner(), hi = m.cube.max_corner();
    for (int ix = 0; ix < resolution; ++ix)
        for (int iy = 0; iy < resolution; ++iy)
            for (int iz = 0; iz < resolution; ++iz) {
                const Vec3 f(double(ix) / (resolution - 1), double(iy) / (resolution - 1),
                             double(iz) / (resolution - 1));
                StiffnessFieldSample s;
                s.p = lo + f.cwiseProduct(hi - lo);
                s.diagonal = total_stiffness(s.p, m, sp).K.matrix().diagonal();
                field.k_trans_min = std::min(field.k_trans_min, s.diagonal.head<3>().minCoeff());
                field.k_trans_max = std::max(field.k_trans_max, s.diagonal.head<3>().maxCoeff());
                field.samples.push_back(s);
            }
    return field;
}

// ---------------------------------------------------------------------------
// Parameter file I/O (flat key = value, same dialect as machine params)
// ---------------------------------------------------------------------------

inline LegStiffnessParams read_leg_stiffness_params(std::istream& in) {
    LegStiffnessParams p;
    for (const auto& [key, value] : detail::parse_key_value(in, "stiffness params")) {
        const std::vector<double> nums = detail::parse_numbers(value);
        if (nums.size() != 1)
            throw ConfigError("stiffness params: key '" + key + "' expects a single number");
        const double v = nums[0];
        if (key == "k_act") p.k_act = v;
        else if (key == "E") p.E = v;
        else if (key == "G") p.G = v;
        else if (key == "L_f") p.L_f = v;
        else if (key == "b_f") p.b_f = v;
        else if (key == "h_f") p.h_f = v;
        else if (key == "L_B") p.L_B = v;
        else if (key == "S_B") p.S_B = v;
        else if (key == "d") p.d = v;
        else if (key.size() == 2 && key[0] == 'k' && key[1] >= '0' && key[1] <= '6')
            p.spring_override[key[1] - '0'] = v;
        else
            throw ConfigError("stiffness params: unknown key '" + key + "'");
    }
    validate_stiffness_params(p);
    return p;
}

inline LegStiffnessParams read_leg_stiffness_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stiffness parameter file: " + path);
    try {
        return read_leg_stiffness_params(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::string serialize_stiffness_params(const LegStiffnessParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "# leg elastic parameters (N, mm, rad)\n";
    out << "k_act = " << p.k_act << "\n";
    out << "E = " << p.E << "\n";
    out << "G = " << p.G << "\n";
    out << "L_f = " << p.L_f << "\n";
    out << "b_f = " << p.b_f << "\n";
    out << "h_f = " << p.h_f << "\n";
    out << "L_B = " << p.L_B << "\n";
    out << "S_B = " << p.S_B << "\n";
    out << "d = " << p.d << "\n";
    for (int j = 0; j < 7; ++j)
        if (p.spring_override[j]) out << "k" << j << " = " << *p.spring_override[j] << "\n";
    return out.str();
}

}  // namespace orthoglide
