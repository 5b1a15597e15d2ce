#pragma once

// JSON / CSV emission for every analysis product.  All writers are
// deterministic: fixed key order (nlohmann objects sort keys), fixed float
// formatting, no timestamps — identical inputs give byte-identical files.

#include "orthoglide/machine_params.hpp"
#include "orthoglide/sensitivity.hpp"
#include "orthoglide/stiffness.hpp"
#include "orthoglide/synthesis.hpp"
#include "orthoglide/workspace.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace orthoglide {

using nlohmann::json;

namespace detail {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename Derived>
inline json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(double(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const Wrench& w) {
    return {{"force_n", to_json(w.force)}, {"torque_nmm", to_json(w.torque)}};
}

inline json to_json(const PoseDeviation& d) {
    return {{"dp_mm", to_json(d.dp)}, {"dphi_rad", to_json(d.dphi)}};
}

inline json machine_to_json(const MachineParams& m) {
    json limits = json::array();
    for (int i = 0; i < 3; ++i)
        limits.push_back(json::array({m.joint_limits[i].lo, m.joint_limits[i].hi}));
    return {{"leg_length_mm", m.leg_length},
            {"ik_branch", m.ik_branch},
            {"cube_center_mm", to_json(m.cube.center)},
            {"cube_side_mm", m.cube.side},
            {"joint_limits_mm", limits}};
}

inline json synthesis_to_json(const SynthesisReport& r) {
    return {{"spec",
             {{"cube_side_mm", r.spec.cube_side},
              {"psi_lo", r.spec.psi_lo},
              {"psi_hi", r.spec.psi_hi},
              {"bisect_tol", r.spec.bisect_tol}}},
            {"u_hat", json::array({r.u_hat_lo, r.u_hat_hi})},
            {"leg_length_mm", r.leg_length},
            {"cube_center_mm", to_json(r.cube.center)},
            {"cube_side_mm", r.cube.side},
            {"per_axis_span_mm", json::array({r.q_lo, r.q_hi})},
            {"rho_range_mm", json::array({r.rho_min, r.rho_max})},
            {"stroke_mm", r.stroke},
            {"psi_at_corners",
             {{"q_lo", json::array({r.at_q_lo.psi_min, r.at_q_lo.psi_max})},
              {"q_hi", json::array({r.at_q_hi.psi_min, r.at_q_hi.psi_max})}}},
            {"machine", machine_to_json(r.params)}};
}

inline json box_to_json(const AlignedBox& b) {
    return {{"lo_mm", to_json(b.lo)}, {"hi_mm", to_json(b.hi)}};
}

inline json certification_to_json(const CertificationResult& r, bool include_boxes = true) {
    json out{{"counts",
              {{"inside", r.n_inside}, {"outside", r.n_outside}, {"boundary", r.n_boundary}}},
             {"volume_mm3",
              {{"inside", r.volume_inside},
               {"outside", r.volume_outside},
               {"boundary", r.volume_boundary},
               {"total", r.volume_total}}},
             {"resolved", r.resolved},
             {"hit_box_cap", r.hit_box_cap}};
    if (include_boxes) {
        json boxes = json::array();
        for (const BoxVerdict& bv : r.leaves) {
            json b = box_to_json(bv.box);
            b["verdict"] = to_string(bv.verdict);
            b["splits"] = bv.splits;
            boxes.push_back(std::move(b));
        }
        out["boxes"] = std::move(boxes);
    }
    return out;
}

inline json inclusion_to_json(const InclusionReport& r) {
    return {{"included", r.included},
            {"margin_mm", r.margin},
            {"certification", certification_to_json(r.certification, false)}};
}

inline void workspace_map_to_csv(const WorkspaceMap& map, std::ostream& out) {
    out << "x_mm,y_mm,z_mm,psi_min,psi_max,reachable,within_limits,psi_ok,feasible\n";
    for (const WorkspaceCell& c : map.cells) {
        out << detail::csv_num(c.p.x()) << ',' << detail::csv_num(c.p.y()) << ','
            << detail::csv_num(c.p.z()) << ',';
        if (c.reachable)
            out << detail::csv_num(c.psi_min) << ',' << detail::csv_num(c.psi_max);
        else
            out << ',';
        out << ',' << int(c.reachable) << ',' << int(c.within_limits) << ',' << int(c.psi_ok)
            << ',' << int(c.feasible) << '\n';
    }
}

inline json leg_configuration_to_json(const LegConfiguration& c) {
    return {{"leg", c.leg},
            {"rho_mm", c.rho},
            {"q_rad", json::array({c.q1, c.q2, c.q3})},
            {"bar_direction", to_json(c.n)}};
}

inline json stiffness_to_json(const TotalStiffness& t, const Vec3& p) {
    json legs = json::array();
    for (int i = 0; i < 3; ++i) {
        json leg = leg_configuration_to_json(t.legs[i]);
        leg["K_leg"] = matrix_to_json(t.per_leg[i]);
        legs.push_back(std::move(leg));
    }
    return {{"point_mm", to_json(p)},
            {"K", matrix_to_json(t.K.matrix())},
            {"K_diagonal", matrix_to_json(t.K.matrix().diagonal().transpose())},
            {"legs", std::move(legs)},
            {"units", {{"translation", "N/mm"}, {"rotation", "N*mm/rad"}}}};
}

inline json milling_to_json(const MillingReport& r) {
    return {{"point_mm", to_json(r.p)},
            {"wrench", to_json(r.wrench)},
            {"tool_offset_mm", to_json(r.tool_offset)},
            {"K", matrix_to_json(r.stiffness.matrix())},
            {"deflection_at_p", to_json(r.at_p)},
            {"deflection_at_tcp", to_json(r.at_tcp)}};
}

inline void stiffness_field_to_csv(const StiffnessField& f, std::ostream& out) {
    out << "x_mm,y_mm,z_mm,k_xx,k_yy,k_zz,k_rxrx,k_ryry,k_rzrz\n";
    for (const StiffnessFieldSample& s : f.samples) {
        out << detail::csv_num(s.p.x()) << ',' << detail::csv_num(s.p.y()) << ','
            << detail::csv_num(s.p.z());
        for (int i = 0; i < 6; ++i) out << ',' << detail::csv_num(s.diagonal[i]);
        out << '\n';
    }
}

inline json monte_carlo_to_json(const MonteCarloResult& r, const Vec3& p,
                                const ToleranceSpec& tol) {
    return {{"point_mm", to_json(p)},
            {"tolerances",
             {{"length_mm", tol.length_tol},
              {"angle_rad", tol.angle_tol},
              {"position_threshold_mm", tol.position_threshold},
              {"model",
               tol.model == PerturbationModel::Uniform ? "uniform" : "gaussian3sigma"}}},
            {"samples", r.samples},
            {"n_within", r.n_within},
            {"n_failed_solve", r.n_failed_solve},
            {"probability", r.probability},
            {"ci95", json::array({r.ci_lo, r.ci_hi})},
            {"seed", r.seed}};
}

inline void sensitivity_field_to_csv(const SensitivityField& f, std::ostream& out) {
    out << "x_mm,y_mm,z_mm,sensitivity_norm\n";
    for (const SensitivitySample& s : f.samples)
        out << detail::csv_num(s.p.x()) << ',' << detail::csv_num(s.p.y()) << ','
            << detail::csv_num(s.p.z()) << ',' << detail::csv_num(s.norm) << '\n';
}

inline json sensitivity_jacobian_to_json(const Vec3& p,
                                         const Eigen::Matrix<double, 3, Eigen::Dynamic>& J) {
    static const char* kColumns[12] = {"dL_x",    "dL_y",    "dL_z",    "de_x",
                                       "de_y",    "de_z",    "tilt_0a", "tilt_0b",
                                       "tilt_1a", "tilt_1b", "tilt_2a", "tilt_2b"};
    json cols = json::array();
    for (Eigen::Index c = 0; c < J.cols(); ++c)
        cols.push_back(J.cols() == 12 ? std::string(kColumns[c])
                                      : "col" + std::to_string(c));
    return {{"point_mm", to_json(p)},
            {"columns", std::move(cols)},
            {"jacobian", matrix_to_json(J)},
            {"frobenius_norm", J.norm()}};
}

}  // namespace orthoglide
