#pragma once

// Machine description record and its flat key-value file format.
//
// A machine is three mutually orthogonal linear axes, each driving one
// spatial parallelogram leg of length L that connects to the moving
// platform (reduced translational model: all base/platform offsets are
// absorbed into the joint coordinate origin).

#include "orthoglide/types.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace orthoglide {

/// Prescribed Cartesian cube: per-axis center offset plus side length (mm).
struct Cube {
    Vec3 center = Vec3::Zero();
    double side = 0.0;

    Vec3 min_corner() const { return center.array() - 0.5 * side; }
    Vec3 max_corner() const { return center.array() + 0.5 * side; }
    double volume() const { return side * side * side; }
    bool contains(const Vec3& p, double tol = 0.0) const {
        return (p.array() >= min_corner().array() - tol).all() &&
               (p.array() <= max_corner().array() + tol).all();
    }
};

struct JointRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Validated machine description.  All three legs share one leg length and
/// one inverse-kinematics branch sign.
struct MachineParams {
    double leg_length = 0.0;                 // L, mm
    std::array<Vec3, 3> actuator_axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    int ik_branch = -1;                      // -1: actuator behind the platform point
    std::array<JointRange, 3> joint_limits{};
    Cube cube;

    bool axes_are_canonical(double tol = 1e-12) const {
        return (actuator_axes[0] - Vec3::UnitX()).norm() <= tol &&
               (actuator_axes[1] - Vec3::UnitY()).norm() <= tol &&
               (actuator_axes[2] - Vec3::UnitZ()).norm() <= tol;
    }
};

/// Unvalidated parameter record as read from user input.  Optional fields
/// receive documented defaults during validation.
struct RawMachineParams {
    std::optional<double> leg_length;
    std::optional<std::array<Vec3, 3>> actuator_axes;
    std::optional<int> ik_branch;
    std::optional<std::array<JointRange, 3>> joint_limits;
    std::optional<double> cube_side;
    std::optional<Vec3> cube_offset;
};

namespace detail {

// Normalized critical abscissae of the factor-bound spectrum for the
// default bounds [1/2, 2]; used to place a cube when no offset is given
// (same convention the synthesis module uses).
inline constexpr double kUhatQ1 = -0.2357022603955158;  // -1/sqrt(18)
inline constexpr double kUhatQ2 = 0.4082482904638630;   // +1/sqrt(6)

}  // namespace detail

/// Collect human-readable violations of a raw record.  Empty result means
/// the record validates.
inline std::vector<std::string> check_params(const RawMachineParams& raw) {
    std::vector<std::string> bad;
    if (!raw.leg_length)
        bad.push_back("leg_length_mm missing");
    else if (!(*raw.leg_length > 0.0) || !std::isfinite(*raw.leg_length))
        bad.push_back("leg_length_mm must be positive and finite");

    if (raw.ik_branch && *raw.ik_branch != 1 && *raw.ik_branch != -1)
        bad.push_back("ik_branch must be +1 or -1");

    if (raw.actuator_axes) {
        const auto& a = *raw.actuator_axes;
        for (int i = 0; i < 3; ++i)
            if (std::abs(a[i].norm() - 1.0) > 1e-9)
                bad.push_back("actuator axis " + std::to_string(i) + " is not unit length");
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (std::abs(a[i].dot(a[j])) > 1e-9)
                    bad.push_back("actuator axes " + std::to_string(i) + "," + std::to_string(j) +
                                  " are not orthogonal");
    }

    if (raw.cube_side && !(*raw.cube_side > 0.0))
        bad.push_back("cube_side_mm must be positive");

    if (raw.joint_limits) {
        for (int i = 0; i < 3; ++i) {
            const auto& r = (*raw.joint_limits)[i];
            if (!(r.lo < r.hi))
                bad.push_back("joint limits of leg " + std::to_string(i) +
                              " inverted (rho_min >= rho_max)");
        }
    }
    return bad;
}

namespace detail {

/// Exact joint-coordinate range of leg `axis` while the platform sweeps the
/// cube (canonical axes).  rho_i = p_i + branch*sqrt(L^2 - p_j^2 - p_k^2) is
/// monotone in p_i and in p_j^2, p_k^2, so the extrema sit at coordinate
/// extremes of the cube.
inline JointRange leg_range_over_cube(double L, const Cube& cube, int branch, int axis) {
    const Vec3 lo3 = cube.min_corner();
    const Vec3 hi3 = cube.max_corner();
    auto sq = [](double v) { return v * v; };
    auto sq_max = [&](int ax) { return std::max(sq(lo3[ax]), sq(hi3[ax])); };
    auto sq_min = [&](int ax) {
        return (lo3[ax] <= 0.0 && hi3[ax] >= 0.0) ? 0.0 : std::min(sq(lo3[ax]), sq(hi3[ax]));
    };
    const int j = (axis + 1) % 3, k = (axis + 2) % 3;
    const double rad_min = L * L - sq_max(j) - sq_max(k);  // max transverse offset
    const double rad_max = L * L - sq_min(j) - sq_min(k);  // min transverse offset
    if (rad_min < 0.0) {
        std::array<bool, 3> failed{};
        failed[axis] = true;
        throw UnreachableError("cube corner outside leg reach", failed);
    }
    const double root_min = std::sqrt(rad_min);
    const double root_max = std::sqrt(rad_max);
    if (branch < 0) return {lo3[axis] - root_max, hi3[axis] - root_min};
    return {lo3[axis] + root_min, hi3[axis] + root_max};
}

}  // namespace detail

/// Validate a raw record, applying defaults:
///  - ik_branch defaults to -1,
///  - actuator axes default to the canonical x/y/z frame,
///  - the cube defaults to the synthesis placement for factor bounds [1/2,2],
///  - joint limits default to the exact actuator range over the cube.
/// Throws ConfigError listing every violation otherwise.
inline MachineParams validate_params(const RawMachineParams& raw) {
    auto bad = check_params(raw);
    if (!bad.empty()) {
        std::string msg = "invalid machine params:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw ConfigError(msg);
    }
    MachineParams p;
    p.leg_length = *raw.leg_length;
    if (raw.actuator_axes) p.actuator_axes = *raw.actuator_axes;
    p.ik_branch = raw.ik_branch.value_or(-1);
    p.cube.side = raw.cube_side.value_or(0.0);
    if (raw.cube_offset)
        p.cube.center = *raw.cube_offset;
    else
        p.cube.center =
            Vec3::Constant(0.5 * (detail::kUhatQ1 + detail::kUhatQ2) * p.cube.side /
                           (detail::kUhatQ2 - detail::kUhatQ1));
    if (raw.joint_limits) {
        p.joint_limits = *raw.joint_limits;
    } else if (p.cube.side > 0.0) {
        for (int i = 0; i < 3; ++i)
            p.joint_limits[i] = detail::leg_range_over_cube(p.leg_length, p.cube, p.ik_branch, i);
    } else {
        const JointRange r{-2.0 * p.leg_length, 2.0 * p.leg_length};
        p.joint_limits = {r, r, r};
    }
    return p;
}

// ---------------------------------------------------------------------------
// Flat key-value file format
// ---------------------------------------------------------------------------
//
//   # comment
//   leg_length_mm = 310.58
//   cube_side_mm  = 200
//   cube_offset_mm = 26.79          (1 or 3 values; per-axis center offset)
//   rho_min_mm = -383.78            (1 or 3 values)
//   rho_max_mm = -126.79            (1 or 3 values)
//   ik_branch  = -1

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::string cleaned = text;
    for (auto& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream iss(cleaned);
    double v;
    while (iss >> v) out.push_back(v);
    return out;
}

inline std::map<std::string, std::string> parse_key_value(std::istream& in,
                                                          const std::string& what) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(what + ": line " + std::to_string(lineno) +
                                  " is not 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError(what + ": line " + std::to_string(lineno) + " has empty key/value");
        kv[key] = val;
    }
    return kv;
}

}  // namespace detail

/// Parse the key-value machine file into a raw record (no semantic checks).
inline RawMachineParams read_raw_machine_params(std::istream& in) {
    RawMachineParams raw;
    auto kv = detail::parse_key_value(in, "machine params");
    auto take = [&](const char* key) -> std::optional<std::vector<double>> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        auto nums = detail::parse_numbers(it->second);
        if (nums.empty()) throw ConfigError(std::string("machine params: bad value for ") + key);
        kv.erase(it);
        return nums;
    };
    if (auto v = take("leg_length_mm")) raw.leg_length = v->front();
    if (auto v = take("cube_side_mm")) raw.cube_side = v->front();
    if (auto v = take("cube_offset_mm")) {
        if (v->size() == 1)
            raw.cube_offset = Vec3::Constant(v->front());
        else if (v->size() == 3)
            raw.cube_offset = Vec3((*v)[0], (*v)[1], (*v)[2]);
        else
            throw ConfigError("machine params: cube_offset_mm expects 1 or 3 values");
    }
    auto lim_lo = take("rho_min_mm");
    auto lim_hi = take("rho_max_mm");
    if (lim_lo.has_value() != lim_hi.has_value())
        throw ConfigError("machine params: rho_min_mm and rho_max_mm must both be given");
    if (lim_lo) {
        std::array<JointRange, 3> lims;
        for (int i = 0; i < 3; ++i) {
            lims[i].lo = lim_lo->size() == 3 ? (*lim_lo)[i] : lim_lo->front();
            lims[i].hi = lim_hi->size() == 3 ? (*lim_hi)[i] : lim_hi->front();
        }
        raw.joint_limits = lims;
    }
    if (auto v = take("ik_branch")) raw.ik_branch = static_cast<int>(v->front());
    if (!kv.empty())
        throw ConfigError("machine params: unknown key '" + kv.begin()->first + "'");
    return raw;
}

inline RawMachineParams read_raw_machine_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open machine params file: " + path);
    return read_raw_machine_params(in);
}

/// Canonical serialization; loader(round-trip(params)) == params.
inline std::string serialize_params(const MachineParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "leg_length_mm = " << p.leg_length << "\n";
    out << "cube_side_mm = " << p.cube.side << "\n";
    out << "cube_offset_mm = " << p.cube.center.x() << " " << p.cube.center.y() << " "
        << p.cube.center.z() << "\n";
    out << "rho_min_mm = " << p.joint_limits[0].lo << " " << p.joint_limits[1].lo << " "
        << p.joint_limits[2].lo << "\n";
    out << "rho_max_mm = " << p.joint_limits[0].hi << " " << p.joint_limits[1].hi << " "
        << p.joint_limits[2].hi << "\n";
    out << "ik_branch = " << p.ik_branch << "\n";
    return out.str();
}

}  // namespace orthoglide
