// Core value types, error taxonomy, and machine-parameter validation / file
// round-trips.

#include <catch2/catch_amalgamated.hpp>

#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <cmath>
#include <sstream>

using namespace orthoglide;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("pose deviation round-trips through its 6-vector form") {
    PoseDeviation d;
    d.dp = Vec3(1.5, -2.0, 0.25);
    d.dphi = Vec3(-0.01, 0.02, 0.03);
    const Vec6 v = d.as_vec6();
    REQUIRE(v(0) == 1.5);
    REQUIRE(v(3) == -0.01);
    const PoseDeviation back = PoseDeviation::from_vec6(v);
    REQUIRE((back.dp - d.dp).norm() == 0.0);
    REQUIRE((back.dphi - d.dphi).norm() == 0.0);
}

TEST_CASE("wrench packs force then torque") {
    Wrench w;
    w.force = Vec3(215.0, -10.0, -25.0);
    w.torque = Vec3(1000.0, 21500.0, 0.0);
    const Vec6 v = w.as_vec6();
    REQUIRE(v(0) == 215.0);
    REQUIRE(v(2) == -25.0);
    REQUIRE(v(3) == 1000.0);
    REQUIRE(v(4) == 21500.0);
}

TEST_CASE("skew matrix reproduces the cross product and is antisymmetric") {
    const Vec3 a(1.0, -2.0, 3.0), b(-4.0, 0.5, 2.0);
    const Mat3 s = skew(a);
    REQUIRE((s * b - a.cross(b)).norm() < 1e-15);
    REQUIRE((s + s.transpose()).norm() == 0.0);
}

TEST_CASE("SymMat6 symmetrizes round-off but rejects genuine asymmetry") {
    Mat6 m = Mat6::Identity() * 3.0;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0 + 1e-12;  // round-off level asymmetry
    const SymMat6 s = SymMat6::from(m);
    REQUIRE((s.matrix() - s.matrix().transpose()).norm() == 0.0);
    REQUIRE_THAT(s.matrix()(0, 1), WithinAbs(1.0, 1e-9));

    m(1, 0) = 2.0;  // genuinely asymmetric
    REQUIRE_THROWS_AS(SymMat6::from(m), ConfigError);
}

TEST_CASE("SymMat6 positive semidefinite check") {
    Mat6 m = Mat6::Identity();
    REQUIRE(SymMat6::from(m).is_psd());
    m(5, 5) = -1.0;
    REQUIRE_FALSE(SymMat6::from(m).is_psd());
}

TEST_CASE("cube corners, volume, and containment") {
    Cube c;
    c.center = Vec3(10.0, -5.0, 0.0);
    c.side = 4.0;
    REQUIRE((c.min_corner() - Vec3(8.0, -7.0, -2.0)).norm() == 0.0);
    REQUIRE((c.max_corner() - Vec3(12.0, -3.0, 2.0)).norm() == 0.0);
    REQUIRE(c.volume() == 64.0);
    REQUIRE(c.contains(c.center));
    REQUIRE(c.contains(c.max_corner()));
    REQUIRE_FALSE(c.contains(Vec3(12.1, -5.0, 0.0)));
    REQUIRE(c.contains(Vec3(12.1, -5.0, 0.0), 0.2));
}

TEST_CASE("check_params reports every violation") {
    RawMachineParams raw;  // leg length missing
    raw.ik_branch = 3;
    raw.cube_side = -1.0;
    std::array<JointRange, 3> lims{};
    lims[1] = {5.0, -5.0};  // inverted
    raw.joint_limits = lims;
    // lims[0] and lims[2] are {0,0}, also inverted (lo >= hi).
    const auto bad = check_params(raw);
    REQUIRE(bad.size() >= 4);

    RawMachineParams ok;
    ok.leg_length = 310.0;
    REQUIRE(check_params(ok).empty());
}

TEST_CASE("check_params rejects non-unit and non-orthogonal axes") {
    RawMachineParams raw;
    raw.leg_length = 100.0;
    std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

    axes[0] = Vec3(2.0, 0.0, 0.0);
    raw.actuator_axes = axes;
    REQUIRE_FALSE(check_params(raw).empty());

    axes[0] = Vec3(1.0, 0.0, 0.0);
    axes[1] = Vec3(1.0, 1.0, 0.0).normalized();  // unit but not orthogonal to x
    raw.actuator_axes = axes;
    REQUIRE_FALSE(check_params(raw).empty());
}

TEST_CASE("validate_params applies the documented defaults") {
    RawMachineParams raw;
    raw.leg_length = 310.582854165;
    raw.cube_side = 200.0;
    const MachineParams m = validate_params(raw);

    REQUIRE(m.ik_branch == -1);
    REQUIRE(m.axes_are_canonical());
    // Default cube placement puts the per-axis center at
    // 0.5*(u1+u2)/(u2-u1)*side = (2-sqrt(3))*100 for the default factor bounds.
    REQUIRE_THAT(m.cube.center.x(), WithinAbs(100.0 * (2.0 - std::sqrt(3.0)), 1e-6));
    REQUIRE(m.cube.center.x() == m.cube.center.y());
    REQUIRE(m.cube.center.y() == m.cube.center.z());

    // Joint limits default to the exact actuator excursion over the cube.
    REQUIRE_THAT(m.joint_limits[0].lo, WithinAbs(-383.7879, 5e-4));
    REQUIRE_THAT(m.joint_limits[0].hi, WithinAbs(-126.7949, 5e-4));
    REQUIRE(m.joint_limits[1].lo == m.joint_limits[0].lo);
    REQUIRE(m.joint_limits[2].hi == m.joint_limits[0].hi);
}

TEST_CASE("validate_params keeps explicit joint limits verbatim") {
    RawMachineParams raw;
    raw.leg_length = 310.0;
    raw.cube_side = 200.0;
    std::array<JointRange, 3> lims = {JointRange{-400.0, -100.0}, JointRange{-410.0, -90.0},
                                      JointRange{-420.0, -80.0}};
    raw.joint_limits = lims;
    const MachineParams m = validate_params(raw);
    REQUIRE(m.joint_limits[0].lo == -400.0);
    REQUIRE(m.joint_limits[2].hi == -80.0);
}

TEST_CASE("validate_params without a cube uses the +/- 2L travel envelope") {
    RawMachineParams raw;
    raw.leg_length = 100.0;
    const MachineParams m = validate_params(raw);
    REQUIRE(m.cube.side == 0.0);
    REQUIRE(m.joint_limits[0].lo == -200.0);
    REQUIRE(m.joint_limits[0].hi == 200.0);
}

TEST_CASE("validate_params throws when the cube exceeds leg reach") {
    RawMachineParams raw;
    raw.leg_length = 100.0;
    raw.cube_side = 200.0;
    raw.cube_offset = Vec3::Zero();
    // Corner at (100,100,100): transverse offset sqrt(2)*100 > L.
    REQUIRE_THROWS_AS(validate_params(raw), UnreachableError);
}

TEST_CASE("validate_params aggregates all violations into one message") {
    RawMachineParams raw;
    raw.leg_length = -1.0;
    raw.ik_branch = 0;
    try {
        validate_params(raw);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("leg_length_mm") != std::string::npos);
        REQUIRE(msg.find("ik_branch") != std::string::npos);
    }
}

TEST_CASE("number lists accept commas and whitespace") {
    const auto nums = detail::parse_numbers("1.5, -2 ,3e2");
    REQUIRE(nums.size() == 3);
    REQUIRE(nums[0] == 1.5);
    REQUIRE(nums[1] == -2.0);
    REQUIRE(nums[2] == 300.0);
}

TEST_CASE("key-value parser handles comments and flags bad lines") {
    std::istringstream good("# header\nleg_length_mm = 310  # inline comment\n\n");
    const auto kv = detail::parse_key_value(good, "test");
    REQUIRE(kv.at("leg_length_mm") == "310");

    std::istringstream noeq("a nonsense line without equals\n");
    REQUIRE_THROWS_AS(detail::parse_key_value(noeq, "test"), ConfigError);

    std::istringstream empty_val("key = \n");
    REQUIRE_THROWS_AS(detail::parse_key_value(empty_val, "test"), ConfigError);
}

TEST_CASE("machine file parsing: scalar and per-axis forms") {
    std::istringstream in(
        "leg_length_mm = 310\n"
        "cube_side_mm = 200\n"
        "cube_offset_mm = 26.79\n"
        "rho_min_mm = -383, -384, -385\n"
        "rho_max_mm = -126\n"
        "ik_branch = -1\n");
    const RawMachineParams raw = read_raw_machine_params(in);
    REQUIRE(raw.leg_length == 310.0);
    REQUIRE(raw.cube_side == 200.0);
    REQUIRE((raw.cube_offset.value() - Vec3::Constant(26.79)).norm() == 0.0);
    REQUIRE((*raw.joint_limits)[1].lo == -384.0);
    REQUIRE((*raw.joint_limits)[2].lo == -385.0);
    REQUIRE((*raw.joint_limits)[2].hi == -126.0);
    REQUIRE(raw.ik_branch == -1);
}

TEST_CASE("machine file parsing rejects malformed input") {
    {
        std::istringstream in("leg_length_mm = 310\nrho_min_mm = -383\n");  // no rho_max
        REQUIRE_THROWS_AS(read_raw_machine_params(in), ConfigError);
    }
    {
        std::istringstream in("leg_length_mm = 310\ncube_offset_mm = 1 2\n");  // 2 values
        REQUIRE_THROWS_AS(read_raw_machine_params(in), ConfigError);
    }
    {
        std::istringstream in("leg_length_mm = 310\nbogus_key = 7\n");
        try {
            read_raw_machine_params(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("bogus_key") != std::string::npos);
        }
    }
    REQUIRE_THROWS_AS(read_raw_machine_params_file("/nonexistent/machine.params"),
                      ConfigError);
}

TEST_CASE("machine parameters survive a serialize/parse round-trip") {
    RawMachineParams raw;
    raw.leg_length = 310.582854165;
    raw.cube_side = 200.0;
    const MachineParams m = validate_params(raw);

    std::istringstream in(serialize_params(m));
    const MachineParams back = validate_params(read_raw_machine_params(in));

    REQUIRE(back.leg_length == m.leg_length);
    REQUIRE(back.cube.side == m.cube.side);
    REQUIRE((back.cube.center - m.cube.center).norm() == 0.0);
    REQUIRE(back.ik_branch == m.ik_branch);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(back.joint_limits[i].lo == m.joint_limits[i].lo);
        REQUIRE(back.joint_limits[i].hi == m.joint_limits[i].hi);
    }
}

TEST_CASE("leg range over the cube is exact at monotone extremes") {
    // L=5 cube centered at origin, side 2: transverse offsets in [0, 2] per
    // pair, so sqrt terms range over [sqrt(23), 5]; with branch -1 the range
    // is [lo - 5, hi - sqrt(23)].
    Cube c;
    c.side = 2.0;
    const JointRange r = detail::leg_range_over_cube(5.0, c, -1, 0);
    REQUIRE_THAT(r.lo, WithinAbs(-1.0 - 5.0, 1e-12));
    REQUIRE_THAT(r.hi, WithinAbs(1.0 - std::sqrt(23.0), 1e-12));

    const JointRange rp = detail::leg_range_over_cube(5.0, c, +1, 0);
    REQUIRE_THAT(rp.lo, WithinAbs(-1.0 + std::sqrt(23.0), 1e-12));
    REQUIRE_THAT(rp.hi, WithinAbs(1.0 + 5.0, 1e-12));
}
