#pragma once

// Geometric-error sensitivity and Monte Carlo tolerance analysis.
//
// Error model (per leg i, axis e_i): parallelogram length error dL_i; an
// actuator zero offset de_i along the axis, modeled in the Monte Carlo as
// the sum of the three mounting-point errors of the leg (carriage plus the
// two parallelogram attachment points project onto the same axis); and a
// rail orientation error tilting the prismatic axis about the two
// transverse directions.  Rails pivot at their mounting end (the rho_min
// limit), so a tilt displaces the carriage proportionally to its travel
// from that end.
//
// The perturbed position keeps the joint coordinates at their nominal
// values (the controller command) and re-solves the leg-sphere intersection
// with the perturbed geometry; sensitivities are central finite differences
// of that map.  At the isotropic posture tilts have no first-order effect:
// the carriage displacement is transverse to the leg, which is axis-aligned
// there.

#include "orthoglide/kinematics.hpp"
#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace orthoglide {

struct ParamPerturbation {
    Vec3 dL = Vec3::Zero();  // parallelogram length errors, mm
    Vec3 de = Vec3::Zero();  // actuator zero offsets along the axes, mm
    // Row i: tilt of rail i about the two transverse axes (e_{i+1}, e_{i+2}), rad.
    Eigen::Matrix<double, 3, 2> tilt = Eigen::Matrix<double, 3, 2>::Zero();
};

namespace detail {

inline void require_canonical(const MachineParams& m, const char* what) {
    if (!m.axes_are_canonical())
        throw ConfigError(std::string(what) + " requires the canonical axis layout");
}

/// Unit direction of rail i after tilting, and the carriage pivot point.
inline Vec3 tilted_axis(int i, const Eigen::Matrix<double, 3, 2>& tilt) {
    const Vec3 e = Vec3::Unit(i);
    const Vec3 rot_vec = tilt(i, 0) * Vec3::Unit((i + 1) % 3) +
                         tilt(i, 1) * Vec3::Unit((i + 2) % 3);
    const double angle = rot_vec.norm();
    if (angle == 0.0) return e;
    return Eigen::AngleAxisd(angle, rot_vec / angle).toRotationMatrix() * e;
}

}  // namespace detail

/// Platform position of the perturbed machine when the joints hold the
/// nominal coordinates for p.  Throws like forward_kinematics when the
/// perturbed legs no longer intersect near p.
inline Vec3 perturbed_position(const Vec3& p, const MachineParams& m,
                               const ParamPerturbation& d) {
    detail::require_canonical(m, "sensitivity model");
    const Vec3 rho = inverse_kinematics(p, m).joints.rho;

    std::array<Vec3, 3> centers;
    std::array<double, 3> radii;
    for (int i = 0; i < 3; ++i) {
        const double pivot = m.joint_limits[i].lo;
        const Vec3 axis = detail::tilted_axis(i, d.tilt);
        centers[i] = pivot * Vec3::Unit(i) + (rho[i] + d.de[i] - pivot) * axis;
        radii[i] = m.leg_length + d.dL[i];
    }
    return intersect_leg_spheres(centers, radii, p, 0.5 * m.leg_length);
}

enum class ParamSelector { Lengths, Offsets, Tilts, All };

inline int selector_width(ParamSelector which) {
    switch (which) {
        case ParamSelector::Lengths:
        case ParamSelector::Offsets: return 3;
        case ParamSelector::Tilts: return 6;
        default: return 12;
    }
}

/// Central-difference Jacobian of the platform position w.r.t. the selected
/// parameters.  Column order for All: dL_x..z, de_x..z, then tilt rows
/// (leg0 about y0, leg0 about z0, leg1 ..., leg2 ...).  Step in mm or rad.
inline Eigen::Matrix<double, 3, Eigen::Dynamic> position_sensitivity(
    const Vec3& p, const MachineParams& m, ParamSelector which = ParamSelector::All,
    double step = 1e-4) {
    detail::require_canonical(m, "sensitivity model");
    if (!(step > 0.0)) throw ConfigError("position_sensitivity: step must be positive");

    std::vector<ParamPerturbation> basis;
    auto push = [&](auto&& set) {
        ParamPerturbation d;
        set(d);
        basis.push_back(d);
    };
    if (which == ParamSelector::Lengths || which == ParamSelector::All)
        for (int i = 0; i < 3; ++i) push([&](ParamPerturbation& d) { d.dL[i] = 1.0; });
    if (which == ParamSelector::Offsets || which == ParamSelector::All)
        for (int i = 0; i < 3; ++i) push([&](ParamPerturbation& d) { d.de[i] = 1.0; });
    if (which == ParamSelector::Tilts || which == ParamSelector::All)
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 2; ++a) push([&](ParamPerturbation& d) { d.tilt(i, a) = 1.0; });

    Eigen::Matrix<double, 3, Eigen::Dynamic> J(3, basis.size());
    for (std::size_t c = 0; c < basis.size(); ++c) {
        ParamPerturbation plus = basis[c], minus = basis[c];
        plus.dL *= step;    minus.dL *= -step;
        plus.de *= step;    minus.de *= -step;
        plus.tilt *= step;  minus.tilt *= -step;
        const Vec3 pp = perturbed_position(p, m, plus);
        const Vec3 pm = perturbed_position(p, m, minus);
        J.col(c) = (pp - pm) / (2.0 * step);
    }
    return J;
}

// ---------------------------------------------------------------------------
// Monte Carlo tolerance analysis
// ---------------------------------------------------------------------------

enum class PerturbationModel { Uniform, Gaussian3Sigma };

struct ToleranceSpec {
    double length_tol = 0.05;                    // mm, per point error
    double angle_tol = 0.03 * M_PI / 180.0;      // rad
    double position_threshold = 0.3;             // mm
    long samples = 100000;
    PerturbationModel model = PerturbationModel::Uniform;
};

struct MonteCarloResult {
    double probability = 0.0;  // P(position error <= threshold)
    double ci_lo = 0.0;        // Wilson 95% confidence interval
    double ci_hi = 0.0;
    long samples = 0;
    long n_within = 0;
    long n_failed_solve = 0;  // perturbed closures that did not converge (counted as misses)
    std::uint64_t seed = 0;
};

namespace detail {

/// Uniform double in [0, 1) from the raw engine stream; bypasses
/// std::uniform_real_distribution so the draw sequence is identical across
/// standard libraries.
inline double unit_double(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline double draw_symmetric(std::mt19937_64& rng, double tol, PerturbationModel model) {
    if (model == PerturbationModel::Uniform) return tol * (2.0 * unit_double(rng) - 1.0);
    // Box-Muller; 3-sigma band maps to the tolerance.
    const double u1 = std::max(unit_double(rng), 1e-300);
    const double u2 = unit_double(rng);
    return (tol / 3.0) * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// One sampled perturbation.  Draw order (fixed for reproducibility), per
/// leg 0..2: dL, then the three axis-point errors summed into de, then the
/// two tilts.
inline ParamPerturbation sample_perturbation(std::mt19937_64& rng, const ToleranceSpec& tol) {
    ParamPerturbation d;
    for (int i = 0; i < 3; ++i) {
        d.dL[i] = draw_symmetric(rng, tol.length_tol, tol.model);
        d.de[i] = draw_symmetric(rng, tol.length_tol, tol.model) +
                  draw_symmetric(rng, tol.length_tol, tol.model) +
                  draw_symmetric(rng, tol.length_tol, tol.model);
        d.tilt(i, 0) = draw_symmetric(rng, tol.angle_tol, tol.model);
        d.tilt(i, 1) = draw_symmetric(rng, tol.angle_tol, tol.model);
    }
    return d;
}

inline void wilson_interval(long n, long x, double& lo, double& hi) {
    constexpr double z = 1.959963984540054;  // 95%
    const double nn = double(n), xx = double(x);
    const double center = (xx + z * z / 2.0) / (nn + z * z);
    const double half = z * std::sqrt(xx * (nn - xx) / nn + z * z / 4.0) / (nn + z * z);
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

}  // namespace detail

/// P(platform position error <= threshold) under independent per-parameter
/// perturbations within the given tolerances.  Deterministic for a fixed
/// seed.  Closure failures (no perturbed assembly near p) count as misses.
inline MonteCarloResult monte_carlo_accuracy(const Vec3& p, const MachineParams& m,
                                             const ToleranceSpec& tol,
                                             std::uint64_t seed = 20240314u) {
    detail::require_canonical(m, "sensitivity model");
    if (tol.samples < 1) throw ConfigError("monte_carlo_accuracy: samples must be >= 1");
    if (!(tol.length_tol >= 0.0) || !(tol.angle_tol >= 0.0) || !(tol.position_threshold > 0.0))
        throw ConfigError("monte_carlo_accuracy: tolerances must be nonnegative, threshold positive");

    std::mt19937_64 rng(seed);
    MonteCarloResult res;
    res.samples = tol.samples;
    res.seed = seed;
    for (long s = 0; s < tol.samples; ++s) {
        const ParamPerturbation d = detail::sample_perturbation(rng, tol);
        try {
            const Vec3 q = perturbed_position(p, m, d);
            if ((q - p).norm() <= tol.position_threshold) ++res.n_within;
        } catch (const Error&) {
            ++res.n_failed_solve;
        }
    }
    res.probability = double(res.n_within) / double(res.samples);
    detail::wilson_interval(res.samples, res.n_within, res.ci_lo, res.ci_hi);
    return res;
}

// ---------------------------------------------------------------------------
// Sensitivity field
// ---------------------------------------------------------------------------

struct SensitivitySample {
    Vec3 p = Vec3::Zero();
    double norm = 0.0;  // Frobenius norm of the selected sensitivity Jacobian
};

struct SensitivityField {
    std::vector<SensitivitySample> samples;
    Vec3 argmin = Vec3::Zero();
    Vec3 argmax = Vec3::Zero();
    double min = 0.0;
    double max = 0.0;
};

/// Aggregate sensitivity norm on a grid over the machine cube.
inline SensitivityField sensitivity_field(const MachineParams& m, int resolution,
                                          ParamSelector which = ParamSelector::All,
                                          double step = 1e-4) {
    if (resolution < 2) throw ConfigError("sensitivity_field: resolution must be >= 2");
    SensitivityField field;
    field.min = std::numeric_limits<double>::infinity();
    field.max = -std::numeric_limits<double>::infinity();
    const Vec3 lo = m.cube.min_corner(), hi = m.cube.max_corner();
    for (int ix = 0; ix < resolution; ++ix)
        for (int iy = 0; iy < resolution; ++iy)
            for (int iz = 0; iz < resolution; ++iz) {
                const Vec3 f(double(ix) / (resolution - 1), double(iy) / (resolution - 1),
                             double(iz) / (resolution - 1));
                SensitivitySample s;
                s.p = lo + f.cwiseProduct(hi - lo);
                s.norm = position_sensitivity(s.p, m, which, step).norm();
                if (s.norm < field.min) {
                    field.min = s.norm;
                    field.argmin = s.p;
                }
                if (s.norm > field.max) {
                    field.max = s.norm;
                    field.argmax = s.p;
                }
                field.samples.push_back(s);
            }
    return field;
}

}  // namespace orthoglide
