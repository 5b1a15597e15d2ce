#pragma once

// Workspace mapping and certification.
//
// Two complementary tools:
//  * grid_map: fast pointwise scan of reach / joint limits / transmission
//    factors over a regular grid (plotting, quick checks).
//  * interval_certify: branch-and-prune partition of a box into Inside /
//    Outside / Boundary using interval enclosures of the closed-form
//    kinematics, so verdicts hold for *every* point of a box, not just
//    samples.  Singular-value bounds come from interval matrix norms
//    (Frobenius / row-column products) plus a Weyl midpoint-radius bound,
//    which are conservative but sound.
//
// Certification semantics: a region is accepted when no sub-box is proven
// Outside and the unresolved Boundary volume is within the 2^(-max_depth)
// budget.  The transmission bounds are exactly active at the synthesized
// cube's diagonal corners, so corner boxes can never be certified strictly
// feasible at finite depth; the volume budget is how that is handled.  All
// feasibility comparisons carry a +/- `slack` (default 1e-9, far below any
// physical tolerance): Inside certifies the constraints relaxed by slack,
// Outside certifies violation beyond slack.

#include "orthoglide/interval.hpp"
#include "orthoglide/kinematics.hpp"
#include "orthoglide/machine_params.hpp"
#include "orthoglide/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace orthoglide {

struct PsiBounds {
    double lo = 0.5;
    double hi = 2.0;
};

struct AlignedBox {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    static AlignedBox from_cube(const Cube& c) { return {c.min_corner(), c.max_corner()}; }

    double volume() const {
        return std::max(0.0, hi.x() - lo.x()) * std::max(0.0, hi.y() - lo.y()) *
               std::max(0.0, hi.z() - lo.z());
    }
    int widest_axis() const {
        const Vec3 w = hi - lo;
        int a = 0;
        if (w.y() > w.x()) a = 1;
        if (w.z() > w[a]) a = 2;
        return a;
    }
    Vec3 center() const { return 0.5 * (lo + hi); }
    bool contains(const Vec3& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

enum class Verdict : std::uint8_t { Inside, Outside, Boundary };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Inside: return "inside";
        case Verdict::Outside: return "outside";
        default: return "boundary";
    }
}

struct BoxVerdict {
    AlignedBox box;
    Verdict verdict = Verdict::Boundary;
    int splits = 0;  // binary splits from the root box (3 splits = one halving per axis)
};

struct CertifyOptions {
    int max_depth = 8;        // per-axis halvings; split budget is 3*max_depth
    double slack = 1e-9;      // feasibility slack, mm / dimensionless (see header)
    std::size_t max_boxes = 4u << 20;  // hard safety cap on examined boxes
};

struct CertificationResult {
    std::vector<BoxVerdict> leaves;
    std::size_t n_inside = 0, n_outside = 0, n_boundary = 0;
    double volume_inside = 0.0, volume_outside = 0.0, volume_boundary = 0.0;
    double volume_total = 0.0;
    bool resolved = false;  // boundary volume within the 2^(-max_depth) budget
    bool hit_box_cap = false;

    bool any_outside() const { return n_outside > 0; }
};

namespace detail {

/// Interval enclosure state of one box under the closed-form kinematics.
struct BoxEnclosure {
    std::array<Interval, 3> coord;     // per-axis position intervals
    std::array<Interval, 3> radicand;  // L^2 - (p_j^2 + p_k^2) per leg
    bool fully_reachable = false;      // radicand.lo > 0 for every leg
    bool any_unreachable = false;      // radicand.hi < 0 for some leg
    std::array<Interval, 3> rho;       // joint enclosure (reachable subset)
    Interval entries[3][3];            // inverse-Jacobian entries, valid if fully_reachable
};

inline BoxEnclosure enclose_box(const AlignedBox& box, const MachineParams& m) {
    BoxEnclosure e;
    for (int i = 0; i < 3; ++i) e.coord[i] = Interval::make(box.lo[i], box.hi[i]);

    const Interval L2 = iv::sqr(Interval::point(m.leg_length));
    std::array<Interval, 3> sq;
    for (int i = 0; i < 3; ++i) sq[i] = iv::sqr(e.coord[i]);

    e.fully_reachable = true;
    std::array<Interval, 3> s;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        e.radicand[i] = iv::sub(L2, iv::add(sq[j], sq[k]));
        if (e.radicand[i].hi < 0.0) e.any_unreachable = true;
        if (!(e.radicand[i].lo > 0.0)) e.fully_reachable = false;
        s[i] = iv::sqrt_nonneg(e.radicand[i]);
        // rho_i = p_i + branch * s_i, valid wherever the leg reaches
        e.rho[i] = m.ik_branch < 0 ? iv::sub(e.coord[i], s[i]) : iv::add(e.coord[i], s[i]);
    }

    if (e.fully_reachable) {
        // Row i of J^-1 is e_i - (branch/s_i) * (p_j e_j + p_k e_k); with the
        // coordinates sign-constant on a box the quotient enclosures are
        // attained at box corners (numerator and denominator extremes
        // coincide), so these entries are essentially exact.
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                if (i == j) {
                    e.entries[i][j] = Interval::point(1.0);
                } else {
                    Interval q = iv::div_pos(e.coord[j], s[i]);
                    e.entries[i][j] = m.ik_branch < 0 ? q : iv::neg(q);
                }
            }
        }
    }
    return e;
}

/// sup over the box of sigma_max(J^-1): interval Frobenius and L1*Linf norms
/// of the entrywise |.| suprema.
inline double sigma_max_upper(const Interval (&c)[3][3]) {
    double fro2 = 0.0;
    double row[3] = {0, 0, 0}, col[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double m = c[i][j].mag();
            fro2 += m * m;
            row[i] += m;
            col[j] += m;
        }
    const double ninf = std::max(row[0], std::max(row[1], row[2]));
    const double n1 = std::max(col[0], std::max(col[1], col[2]));
    return std::min(std::sqrt(fro2), std::sqrt(n1 * ninf));
}

/// inf over the box of sigma_max(J^-1): every matrix in the box has row and
/// column norms at least the entrywise |.| infima.
inline double sigma_max_lower(const Interval (&c)[3][3]) {
    double best = 0.0;
    for (int i = 0; i < 3; ++i) {
        double row2 = 0.0, col2 = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double mr = c[i][j].mig(), mc = c[j][i].mig();
            row2 += mr * mr;
            col2 += mc * mc;
        }
        best = std::max(best, std::max(row2, col2));
    }
    return std::sqrt(best);
}

/// inf over the box of sigma_min(J^-1): Weyl bound sigma_min(mid) - ||rad||_F.
inline double sigma_min_lower(const Interval (&c)[3][3]) {
    Mat3 mid;
    double rad2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            mid(i, j) = c[i][j].mid();
            const double r = c[i][j].rad();
            rad2 += r * r;
        }
    Eigen::JacobiSVD<Mat3> svd(mid);
    return svd.singularValues()(2) - std::sqrt(rad2);
}

/// Unit probe directions used to bound sigma_min from above; they include
/// the singular directions of the diagonal-posture family, so the bound is
/// tight where it matters (near the cube diagonal).
inline const std::array<Vec3, 10>& probe_directions() {
    static const std::array<Vec3, 10> dirs = [] {
        std::array<Vec3, 10> d;
        d[0] = Vec3(1, 0, 0);
        d[1] = Vec3(0, 1, 0);
        d[2] = Vec3(0, 0, 1);
        d[3] = Vec3(1, -1, 0).normalized();
        d[4] = Vec3(1, 0, -1).normalized();
        d[5] = Vec3(0, 1, -1).normalized();
        d[6] = Vec3(1, 1, 1).normalized();
        d[7] = Vec3(1, 1, -2).normalized();
        d[8] = Vec3(1, -2, 1).normalized();
        d[9] = Vec3(-2, 1, 1).normalized();
        return d;
    }();
    return dirs;
}

/// Interval 3x3 determinant by cofactor expansion.
inline Interval det_interval(const Interval (&c)[3][3]) {
    auto minor2 = [&](int r1, int r2, int c1, int c2) {
        return iv::sub(iv::mul(c[r1][c1], c[r2][c2]), iv::mul(c[r1][c2], c[r2][c1]));
    };
    Interval d = iv::mul(c[0][0], minor2(1, 2, 1, 2));
    d = iv::sub(d, iv::mul(c[0][1], minor2(1, 2, 0, 2)));
    d = iv::add(d, iv::mul(c[0][2], minor2(1, 2, 0, 1)));
    return d;
}

/// sup over the box of sigma_min(J^-1): probe images ||A v|| bound sigma_min
/// above for every A, as does |det|^(1/3).
inline double sigma_min_upper(const Interval (&c)[3][3]) {
    double best = std::cbrt(det_interval(c).mag());
    for (const Vec3& v : probe_directions()) {
        double img2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            Interval acc = Interval::point(0.0);
            for (int j = 0; j < 3; ++j)
                if (v[j] != 0.0) acc = iv::add(acc, iv::scale(c[i][j], v[j]));
            const double m = acc.mag();
            img2 += m * m;
        }
        best = std::min(best, std::sqrt(img2));
    }
    return best;
}

}  // namespace detail

/// Verdict for a single box.  Constraint order: reach, joint limits,
/// transmission factors (first proof wins).
inline Verdict classify_box(const AlignedBox& box, const MachineParams& m,
                            const PsiBounds& psi, double slack = 1e-9) {
    if (!m.axes_are_canonical())
        throw ConfigError("interval certification requires the canonical axis layout");

    const detail::BoxEnclosure e = detail::enclose_box(box, m);
    if (e.any_unreachable) return Verdict::Outside;

    bool limits_ok = true;
    for (int i = 0; i < 3; ++i) {
        const JointRange& r = m.joint_limits[i];
        // The rho enclosure covers every reachable point of the box; if it
        // misses the joint range entirely, no point of the box is usable.
        if (e.rho[i].hi < r.lo || e.rho[i].lo > r.hi) return Verdict::Outside;
        if (!(e.rho[i].lo >= r.lo - slack && e.rho[i].hi <= r.hi + slack)) limits_ok = false;
    }

    if (!e.fully_reachable) return Verdict::Boundary;

    // sigma(J^-1) must lie in [1/psi.hi, 1/psi.lo] for feasibility.
    const double sig_lo_req = 1.0 / psi.hi;
    const double sig_hi_req = 1.0 / psi.lo;

    if (detail::sigma_max_lower(e.entries) > sig_hi_req + slack) return Verdict::Outside;
    if (detail::sigma_min_upper(e.entries) < sig_lo_req - slack) return Verdict::Outside;

    if (limits_ok && detail::sigma_max_upper(e.entries) <= sig_hi_req + slack &&
        detail::sigma_min_lower(e.entries) >= sig_lo_req - slack)
        return Verdict::Inside;

    return Verdict::Boundary;
}

/// Branch-and-prune certification of `box`.  Splits the widest axis until a
/// verdict is proven or the split budget (3 * max_depth binary splits, i.e.
/// max_depth halvings per axis) is spent; unresolved leaves stay Boundary.
inline CertificationResult interval_certify(const MachineParams& m, const AlignedBox& box,
                                            const PsiBounds& psi = {},
                                            const CertifyOptions& opt = {}) {
    if (opt.max_depth < 1) throw ConfigError("interval_certify: max_depth must be >= 1");

    CertificationResult res;
    res.volume_total = box.volume();

    struct Item {
        AlignedBox box;
        int splits;
    };
    std::vector<Item> stack{{box, 0}};
    const int split_budget = 3 * opt.max_depth;
    std::size_t examined = 0;

    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        if (++examined > opt.max_boxes) {
            res.hit_box_cap = true;
            stack.push_back(it);
            break;
        }

        const Verdict v = classify_box(it.box, m, psi, opt.slack);
        const int axis = it.box.widest_axis();
        const double mid = 0.5 * (it.box.lo[axis] + it.box.hi[axis]);
        const bool splittable = it.splits < split_budget && mid > it.box.lo[axis] &&
                                mid < it.box.hi[axis];

        if (v == Verdict::Boundary && splittable) {
            AlignedBox a = it.box, b = it.box;
            a.hi[axis] = mid;
            b.lo[axis] = mid;
            stack.push_back({a, it.splits + 1});
            stack.push_back({b, it.splits + 1});
            continue;
        }

        res.leaves.push_back({it.box, v, it.splits});
        const double vol = it.box.volume();
        switch (v) {
            case Verdict::Inside: ++res.n_inside; res.volume_inside += vol; break;
            case Verdict::Outside: ++res.n_outside; res.volume_outside += vol; break;
            case Verdict::Boundary: ++res.n_boundary; res.volume_boundary += vol; break;
        }
    }

    // Anything left on the stack when the cap tripped counts as unresolved.
    for (const Item& it : stack) {
        res.leaves.push_back({it.box, Verdict::Boundary, it.splits});
        ++res.n_boundary;
        res.volume_boundary += it.box.volume();
    }

    res.resolved = !res.hit_box_cap &&
                   res.volume_boundary <= res.volume_total * std::pow(2.0, -opt.max_depth) +
                                              1e-12 * res.volume_total;
    return res;
}

struct InclusionReport {
    bool included = false;
    double margin = 0.0;  // max uniform per-face inflation (mm) still certified
    CertificationResult certification;  // of the nominal cube
};

/// Certify that `cube` lies in the dextrous workspace (no Outside box and
/// Boundary volume within budget at max_depth), then bisect for the largest
/// uniform inflation that still certifies.
inline InclusionReport cube_inclusion_check(const MachineParams& m, const Cube& cube,
                                            const PsiBounds& psi = {},
                                            const CertifyOptions& opt = {},
                                            double margin_tol = 0.05) {
    auto certified = [&](double inflation) {
        Cube c = cube;
        c.side = cube.side + 2.0 * inflation;
        const CertificationResult r = interval_certify(m, AlignedBox::from_cube(c), psi, opt);
        return !r.any_outside() && r.resolved;
    };

    InclusionReport rep;
    rep.certification = interval_certify(m, AlignedBox::from_cube(cube), psi, opt);
    rep.included = !rep.certification.any_outside() && rep.certification.resolved;
    if (!rep.included) return rep;

    // Exponential search for an uncertified inflation, then bisect.
    double good = 0.0;
    double bad = std::max(cube.side, 1.0) * 0.01;
    int expand = 0;
    while (certified(bad)) {
        good = bad;
        bad *= 4.0;
        if (++expand > 8) {  // certifies even absurd inflations; report the last tested
            rep.margin = good;
            return rep;
        }
    }
    while (bad - good > margin_tol) {
        const double mid = 0.5 * (good + bad);
        (certified(mid) ? good : bad) = mid;
    }
    rep.margin = good;
    return rep;
}

// ---------------------------------------------------------------------------
// Grid mapping
// ---------------------------------------------------------------------------

struct WorkspaceCell {
    Vec3 p = Vec3::Zero();
    bool reachable = false;
    bool within_limits = false;
    bool psi_ok = false;
    bool feasible = false;
    double psi_min = std::numeric_limits<double>::quiet_NaN();
    double psi_max = std::numeric_limits<double>::quiet_NaN();
};

struct WorkspaceMap {
    AlignedBox bounds;
    int resolution = 0;  // nodes per axis, endpoints included
    PsiBounds psi_bounds;
    std::vector<WorkspaceCell> cells;  // index = (ix * n + iy) * n + iz

    std::size_t n_feasible = 0;
    // Extremes over reachable cells (NaN if none reachable).
    double psi_min_overall = std::numeric_limits<double>::quiet_NaN();
    double psi_max_overall = std::numeric_limits<double>::quiet_NaN();
};

/// Pointwise scan on an n^3 node grid spanning `bounds` (corners included).
inline WorkspaceMap grid_map(const MachineParams& m, const AlignedBox& bounds, int resolution,
                             const PsiBounds& psi = {}) {
    if (resolution < 2) throw ConfigError("grid_map: resolution must be >= 2");

    WorkspaceMap map;
    map.bounds = bounds;
    map.resolution = resolution;
    map.psi_bounds = psi;
    map.cells.reserve(static_cast<std::size_t>(resolution) * resolution * resolution);

    auto node = [&](int k, int axis) {
        if (k == resolution - 1) return bounds.hi[axis];  // hit corners exactly
        return bounds.lo[axis] +
               (bounds.hi[axis] - bounds.lo[axis]) * (double(k) / (resolution - 1));
    };

    for (int ix = 0; ix < resolution; ++ix)
        for (int iy = 0; iy < resolution; ++iy)
            for (int iz = 0; iz < resolution; ++iz) {
                WorkspaceCell cell;
                cell.p = Vec3(node(ix, 0), node(iy, 1), node(iz, 2));
                try {
                    const IkResult ik = inverse_kinematics(cell.p, m);
                    cell.reachable = true;
                    cell.within_limits = ik.all_within_limits();
                    const TransmissionFactors tf = transmission_factors(cell.p, m);
                    cell.psi_min = tf.psi_min;
                    cell.psi_max = tf.psi_max;
                    cell.psi_ok = tf.psi_min >= psi.lo && tf.psi_max <= psi.hi;
                    cell.feasible = cell.within_limits && cell.psi_ok;
                } catch (const UnreachableError&) {
                    cell.reachable = false;
                } catch (const SingularError&) {
                    // Reachable but singular: factors blow up.
                    cell.reachable = true;
                    cell.within_limits = inverse_kinematics(cell.p, m).all_within_limits();
                    cell.psi_min = 0.0;
                    cell.psi_max = std::numeric_limits<double>::infinity();
                    cell.psi_ok = false;
                    cell.feasible = false;
                }
                if (cell.feasible) ++map.n_feasible;
                if (cell.reachable) {
                    if (std::isnan(map.psi_min_overall) || cell.psi_min < map.psi_min_overall)
                        map.psi_min_overall = cell.psi_min;
                    if (std::isnan(map.psi_max_overall) || cell.psi_max > map.psi_max_overall)
                        map.psi_max_overall = cell.psi_max;
                }
                map.cells.push_back(cell);
            }
    return map;
}

inline WorkspaceMap grid_map(const MachineParams& m, int resolution, const PsiBounds& psi = {}) {
    return grid_map(m, AlignedBox::from_cube(m.cube), resolution, psi);
}

}  // namespace orthoglide
