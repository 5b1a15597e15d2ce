// Command-line front end: synthesis, workspace mapping/certification,
// stiffness, load-deflection, and tolerance sensitivity, with JSON/CSV
// artifacts written to an output directory.
//
// Exit codes: 0 ok; 1 usage/config error; 2 degenerate synthesis spec;
// 3 cube-inclusion failure; 4 point outside the (dextrous) workspace;
// 5 singular structure / numerical failure.  Errors also emit a
// machine-readable JSON object on stderr.

#include "orthoglide/reports.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace orthoglide;

namespace {

struct CommonOpts {
    std::string params_file;     // machine parameter file; empty = synthesize defaults
    std::string stiffness_file;  // leg elastic parameters; empty = built-in estimates
    std::string out_dir;         // output directory; empty = $ORTHOGLIDE_OUTDIR or "."
};

void add_common(CLI::App* cmd, CommonOpts& c, bool with_stiffness) {
    cmd->add_option("--params", c.params_file,
                    "machine parameter file (default: synthesize the reference design)")
        ->check(CLI::ExistingFile);
    if (with_stiffness)
        cmd->add_option("--stiffness", c.stiffness_file, "leg elastic parameter file")
            ->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out_dir,
                    "output directory (default: $ORTHOGLIDE_OUTDIR or current dir)");
}

fs::path resolve_out_dir(const CommonOpts& c) {
    std::string dir = c.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("ORTHOGLIDE_OUTDIR");
        dir = env && *env ? env : ".";
    }
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

MachineParams load_machine(const CommonOpts& c) {
    if (!c.params_file.empty())
        return validate_params(read_raw_machine_params_file(c.params_file));
    return synthesize(SynthesisSpec{}).params;
}

LegStiffnessParams load_stiffness(const CommonOpts& c) {
    if (!c.stiffness_file.empty()) return read_leg_stiffness_params_file(c.stiffness_file);
    return LegStiffnessParams{};
}

Vec3 resolve_point(const std::string& spec, const MachineParams& m) {
    std::string s = spec;
    for (char& ch : s) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "isotropic" || s == "iso" || s == "origin") return Vec3::Zero();
    if (s == "q1") return m.cube.min_corner();
    if (s == "q2") return m.cube.max_corner();
    const std::vector<double> nums = detail::parse_numbers(spec);
    if (nums.size() != 3)
        throw ConfigError("point must be 'isotropic', 'Q1', 'Q2', or 'x,y,z' (got '" + spec +
                          "')");
    return Vec3(nums[0], nums[1], nums[2]);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DegenerateSpecError*>(&e)) return 2;
    if (dynamic_cast<const UnreachableError*>(&e)) return 4;
    if (dynamic_cast<const SingularError*>(&e)) return 4;
    if (dynamic_cast<const SingularStructureError*>(&e)) return 5;
    if (dynamic_cast<const ReactiveSubspaceError*>(&e)) return 5;
    if (dynamic_cast<const NoConvergenceError*>(&e)) return 5;
    return 1;  // ConfigError and anything unexpected: usage/config problem
}

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const DegenerateSpecError*>(&e)) return "degenerate_spec";
    if (dynamic_cast<const UnreachableError*>(&e)) return "unreachable";
    if (dynamic_cast<const SingularError*>(&e)) return "singular_posture";
    if (dynamic_cast<const SingularStructureError*>(&e)) return "singular_structure";
    if (dynamic_cast<const ReactiveSubspaceError*>(&e)) return "reactive_subspace_singular";
    if (dynamic_cast<const NoConvergenceError*>(&e)) return "no_convergence";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    return "internal";
}

int report_error(const std::exception& e) {
    const int code = exit_code_for(e);
    std::string message = e.what();
    if (code == 2) message = "degenerate bounds: " + message;
    std::cerr << json{{"error",
                       {{"type", error_kind(e)}, {"message", message}, {"exit_code", code}}}}
                     .dump()
              << "\n";
    return code;
}

// --------------------------------------------------------------------------

int cmd_synthesize(const CommonOpts& common, const SynthesisSpec& spec) {
    const SynthesisReport rep = synthesize(spec);
    const fs::path out = resolve_out_dir(common);
    write_json(out / "synthesis_report.json", synthesis_to_json(rep));
    write_text(out / "machine.params", serialize_params(rep.params));
    std::cout << "leg length    " << rep.leg_length << " mm\n"
              << "cube          side " << rep.cube.side << " mm, span [" << rep.q_lo << ", "
              << rep.q_hi << "] mm per axis\n"
              << "joint range   [" << rep.rho_min << ", " << rep.rho_max << "] mm (stroke "
              << rep.stroke << " mm)\n"
              << "wrote " << (out / "synthesis_report.json").string() << "\n"
              << "wrote " << (out / "machine.params").string() << "\n";
    return 0;
}

struct WorkspaceOpts {
    int resolution = 17;
    int depth = 8;
    double psi_lo = 0.5, psi_hi = 2.0;
    bool certify = false;
    bool check_cube = false;
    std::vector<double> box;  // cx cy cz side
};

int cmd_workspace(const CommonOpts& common, const WorkspaceOpts& o) {
    const MachineParams m = load_machine(common);
    const PsiBounds psi{o.psi_lo, o.psi_hi};
    CertifyOptions copt;
    copt.max_depth = o.depth;

    AlignedBox region = AlignedBox::from_cube(m.cube);
    if (!o.box.empty()) {
        if (o.box.size() != 4)
            throw ConfigError("--box expects 'cx,cy,cz,side'");
        Cube c{Vec3(o.box[0], o.box[1], o.box[2]), o.box[3]};
        region = AlignedBox::from_cube(c);
    }

    const fs::path out = resolve_out_dir(common);

    const WorkspaceMap map = grid_map(m, region, o.resolution, psi);
    {
        std::ofstream csv(out / "workspace_grid.csv", std::ios::binary);
        if (!csv) throw ConfigError("cannot write workspace_grid.csv");
        workspace_map_to_csv(map, csv);
    }
    std::cout << "grid " << o.resolution << "^3: " << map.n_feasible << "/" << map.cells.size()
              << " nodes feasible";
    if (!std::isnan(map.psi_min_overall))
        std::cout << ", psi in [" << map.psi_min_overall << ", " << map.psi_max_overall << "]";
    std::cout << "\nwrote " << (out / "workspace_grid.csv").string() << "\n";

    if (o.certify) {
        const CertificationResult cert = interval_certify(m, region, psi, copt);
        write_json(out / "workspace_boxes.json", certification_to_json(cert, true));
        std::cout << "certified: " << cert.n_inside << " inside, " << cert.n_outside
                  << " outside, " << cert.n_boundary << " boundary boxes (resolved: "
                  << (cert.resolved ? "yes" : "no") << ")\n"
                  << "wrote " << (out / "workspace_boxes.json").string() << "\n";
    }

    if (o.check_cube) {
        const InclusionReport inc = cube_inclusion_check(m, m.cube, psi, copt);
        write_json(out / "inclusion_report.json", inclusion_to_json(inc));
        std::cout << "cube inclusion: " << (inc.included ? "certified" : "FAILED")
                  << " (margin " << inc.margin << " mm)\n"
                  << "wrote " << (out / "inclusion_report.json").string() << "\n";
        if (!inc.included) {
            std::cerr << json{{"error",
                               {{"type", "inclusion_failed"},
                                {"message", "prescribed cube is not certified inside the "
                                            "dextrous workspace"},
                                {"exit_code", 3}}}}
                             .dump()
                      << "\n";
            return 3;
        }
    }
    return 0;
}

int cmd_stiffness(const CommonOpts& common, const std::string& at, int field_res) {
    const MachineParams m = load_machine(common);
    const LegStiffnessParams sp = load_stiffness(common);
    const Vec3 p = resolve_point(at, m);
    const TotalStiffness K = total_stiffness(p, m, sp);

    const fs::path out = resolve_out_dir(common);
    write_json(out / "stiffness_report.json", stiffness_to_json(K, p));
    std::cout << "K diagonal at (" << p.x() << ", " << p.y() << ", " << p.z() << "): "
              << K.K.matrix().diagonal().transpose() << "\n"
              << "wrote " << (out / "stiffness_report.json").string() << "\n";

    if (field_res > 0) {
        const StiffnessField field = stiffness_field(m, sp, field_res);
        std::ofstream csv(out / "stiffness_field.csv", std::ios::binary);
        if (!csv) throw ConfigError("cannot write stiffness_field.csv");
        stiffness_field_to_csv(field, csv);
        std::cout << "translational diagonal over the cube: [" << field.k_trans_min << ", "
                  << field.k_trans_max << "] N/mm\n"
                  << "wrote " << (out / "stiffness_field.csv").string() << "\n";
    }
    return 0;
}

int cmd_deflect(const CommonOpts& common, const std::string& at, const MillingSpec& spec) {
    const MachineParams m = load_machine(common);
    const LegStiffnessParams sp = load_stiffness(common);
    const Vec3 p = resolve_point(at, m);
    const MillingReport rep = milling_case_study(m, sp, p, spec);

    const fs::path out = resolve_out_dir(common);
    write_json(out / "deflection_report.json", milling_to_json(rep));
    std::cout << "deflection at P   dp = (" << rep.at_p.dp.transpose() << ") mm, dphi = ("
              << rep.at_p.dphi.transpose() << ") rad\n"
              << "deflection at TCP dp = (" << rep.at_tcp.dp.transpose() << ") mm\n"
              << "wrote " << (out / "deflection_report.json").string() << "\n";
    return 0;
}

struct SensitivityOpts {
    std::string at = "isotropic";
    long samples = 100000;
    double length_tol = 0.05;
    double angle_tol_deg = 0.03;
    double threshold = 0.3;
    std::string model = "uniform";
    std::uint64_t seed = 20240314u;
    int field_res = 0;
    bool jacobian = false;
};

int cmd_sensitivity(const CommonOpts& common, const SensitivityOpts& o) {
    if (o.samples < 1) throw ConfigError("--samples must be >= 1");
    ToleranceSpec tol;
    tol.length_tol = o.length_tol;
    tol.angle_tol = o.angle_tol_deg * M_PI / 180.0;
    tol.position_threshold = o.threshold;
    tol.samples = o.samples;
    if (o.model == "uniform")
        tol.model = PerturbationModel::Uniform;
    else if (o.model == "gaussian")
        tol.model = PerturbationModel::Gaussian3Sigma;
    else
        throw ConfigError("--model must be 'uniform' or 'gaussian'");

    const MachineParams m = load_machine(common);
    const Vec3 p = resolve_point(o.at, m);
    const MonteCarloResult mc = monte_carlo_accuracy(p, m, tol, o.seed);

    json rep = monte_carlo_to_json(mc, p, tol);
    if (o.jacobian) rep["first_order"] = sensitivity_jacobian_to_json(p, position_sensitivity(p, m));

    const fs::path out = resolve_out_dir(common);
    write_json(out / "sensitivity_report.json", rep);
    std::cout << "P(|dp| <= " << tol.position_threshold << " mm) = " << mc.probability
              << "  (95% CI [" << mc.ci_lo << ", " << mc.ci_hi << "], N = " << mc.samples
              << ", seed " << mc.seed << ")\n"
              << "wrote " << (out / "sensitivity_report.json").string() << "\n";

    if (o.field_res > 0) {
        const SensitivityField field = sensitivity_field(m, o.field_res);
        std::ofstream csv(out / "sensitivity_field.csv", std::ios::binary);
        if (!csv) throw ConfigError("cannot write sensitivity_field.csv");
        sensitivity_field_to_csv(field, csv);
        std::cout << "sensitivity norm over the cube: [" << field.min << " at ("
                  << field.argmin.transpose() << "), " << field.max << " at ("
                  << field.argmax.transpose() << ")]\n"
                  << "wrote " << (out / "sensitivity_field.csv").string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "orthoglide: kinematics, dimensional synthesis, workspace certification, "
        "virtual-joint stiffness, and tolerance sensitivity for an orthogonal 3-axis "
        "translational parallel machine"};
    app.require_subcommand(1);

    // synthesize
    CommonOpts syn_common;
    SynthesisSpec syn_spec;
    CLI::App* syn = app.add_subcommand("synthesize",
                                       "size the machine from a prescribed workspace cube");
    syn->add_option("--cube", syn_spec.cube_side, "workspace cube side, mm")
        ->capture_default_str();
    syn->add_option("--psi-lo", syn_spec.psi_lo, "lower transmission-factor bound")
        ->capture_default_str();
    syn->add_option("--psi-hi", syn_spec.psi_hi, "upper transmission-factor bound")
        ->capture_default_str();
    syn->add_option("--tol", syn_spec.bisect_tol, "bisection tolerance on normalized u")
        ->capture_default_str();
    add_common(syn, syn_common, false);

    // workspace
    CommonOpts ws_common;
    WorkspaceOpts ws;
    CLI::App* wsc = app.add_subcommand("workspace", "map and certify the workspace");
    wsc->add_option("--resolution", ws.resolution, "grid nodes per axis (>= 2)")
        ->capture_default_str();
    wsc->add_option("--depth", ws.depth, "certification depth (per-axis halvings)")
        ->capture_default_str();
    wsc->add_option("--psi-lo", ws.psi_lo, "lower factor bound")->capture_default_str();
    wsc->add_option("--psi-hi", ws.psi_hi, "upper factor bound")->capture_default_str();
    wsc->add_flag("--certify", ws.certify, "emit an interval box partition (JSON)");
    wsc->add_flag("--check-cube", ws.check_cube,
                  "certify inclusion of the machine cube (exit 3 on failure)");
    wsc->add_option("--box", ws.box,
                    "region override 'cx,cy,cz,side' (default: machine cube)")
        ->delimiter(',')
        ->expected(0, 4);
    add_common(wsc, ws_common, false);

    // stiffness
    CommonOpts st_common;
    std::string st_at = "isotropic";
    int st_field = 0;
    CLI::App* stc = app.add_subcommand("stiffness", "assembled Cartesian stiffness at a point");
    stc->add_option("--at", st_at, "point: isotropic | Q1 | Q2 | 'x,y,z' (mm)")
        ->capture_default_str();
    stc->add_option("--field", st_field, "also scan an N^3 diagonal-stiffness field");
    add_common(stc, st_common, true);

    // deflect
    CommonOpts df_common;
    std::string df_at = "isotropic";
    MillingSpec milling;
    CLI::App* dfc = app.add_subcommand("deflect", "milling load-deflection case study");
    dfc->add_option("--at", df_at, "point: isotropic | Q1 | Q2 | 'x,y,z' (mm)")
        ->capture_default_str();
    dfc->add_option("--fx", milling.fx, "cutting force x, N")->capture_default_str();
    dfc->add_option("--fy", milling.fy, "cutting force y, N")->capture_default_str();
    dfc->add_option("--fz", milling.fz, "cutting force z, N")->capture_default_str();
    dfc->add_option("--hz", milling.h_z, "tool length (z offset), mm")->capture_default_str();
    add_common(dfc, df_common, true);

    // sensitivity
    CommonOpts se_common;
    SensitivityOpts se;
    CLI::App* sec = app.add_subcommand("sensitivity",
                                       "geometric-error sensitivity and Monte Carlo accuracy");
    sec->add_option("--at", se.at, "point: isotropic | Q1 | Q2 | 'x,y,z' (mm)")
        ->capture_default_str();
    sec->add_option("--samples", se.samples, "Monte Carlo samples (>= 1)")
        ->capture_default_str();
    sec->add_option("--length-tol", se.length_tol, "length tolerance, mm")
        ->capture_default_str();
    sec->add_option("--angle-tol", se.angle_tol_deg, "angle tolerance, deg")
        ->capture_default_str();
    sec->add_option("--threshold", se.threshold, "position error threshold, mm")
        ->capture_default_str();
    sec->add_option("--model", se.model, "perturbation model: uniform | gaussian")
        ->capture_default_str();
    sec->add_option("--seed", se.seed, "random seed")->capture_default_str();
    sec->add_option("--field", se.field_res, "also scan an N^3 sensitivity-norm field");
    sec->add_flag("--jacobian", se.jacobian, "include the first-order Jacobian in the report");
    add_common(sec, se_common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage problems are exit 1, help/version exit 0
    }

    try {
        if (syn->parsed()) return cmd_synthesize(syn_common, syn_spec);
        if (wsc->parsed()) return cmd_workspace(ws_common, ws);
        if (stc->parsed()) return cmd_stiffness(st_common, st_at, st_field);
        if (dfc->parsed()) return cmd_deflect(df_common, df_at, milling);
        if (sec->parsed()) return cmd_sensitivity(se_common, se);
    } catch (const std::exception& e) {
        return report_error(e);
    }
    return 1;
}
