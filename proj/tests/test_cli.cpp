// End-to-end tests of the command-line tool: exit codes, artifact files,
// determinism, and loader round-trips.

#include <catch2/catch_amalgamated.hpp>

#include "orthoglide/machine_params.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const char* cli_path() { return ORTHOGLIDE_CLI_PATH; }

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_test_artifacts" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Runs the CLI through the shell; returns the exit code.  stdout is
// discarded, stderr lands in `err` when given.
int run_cli(const std::string& args, const fs::path& err = {},
            const std::string& env_prefix = "") {
    std::string cmd = env_prefix + std::string(cli_path()) + " " + args + " >/dev/null";
    cmd += err.empty() ? " 2>/dev/null" : " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("synthesize writes a report and a loadable machine file") {
    const fs::path dir = fresh_dir("synthesize");
    REQUIRE(run_cli("synthesize --out " + dir.string()) == 0);

    const json rep = load_json(dir / "synthesis_report.json");
    const double L = rep.at("leg_length_mm").get<double>();
    REQUIRE_THAT(L, WithinRel(310.0, 0.015));
    REQUIRE_THAT(rep.at("stroke_mm").get<double>(), WithinRel(257.0, 0.015));
    REQUIRE(rep.at("cube_side_mm").get<double>() == 200.0);

    // The emitted machine file round-trips through the library loader.
    const orthoglide::MachineParams m = orthoglide::validate_params(
        orthoglide::read_raw_machine_params_file((dir / "machine.params").string()));
    REQUIRE(m.leg_length == L);
    REQUIRE(m.cube.side == 200.0);
    REQUIRE(m.ik_branch == -1);
}

TEST_CASE("degenerate factor bounds exit 2 with a machine-readable error") {
    const fs::path dir = fresh_dir("degenerate");
    const fs::path err = dir / "stderr.json";
    REQUIRE(run_cli("synthesize --psi-lo 1 --psi-hi 1 --out " + dir.string(), err) == 2);

    const json e = load_json(err);
    REQUIRE(e.at("error").at("exit_code").get<int>() == 2);
    REQUIRE(e.at("error").at("type").get<std::string>() == "degenerate_spec");
    const std::string msg = e.at("error").at("message").get<std::string>();
    REQUIRE(msg.rfind("degenerate bounds", 0) == 0);
}

TEST_CASE("doubling the cube side doubles the synthesized lengths exactly") {
    const fs::path d1 = fresh_dir("scale_a");
    const fs::path d2 = fresh_dir("scale_b");
    REQUIRE(run_cli("synthesize --cube 200 --out " + d1.string()) == 0);
    REQUIRE(run_cli("synthesize --cube 400 --out " + d2.string()) == 0);
    const double a = load_json(d1 / "synthesis_report.json").at("leg_length_mm").get<double>();
    const double b = load_json(d2 / "synthesis_report.json").at("leg_length_mm").get<double>();
    REQUIRE(b == 2.0 * a);
}

TEST_CASE("workspace mapping, certification, and cube inclusion succeed") {
    const fs::path dir = fresh_dir("workspace");
    REQUIRE(run_cli("workspace --resolution 5 --depth 6 --certify --check-cube --out " +
                    dir.string()) == 0);

    const std::string csv = slurp(dir / "workspace_grid.csv");
    REQUIRE(line_count(csv) == 1 + 5 * 5 * 5);
    REQUIRE(csv.rfind("x_mm,y_mm,z_mm,psi_min,psi_max,reachable,within_limits,psi_ok,feasible",
                      0) == 0);

    const json boxes = load_json(dir / "workspace_boxes.json");
    REQUIRE(boxes.at("counts").at("outside").get<int>() == 0);
    REQUIRE(boxes.at("resolved").get<bool>());
    REQUIRE(boxes.at("boxes").is_array());

    const json inc = load_json(dir / "inclusion_report.json");
    REQUIRE(inc.at("included").get<bool>());
    REQUIRE(inc.at("margin_mm").get<double>() > 0.0);
}

TEST_CASE("a resolution-2 grid emits exactly eight data rows") {
    const fs::path dir = fresh_dir("res2");
    REQUIRE(run_cli("workspace --resolution 2 --out " + dir.string()) == 0);
    REQUIRE(line_count(slurp(dir / "workspace_grid.csv")) == 1 + 8);
}

TEST_CASE("an inflated workspace cube fails the inclusion check with exit 3") {
    const fs::path dir = fresh_dir("inflated");
    {
        std::ofstream f(dir / "machine.params");
        f << "leg_length_mm = 310.582854165\n"
          << "cube_side_mm = 300\n";
    }
    const fs::path err = dir / "stderr.json";
    REQUIRE(run_cli("workspace --check-cube --params " + (dir / "machine.params").string() +
                        " --out " + dir.string(),
                    err) == 3);

    const json e = load_json(err);
    REQUIRE(e.at("error").at("type").get<std::string>() == "inclusion_failed");
    REQUIRE_FALSE(load_json(dir / "inclusion_report.json").at("included").get<bool>());
}

TEST_CASE("a box override far outside reach maps as unreachable") {
    const fs::path dir = fresh_dir("farbox");
    REQUIRE(run_cli("workspace --resolution 2 --box 500,500,500,2 --out " + dir.string()) ==
            0);
    const std::string csv = slurp(dir / "workspace_grid.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        REQUIRE(line.size() >= 8);
        REQUIRE(line.substr(line.size() - 8) == ",0,0,0,0");  // all flags false
    }
}

TEST_CASE("stiffness at the isotropic point produces the diagonal pattern") {
    const fs::path dir = fresh_dir("stiffness");
    REQUIRE(run_cli("stiffness --at isotropic --field 2 --out " + dir.string()) == 0);

    const json rep = load_json(dir / "stiffness_report.json");
    const auto K = rep.at("K");
    const double k00 = K.at(0).at(0).get<double>();
    const double k33 = K.at(3).at(3).get<double>();
    REQUIRE(k00 > 0.0);
    REQUIRE_THAT(K.at(1).at(1).get<double>(), WithinRel(k00, 1e-9));
    REQUIRE_THAT(K.at(2).at(2).get<double>(), WithinRel(k00, 1e-9));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != j) REQUIRE(std::abs(K.at(i).at(j).get<double>()) < 1e-6 * k00);
    REQUIRE(k33 > k00);  // rotational entries dominate in these units
    REQUIRE(rep.at("legs").size() == 3);

    REQUIRE(line_count(slurp(dir / "stiffness_field.csv")) == 1 + 8);
}

TEST_CASE("named points resolve to the cube corners") {
    const fs::path dir = fresh_dir("named_q1");
    REQUIRE(run_cli("stiffness --at Q1 --out " + dir.string()) == 0);
    const json rep = load_json(dir / "stiffness_report.json");
    const double x = rep.at("point_mm").at(0).get<double>();
    REQUIRE_THAT(x, WithinAbs(-73.2051, 1e-3));
}

TEST_CASE("a point outside the workspace exits 4") {
    const fs::path dir = fresh_dir("outside");
    const fs::path err = dir / "stderr.json";
    REQUIRE(run_cli("stiffness --at 400,0,0 --out " + dir.string(), err) == 4);
    REQUIRE(load_json(err).at("error").at("type").get<std::string>() == "unreachable");
}

TEST_CASE("deflect reports a consistent platform and tool-point record") {
    const fs::path dir = fresh_dir("deflect");
    REQUIRE(run_cli("deflect --at isotropic --fx 215 --fy -10 --fz -25 --hz 100 --out " +
                    dir.string()) == 0);

    const json rep = load_json(dir / "deflection_report.json");
    REQUIRE(rep.at("wrench").at("torque_nmm").at(0).get<double>() == 1000.0);
    REQUIRE(rep.at("wrench").at("torque_nmm").at(1).get<double>() == 21500.0);

    const auto dp = rep.at("deflection_at_p").at("dp_mm");
    const auto dphi = rep.at("deflection_at_p").at("dphi_rad");
    const auto tcp = rep.at("deflection_at_tcp").at("dp_mm");

    // z deflection is untouched by the tool transport; x/y pick up dphi x h.
    REQUIRE(tcp.at(2).get<double>() == dp.at(2).get<double>());
    REQUIRE_THAT(tcp.at(0).get<double>(),
                 WithinAbs(dp.at(0).get<double>() + 100.0 * dphi.at(1).get<double>(), 1e-12));
    REQUIRE_THAT(tcp.at(1).get<double>(),
                 WithinAbs(dp.at(1).get<double>() - 100.0 * dphi.at(0).get<double>(), 1e-12));
}

TEST_CASE("deflect honors custom load flags") {
    const fs::path dir = fresh_dir("deflect_custom");
    REQUIRE(run_cli("deflect --fx 10 --fy 20 --fz 30 --hz 50 --out " + dir.string()) == 0);
    const json rep = load_json(dir / "deflection_report.json");
    REQUIRE(rep.at("wrench").at("force_n") == json::array({10.0, 20.0, 30.0}));
    REQUIRE(rep.at("wrench").at("torque_nmm") == json::array({-1000.0, 500.0, 0.0}));
    REQUIRE(rep.at("tool_offset_mm") == json::array({0.0, 0.0, 50.0}));
}

TEST_CASE("sensitivity produces a seeded Monte Carlo record") {
    const fs::path dir = fresh_dir("sensitivity");
    REQUIRE(run_cli("sensitivity --at Q2 --samples 400 --jacobian --out " + dir.string()) ==
            0);

    const json rep = load_json(dir / "sensitivity_report.json");
    REQUIRE(rep.at("samples").get<long>() == 400);
    REQUIRE(rep.at("seed").get<std::uint64_t>() == 20240314u);
    const double p = rep.at("probability").get<double>();
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
    REQUIRE(rep.at("ci95").at(0).get<double>() <= p);
    REQUIRE(p <= rep.at("ci95").at(1).get<double>());
    REQUIRE(rep.at("tolerances").at("model").get<std::string>() == "uniform");

    REQUIRE(rep.at("first_order").at("columns").size() == 12);
    REQUIRE(rep.at("first_order").at("jacobian").size() == 3);
}

TEST_CASE("sensitivity at the isotropic point has Frobenius norm sqrt(6)") {
    const fs::path dir = fresh_dir("sens_iso");
    REQUIRE(run_cli("sensitivity --at isotropic --samples 50 --jacobian --out " +
                    dir.string()) == 0);
    const json rep = load_json(dir / "sensitivity_report.json");
    const double norm = rep.at("first_order").at("frobenius_norm").get<double>();
    REQUIRE_THAT(norm, WithinAbs(std::sqrt(6.0), 1e-3));
}

TEST_CASE("usage errors exit 1") {
    const fs::path dir = fresh_dir("usage");
    const fs::path err = dir / "stderr.txt";
    REQUIRE(run_cli("sensitivity --at Q2 --samples 0 --out " + dir.string(), err) == 1);
    REQUIRE(load_json(err).at("error").at("exit_code").get<int>() == 1);

    REQUIRE(run_cli("sensitivity --model bogus --samples 5 --out " + dir.string(), err) == 1);
    REQUIRE(run_cli("frobnicate", err) == 1);            // unknown subcommand
    REQUIRE(run_cli("synthesize --no-such-flag", err) == 1);
    REQUIRE(run_cli("", err) == 1);                      // a subcommand is required
    REQUIRE(run_cli("--help") == 0);                     // help is not an error
}

TEST_CASE("identical runs produce byte-identical artifacts") {
    const fs::path d1 = fresh_dir("det_a");
    const fs::path d2 = fresh_dir("det_b");
    const std::string args = "sensitivity --at Q2 --samples 300 --seed 99 --out ";
    REQUIRE(run_cli(args + d1.string()) == 0);
    REQUIRE(run_cli(args + d2.string()) == 0);
    REQUIRE(slurp(d1 / "sensitivity_report.json") == slurp(d2 / "sensitivity_report.json"));

    REQUIRE(run_cli("synthesize --out " + d1.string()) == 0);
    REQUIRE(run_cli("synthesize --out " + d2.string()) == 0);
    REQUIRE(slurp(d1 / "synthesis_report.json") == slurp(d2 / "synthesis_report.json"));
    REQUIRE(slurp(d1 / "machine.params") == slurp(d2 / "machine.params"));
}

TEST_CASE("the ORTHOGLIDE_OUTDIR environment variable supplies the output directory") {
    const fs::path dir = fresh_dir("envdir");
    REQUIRE(run_cli("synthesize", {}, "ORTHOGLIDE_OUTDIR=" + dir.string() + " ") == 0);
    REQUIRE(fs::exists(dir / "synthesis_report.json"));
    REQUIRE(fs::exists(dir / "machine.params"));
}

TEST_CASE("an unwritable output directory exits 1") {
    const fs::path err = fresh_dir("unwritable") / "stderr.txt";
    REQUIRE(run_cli("synthesize --out /dev/null/nested", err) == 1);
}

TEST_CASE("a custom stiffness file feeds the stiffness command") {
    const fs::path dir = fresh_dir("custom_stiffness");
    {
        std::ofstream f(dir / "leg.params");
        f << "k_act = 5760\n";  // twice the default actuator stiffness
    }
    REQUIRE(run_cli("stiffness --at isotropic --stiffness " + (dir / "leg.params").string() +
                    " --out " + dir.string()) == 0);
    const json rep = load_json(dir / "stiffness_report.json");
    const double k00 = rep.at("K").at(0).at(0).get<double>();
    // Doubling the actuator spring raises the translational stiffness.
    REQUIRE(k00 > 2710.0);
    REQUIRE(k00 < 2.0 * 2710.0);
}
