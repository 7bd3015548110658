#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "octotrap/octotrap.hpp"

using namespace octotrap;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}
}  // namespace

TEST_CASE("key-value parsing") {
    const auto kv = KeyValues::parse("a = 1.5\n# comment\n b = hello  # trailing\n\nc=2\n");
    CHECK(kv.get_double("a") == 1.5);
    CHECK(kv.get("b") == "hello");
    CHECK(kv.get_double("c") == 2.0);
    CHECK(kv.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(kv.get("missing"), ConfigError);
    CHECK_THROWS_AS(kv.get_double("b"), ConfigError);
    CHECK_THROWS_AS(KeyValues::parse("justtext\n"), ConfigError);
}

TEST_CASE("scan spec validation") {
    ScanSpec s;
    s.param = "l_s";
    s.steps = 5;
    CHECK_NOTHROW(s.validate());
    s.param = "bogus";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.param = "l_s";
    s.steps = 100000;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.steps = 5;
    s.fixed["nope"] = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);

    ScanSpec c;
    c.kind = ScanSpec::Kind::Coeff;
    c.param = "a1";
    CHECK_NOTHROW(c.validate());
    c.param = "fig6_j";
    CHECK_NOTHROW(c.validate());
    c.param = "l_s";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("calibration file round trip") {
    const fs::path dir = fs::temp_directory_path() / "octotrap_io_test";
    fs::create_directories(dir);
    CalibrationConstants cal{0.913, 0.795, 1e-6};
    save_calibration(cal, 0.375, dir / "cal.txt");
    const auto back = load_calibration(dir / "cal.txt");
    CHECK(back.d_cal == Catch::Approx(0.913).epsilon(1e-12));
    CHECK(back.q_cal == Catch::Approx(0.795).epsilon(1e-12));
    CHECK(back.d_px_used == Catch::Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("minima and history csv formats") {
    const fs::path dir = fs::temp_directory_path() / "octotrap_io_test";
    fs::create_directories(dir);
    MinimaPattern pat;
    pat.points = {{1e-6, -2e-6}, {0, 0}};
    pat.depth_j = {2.0 * kBoltzmann * 1e-6, 0.0};  // 2 uK and 0
    save_minima_csv(pat, dir / "m.csv");
    const auto text = slurp(dir / "m.csv");
    CHECK(text.rfind("x_um,y_um,depth_uK\n", 0) == 0);
    CHECK(text.find("\n1,-2,2\n") != std::string::npos);

    CorrectionHistory hist;
    CorrectionStep st;
    st.d_b = 100e-6;
    st.d_res = 5e-6;
    st.fitted.a1 = 0.01;
    st.bias_cumulative.dv = {1, 2, 3, 4, 5, 6, 7, -28};
    hist.steps.push_back(st);
    save_history_csv(hist, dir / "h.csv");
    const auto htext = slurp(dir / "h.csv");
    CHECK(htext.rfind("step,d_b_um,d_res_um,a1,a2,a3,a4,"
                      "dv0_V,dv1_V,dv2_V,dv3_V,dv4_V,dv5_V,dv6_V,dv7_V\n", 0) == 0);
    CHECK(htext.find("0,100,5,0.01,0,0,0,1,2,3,4,5,6,7,-28") != std::string::npos);
}

TEST_CASE("grid csv dump skips masked pixels") {
    const fs::path dir = fs::temp_directory_path() / "octotrap_io_test";
    fs::create_directories(dir);
    PotentialGrid g;
    g.d_px = 1e-6;
    g.n = 3;
    g.values = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    g.mask = {0, 1, 0, 0, 0, 0, 0, 0, 0};
    save_grid_csv(g, dir / "g.csv");
    const auto text = slurp(dir / "g.csv");
    CHECK(text.find("0,-1,2") == std::string::npos);  // masked
    CHECK(text.find("-1,-1,1") != std::string::npos);
}

TEST_CASE("svg plots are written") {
    const fs::path dir = fs::temp_directory_path() / "octotrap_io_test";
    fs::create_directories(dir);
    SvgPlot plot("demo", "x", "y");
    auto& s = plot.add_series("points", "#123456", SvgPlot::Marker::Circle, true);
    s.points = {{0, 0}, {1, 2}, {2, 1}};
    s.yerr = {0.1, 0.2, 0.1};
    auto& s2 = plot.add_series("more", "#654321", SvgPlot::Marker::Cross);
    s2.points = {{0.5, 1.5}};
    plot.write(dir / "demo.svg");
    const auto text = slurp(dir / "demo.svg");
    CHECK(text.rfind("<?xml", 0) == 0);
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
    CHECK(text.find("#123456") != std::string::npos);
}

TEST_CASE("seeded table runs are byte-identical") {
    TrapConfig cfg;
    const fs::path dir1 = fs::temp_directory_path() / "octotrap_det1";
    const fs::path dir2 = fs::temp_directory_path() / "octotrap_det2";
    std::vector<TableResult> t1{run_success_table(6, 4e-6, cfg, 42)};
    std::vector<TableResult> t2{run_success_table(6, 4e-6, cfg, 42)};
    save_tables(t1, dir1);
    save_tables(t2, dir2);
    CHECK(slurp(dir1 / "table_cases.csv") == slurp(dir2 / "table_cases.csv"));
    CHECK(slurp(dir1 / "table_summary.csv") == slurp(dir2 / "table_summary.csv"));
    CHECK(!slurp(dir1 / "table_cases.csv").empty());
}

TEST_CASE("seeded completeness runs are byte-identical and solver-backed") {
    TrapConfig cfg;
    const fs::path dir1 = fs::temp_directory_path() / "octotrap_det3";
    const fs::path dir2 = fs::temp_directory_path() / "octotrap_det4";
    const auto r1 = run_completeness(3, 0.01, cfg, 5);
    const auto r2 = run_completeness(3, 0.01, cfg, 5);
    save_completeness(r1, dir1);
    save_completeness(r2, dir2);
    CHECK(slurp(dir1 / "completeness.csv") == slurp(dir2 / "completeness.csv"));
    for (const auto& c : r1.cases) {
        CHECK(c.status == "ok");
        CHECK(c.d_bar_s >= 0.0);
    }
}

TEST_CASE("manifest carries the run description") {
    TrapConfig cfg;
    const fs::path dir = fs::temp_directory_path() / "octotrap_io_test";
    write_manifest(dir, "unit-test", cfg, {{"extra", "1"}});
    const auto kv = KeyValues::load(dir / "manifest.txt");
    CHECK(kv.get("command") == "unit-test");
    CHECK(kv.get("version") == kVersion);
    CHECK(kv.get_double("r0_mm") == 4.0);
    CHECK(kv.get_double("extra") == 1.0);
    CHECK(kv.has("solver_nodes_per_circle"));
}
