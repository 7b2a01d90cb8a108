#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wvfield/scenario/config.hpp"
#include "wvfield/scenario/runner.hpp"

using namespace wvf;
using namespace wvf::scenario;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("wvfield_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const char* kEq7Config =
    "[scenario]\n"
    "kind = eq7_check\n"
    "seed = 7\n"
    "\n"
    "[params]\n"
    "h1 = sigma_z\n"
    "h2 = sigma_z\n"
    "fd_step = 1e-4\n";

}  // namespace

TEST_CASE("complex parsing") {
    CHECK(parse_complex("1.5") == Complex(1.5, 0.0));
    CHECK(parse_complex("-2e-3") == Complex(-2e-3, 0.0));
    CHECK(parse_complex("0.5j") == Complex(0.0, 0.5));
    CHECK(parse_complex("-j") == Complex(0.0, -1.0));
    CHECK(parse_complex("1.2+0.3j") == Complex(1.2, 0.3));
    CHECK(parse_complex("1.2-0.3j") == Complex(1.2, -0.3));
    CHECK(parse_complex("1e-2+2e-4j") == Complex(1e-2, 2e-4));
    CHECK_THROWS_AS(parse_complex("abc"), ConfigError);
    // round trip through the formatter
    for (Complex z : {Complex(0.25, -1.75), Complex(3.0, 0.0), Complex(0, 2)})
        CHECK(parse_complex(format_complex(z)) == z);
}

TEST_CASE("config parsing: defaults and errors") {
    const auto config = parse_config(kEq7Config);
    CHECK(config.kind == "eq7_check");
    CHECK(config.seed == 7);
    CHECK(config.get_real("fd_step") == 1e-4);
    // schema default fills unset keys
    CHECK(config.get_real("tol") == 1e-5);
    CHECK(config.get_complex_list("pre1").size() == 2);

    // misspelled key names the key and the line
    const char* bad =
        "[scenario]\n"
        "kind = weak_value\n"
        "[params]\n"
        "observible = sigma_z\n";
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 4") != std::string::npos);
        CHECK(msg.find("observible") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("[scenario]\nkind = bogus\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[params]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(
        parse_config("[scenario]\nkind = weak_value\n[params]\npre = oops\n"),
        ConfigError);
    // type mismatch
    CHECK_THROWS_AS(parse_config("[scenario]\nkind = eq7_check\n[params]\n"
                                 "fd_step = hello\n"),
                    ConfigError);
}

TEST_CASE("config round-trips through serialize(parse(text))") {
    const auto config = parse_config(kEq7Config);
    const auto again = parse_config(serialize_config(config));
    CHECK(config == again);

    // a config exercising every value type
    const char* full =
        "[scenario]\n"
        "kind = pointer_mc\n"
        "seed = 123\n"
        "[params]\n"
        "pre = 0.6, 0.8j\n"
        "observable = sigma_x\n"
        "g = 0.02\n"
        "n_shots = 500\n"
        "basis = position\n";
    const auto c2 = parse_config(full);
    CHECK(parse_config(serialize_config(c2)) == c2);
}

TEST_CASE("weak_value scenario produces the anomalous JSON") {
    const auto dir = fresh_dir("wv");
    const auto config = parse_config(
        "[scenario]\nkind = weak_value\nseed = 1\n");
    const auto manifest = run_scenario(config, dir.string());
    CHECK(manifest.pass);

    const std::string result = slurp(dir / "result.json");
    CHECK(result.find("2.414213") != std::string::npos);
    CHECK(fs::exists(dir / "manifest.json"));

    const std::string mtext = slurp(dir / "manifest.json");
    CHECK(mtext.find("\"finished\": true") != std::string::npos);
    CHECK(mtext.find("sha256") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const auto config = parse_config(
        "[scenario]\nkind = pointer_mc\nseed = 5\n[params]\nn_shots = 2000\n"
        "n_points = 512\n");
    const auto dir1 = fresh_dir("det1");
    const auto dir2 = fresh_dir("det2");
    run_scenario(config, dir1.string());
    run_scenario(config, dir2.string());
    CHECK(slurp(dir1 / "shots.csv") == slurp(dir2 / "shots.csv"));
    CHECK(slurp(dir1 / "result.json") == slurp(dir2 / "result.json"));

    // a different seed changes the records
    auto other = config;
    other.seed = 6;
    const auto dir3 = fresh_dir("det3");
    run_scenario(other, dir3.string());
    CHECK(slurp(dir1 / "shots.csv") != slurp(dir3 / "shots.csv"));
}

TEST_CASE("eq6 and eq7 scenarios pass their own assertions") {
    const auto d1 = fresh_dir("eq6");
    const auto m1 = run_scenario(
        parse_config("[scenario]\nkind = eq6_check\nseed = 2\n"), d1.string());
    CHECK(m1.pass);
    const std::string csv = slurp(d1 / "eq6.csv");
    CHECK(csv.find("g,ln_p,analytic_slope,fd_slope,abs_err\n") == 0);
    // the worked fixture: slope +2
    CHECK(slurp(d1 / "result.json").find("\"analytic_slope\": 2.0") !=
          std::string::npos);

    const auto d2 = fresh_dir("eq7");
    const auto m2 = run_scenario(parse_config(kEq7Config), d2.string());
    CHECK(m2.pass);
    CHECK(slurp(d2 / "result.json").find("-4.8284") != std::string::npos);
}

TEST_CASE("sweep writes a combined table with derived seeds") {
    const auto config = parse_config(
        "[scenario]\nkind = pointer_mc\nseed = 9\n[params]\nn_shots = 500\n"
        "n_points = 512\n");
    const auto dir = fresh_dir("sweep");
    const auto manifest =
        sweep_scenario(config, "g", {0.04, 0.02, 0.01}, dir.string());
    CHECK(manifest.outputs.size() == 1);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.find("index,g,pass") == 0);
    CHECK(fs::exists(dir / "run_000" / "result.json"));
    CHECK(fs::exists(dir / "run_002" / "shots.csv"));

    // sub-run seeds differ, so shot records differ
    CHECK(slurp(dir / "run_000" / "shots.csv") !=
          slurp(dir / "run_001" / "shots.csv"));

    CHECK_THROWS_AS(sweep_scenario(config, "basis", {1.0}, dir.string()),
                    ConfigError);
    CHECK_THROWS_AS(sweep_scenario(config, "g", {}, dir.string()),
                    ConfigError);
}

TEST_CASE("legendre and npoint scenarios run end to end") {
    const auto d1 = fresh_dir("leg");
    const auto m1 = run_scenario(
        parse_config("[scenario]\nkind = legendre_check\nseed = 3\n"),
        d1.string());
    CHECK(m1.pass);

    const auto d2 = fresh_dir("np");
    const auto m2 = run_scenario(
        parse_config("[scenario]\nkind = npoint\nseed = 4\n"), d2.string());
    CHECK(m2.pass);
}

TEST_CASE("out dir resolution order") {
    ScenarioConfig config;
    config.kind = "weak_value";
    CHECK(resolve_out_dir(config, "cli_dir") == "cli_dir");
    config.out_dir = "config_dir";
    CHECK(resolve_out_dir(config, "") == "config_dir");
    config.out_dir.clear();
    setenv("WVFIELD_OUT", "env_dir", 1);
    CHECK(resolve_out_dir(config, "") == "env_dir");
    unsetenv("WVFIELD_OUT");
    CHECK(resolve_out_dir(config, "") == ".");
}
