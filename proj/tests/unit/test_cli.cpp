#include "doctest.h"

#include <filesystem>
#include <sstream>
#include <string>

#include "msfem/cli.hpp"

using namespace msfem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

std::string error_of(const std::string& text, bool validate = false) {
    try {
        const auto c = parse(text);
        if (validate) validate_config(c);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse(
        "# comment\n"
        "experiment = solution-bound  # trailing comment\n"
        "coarse = 12\n"
        "m = 16, 18\n"
        "J = 0..3, 6\n"
        "sc = 0.8, 0.9\n"
        "seed = 18446744073709551615\n"
        "shift = true\n"
        "out = results/x\n");
    CHECK(c.experiment == "solution-bound");
    CHECK(c.coarse == 12);
    CHECK(c.m == std::vector<int>{16, 18});
    CHECK(c.terms == std::vector<int>{0, 1, 2, 3, 6});
    CHECK(c.sc == std::vector<double>{0.8, 0.9});
    CHECK(c.seed == 18446744073709551615ull);
    CHECK(c.shift);
    CHECK(c.out_dir == "results/x");
    CHECK(c.lines.at("m") == 4);
    CHECK_NOTHROW(validate_config(c));

    const auto sweep = parse("experiment = mesh-sweep\nmeshes = 4x30, 12x10\n");
    REQUIRE(sweep.meshes.size() == 2);
    CHECK(sweep.meshes[0].coarse == 4);
    CHECK(sweep.meshes[1].refinement == 10);
}

TEST_CASE("config errors carry line numbers") {
    CHECK(error_of("experiment = basis-bound\nbogus = 1\n") == "test.cfg:2: unknown key 'bogus'");
    CHECK(error_of("m = 1\n\nm = 2\n") == "test.cfg:3: duplicate key 'm' (first set on line 1)");
    CHECK(error_of("coarse 12\n") == "test.cfg:1: expected 'key = value'");
    CHECK(error_of("coarse = twelve\n") == "test.cfg:1: expected an integer, got 'twelve'");
    CHECK(error_of("J = 5..2\n") == "test.cfg:1: empty range '5..2'");
    CHECK(error_of("shift = maybe\n") == "test.cfg:1: expected true or false, got 'maybe'");
    CHECK(error_of("x =\n").find("test.cfg:1:") == 0);
}

TEST_CASE("semantic validation") {
    CHECK(error_of("experiment = nonsense\n", true) == "test.cfg:1: experiment: unknown experiment 'nonsense'");
    CHECK(error_of("coarse = 1\n", true).find("experiment: missing experiment name") != std::string::npos);
    CHECK(error_of("experiment = basis-bound\nn = 20\n\nm = 21\n", true) == "test.cfg:4: m: every m must lie in [0, n]");
    CHECK(error_of("experiment = basis-slope\nfield = kle\n", true).find("test.cfg:2: field:") == 0);
    CHECK(error_of("experiment = mc-stats\nsamples = 0\n", true).find("test.cfg:2: samples:") == 0);
    CHECK(error_of("experiment = mesh-sweep\n", true).find("meshes") != std::string::npos);
    CHECK(error_of("experiment = basis-bound\nvertex = 4\n", true).find("test.cfg:2: vertex:") == 0);
    CHECK(error_of("experiment = colloc-table\nL = 5\n", true).find("test.cfg:2: L:") == 0);
}

TEST_CASE("unknown experiment is rejected before any output") {
    namespace fs = std::filesystem;
    auto c = parse("experiment = nothing\n");
    c.out_dir = (fs::temp_directory_path() / "msfem_split_never_written").string();
    fs::remove_all(c.out_dir);
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    CHECK_FALSE(fs::exists(c.out_dir));
}

TEST_CASE("cost-ratios experiment output") {
    const auto c = parse("experiment = cost-ratios\nn = 20\nm = 10\nq = 2\nL = 2\n");
    const auto out = run_experiment(c);
    REQUIRE(out.files.size() == 1);
    CHECK(out.files[0].first == "cost_ratios.csv");
    const std::string& csv = out.files[0].second;
    CHECK(csv.rfind("n,m,q,L,ftc_denominator,alpha_ftc,sgc_reduced,sgc_full,alpha_sgc\n", 0) == 0);
    CHECK(csv.find("20,10,2,2,59049,") != std::string::npos);
    CHECK(csv.find(",221,841,") != std::string::npos);
    CHECK(out.all_passed());
    const std::string summary = summary_text(c, out);
    CHECK(summary.find("0/0 checks passed") != std::string::npos);
    CHECK(manifest_text(c).find("experiment = cost-ratios") != std::string::npos);
}
