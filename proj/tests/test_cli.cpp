#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "refl/csv.hpp"
#include "refl/harness.hpp"

using namespace refl;
namespace fs = std::filesystem;

namespace {

const std::string cli = REFL_CLI_PATH;

fs::path tmp_dir() {
    const auto dir = fs::temp_directory_path() / "refl_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_losses(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    out << "loss\n1\n2\n3\n";
}

} // namespace

TEST_CASE("ref command recovers the sample mean at epsilon zero") {
    const auto dir = tmp_dir();
    write_losses(dir / "losses.csv");
    const auto out = dir / "ref_out.csv";
    CHECK(run("ref --score mean --b 2 --eps 0 --input " +
              (dir / "losses.csv").string() + " --output " + out.string()) ==
          0);
    const auto table = read_csv_file(out.string());
    CHECK(table.header[0] == "epsilon");
    CHECK(table.header[1] == "z_star");
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0][table.col("z_star")] ==
          doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("ref value column is nondecreasing in epsilon") {
    const auto dir = tmp_dir();
    write_losses(dir / "losses.csv");
    const auto out = dir / "ref_var.csv";
    CHECK(run("ref --score var --b 1 --alpha 0.6 --eps 0,0.1,0.3 --input " +
              (dir / "losses.csv").string() + " --output " + out.string()) ==
          0);
    const auto table = read_csv_file(out.string());
    REQUIRE(table.rows.size() == 3);
    const auto value = table.column(table.col("value"));
    CHECK(value[1] >= value[0] - 1e-12);
    CHECK(value[2] >= value[1] - 1e-12);
}

TEST_CASE("joint score emits both coordinates") {
    const auto dir = tmp_dir();
    {
        std::ofstream out(dir / "L.csv", std::ios::binary);
        out << "loss\n";
        for (int i = 1; i <= 60; ++i) out << 0.1 * i << "\n";
    }
    const auto out = dir / "vares.csv";
    CHECK(run("ref --score vares --b 0.5 --alpha 0.9 --eps 0 --input " +
              (dir / "L.csv").string() + " --output " + out.string()) == 0);
    const auto table = read_csv_file(out.string());
    CHECK_NOTHROW(table.col("z2_star"));
    const auto& r = table.rows[0];
    CHECK(r[table.col("z_star")] <= r[table.col("z2_star")]);
}

TEST_CASE("murphy reruns are byte identical") {
    const auto dir = tmp_dir();
    const auto out1 = dir / "m1.csv";
    const auto out2 = dir / "m2.csv";
    const std::string args =
        "murphy --score mean --b 1,1.5,2 --eps 0,0.1 --dist texp:2 "
        "--n 400 --seed 42 --output ";
    CHECK(run(args + out1.string()) == 0);
    CHECK(run(args + out2.string()) == 0);
    const auto bytes = slurp(out1);
    CHECK(bytes == slurp(out2));
    CHECK(bytes.rfind("# refl murphy", 0) == 0); // provenance comment first
    CHECK(bytes.find("seed=42") != std::string::npos);
    CHECK(bytes.find('\r') == std::string::npos); // LF endings only

    const auto out3 = dir / "m3.csv";
    const std::string args9 =
        "murphy --score mean --b 1,1.5,2 --eps 0,0.1 --dist texp:2 "
        "--n 400 --seed 43 --output ";
    CHECK(run(args9 + out3.string()) == 0);
    CHECK(bytes != slurp(out3));
}

TEST_CASE("regress fits an exact line") {
    const auto dir = tmp_dir();
    {
        std::ofstream out(dir / "line.csv", std::ios::binary);
        out << "x,y\n";
        for (int i = 1; i <= 30; ++i) out << 0.02 * i << "," << 0.04 * i << "\n";
    }
    const auto out = dir / "line_fit.csv";
    CHECK(run("regress --eps 0,1,5 --input " + (dir / "line.csv").string() +
              " --output " + out.string()) == 0);
    const auto table = read_csv_file(out.string());
    REQUIRE(table.rows.size() == 3);
    for (const auto& r : table.rows) {
        CHECK(std::fabs(r[table.col("beta_0")]) <= 1e-8);
        CHECK(r[table.col("beta_1")] == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(r[table.col("mse")] <= 1e-16);
    }
}

TEST_CASE("check command reports small gaps") {
    const auto dir = tmp_dir();
    const auto out = dir / "check.csv";
    CHECK(run("check --replicates 5 --atoms 5 --eps 0.05,0.2 --seed 3 "
              "--output " +
              out.string()) == 0);
    const auto table = read_csv_file(out.string());
    CHECK(table.rows.size() == 10);
    for (const auto& r : table.rows)
        CHECK(r[table.col("rel_diff")] <= 1e-3);
}

TEST_CASE("validation failures exit with code 2") {
    const auto dir = tmp_dir();
    write_losses(dir / "losses.csv");
    CHECK(run("ref --score mean --eps 0 --input " +
              (dir / "missing.csv").string()) == 2);
    CHECK(run("ref --score nope --eps 0 --input " +
              (dir / "losses.csv").string()) == 2);
    CHECK(run("ref --score mean --eps -1 --input " +
              (dir / "losses.csv").string()) == 2);
    CHECK(run("murphy --score mean") == 2); // neither --dist nor --input
    CHECK(run("bogus-subcommand") == 2);
}
