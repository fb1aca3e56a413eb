#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "commands.hpp"

using namespace relarb;
using namespace relarb::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("relarb_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const fs::path p = dir / "run.toml";
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::vector<std::string> data_rows(const std::string& csv)
{
    std::vector<std::string> rows;
    std::istringstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

std::vector<std::string> split(const std::string& row)
{
    std::vector<std::string> out;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!row.empty() && row.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::vector<fs::path> run(const std::string& cmd, const std::string& text, const fs::path& out,
                          unsigned threads = 1)
{
    Config c = Config::parse(text, "test");
    return run_command(cmd, c, RunOptions{out, threads});
}

int run_binary(const std::string& args)
{
    const char* cli = std::getenv("RELARB_CLI");
    if (cli == nullptr) {
        return -1;
    }
    const std::string command = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing: values, lists, comments")
{
    Config c = Config::parse("# a comment\nn = 3\nx0 = [1, 2.5, 3e-1] # trailing\nname = \"bridge\"\n",
                             "mem");
    CHECK(c.get_u64("n", 0) == 3);
    CHECK(c.get_list("x0", {}) == std::vector<double>{1.0, 2.5, 0.3});
    CHECK(c.get_string("name", "", {"linear", "bridge"}) == "bridge");
    CHECK(c.get_double("missing", 4.5) == 4.5);
    CHECK_NOTHROW(c.reject_unused());
    CHECK(c.resolved() == "missing=4.5; n=3; name=bridge; x0=[1, 2.5, 0.3]");
}

TEST_CASE("config errors carry line and field")
{
    CHECK_THROWS_WITH(Config::parse("n = 2\nthis line is wrong\n", "f.toml"),
                      Catch::Matchers::ContainsSubstring("f.toml:2"));
    CHECK_THROWS_AS(Config::parse("n = 2\nn = 3\n", "f"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[section]\n", "f"), ConfigError);
    Config c = Config::parse("\nT = abc\n", "g.toml");
    CHECK_THROWS_WITH(c.get_double("T", 1.0), Catch::Matchers::ContainsSubstring("g.toml:2") &&
                                                   Catch::Matchers::ContainsSubstring("'T'"));
    Config u = Config::parse("nn = 2\n", "h.toml");
    CHECK_THROWS_WITH(u.reject_unused(), Catch::Matchers::ContainsSubstring("unknown field 'nn'"));
}

TEST_CASE("number formatting is shortest round-trip")
{
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-12) == "1e-12");
    const double x = 0.5280417392;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("surface: one cell gives one row with the documented header")
{
    const fs::path out = scratch("surface1");
    const auto files = run("surface",
                           "n = 2\nn_paths = 50\nx1_cells = 1\nx2_cells = 1\nseed = 3\n", out);
    const std::string csv = slurp(files.at(0));
    CHECK(csv.rfind("# relarb surface: ", 0) == 0);
    CHECK(csv.find("\nx1,x2,u,std_err,n_paths,seed\n") != std::string::npos);
    CHECK(csv.find('\r') == std::string::npos);
    const auto rows = data_rows(csv);
    REQUIRE(rows.size() == 1);
    const auto cells = split(rows[0]);
    REQUIRE(cells.size() == 6);
    CHECK(cells[0] == "6.25");
    CHECK(cells[4] == "50");
    CHECK(cells[5] == std::to_string(surface_node_seed(3, 0)));
}

TEST_CASE("upath: N_T + 1 rows ending at exactly one")
{
    const fs::path out = scratch("upath");
    const auto files = run("upath", "n_paths = 50\ndt = 0.05\nseed = 4\n", out);
    const auto rows = data_rows(slurp(files.at(0)));
    REQUIRE(rows.size() == 21);
    const auto last = split(rows.back());
    CHECK(last[0] == "1");
    CHECK(last[1] == "1");
    CHECK(last[2] == "0");
}

TEST_CASE("upath with zero time steps gives the single row u(T, x0)")
{
    const auto files = run("upath", "n_paths = 50\ntime_steps = 0\nseed = 4\n", scratch("upath0"));
    const auto rows = data_rows(slurp(files.at(0)));
    REQUIRE(rows.size() == 1);
    CHECK(split(rows[0])[0] == "0");
    CHECK(std::stod(split(rows[0])[1]) < 1.0);
}

TEST_CASE("boundary: zero noise never hits; footer reports the fraction")
{
    const fs::path out = scratch("boundary");
    const auto files = run("boundary", "n_paths = 30\nnoise_scale = 0\nkeep_trajectories = 2\n", out);
    const std::string csv = slurp(files.at(0));
    for (const auto& r : data_rows(csv)) {
        CHECK(split(r)[1] == "false");
    }
    CHECK(csv.find("# fraction_hit=0;") != std::string::npos);
    CHECK(data_rows(slurp(files.at(1))).size() == 2 * 1001);
}

TEST_CASE("boundary: empty path budget is a config error")
{
    CHECK_THROWS_AS(run("boundary", "n_paths = 0\n", scratch("boundary0")), ConfigError);
}

TEST_CASE("euler_compare: bessel never fails, euler does at n = 8")
{
    const fs::path out = scratch("euler");
    const auto files = run("euler_compare",
                           "n = 8\nx0 = [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01]\n"
                           "n_paths = 200\nseed = 38\n",
                           out);
    const auto rows = data_rows(slurp(files.at(0)));
    REQUIRE(rows.size() == 2);
    CHECK(split(rows[0])[0] == "euler");
    CHECK(std::stod(split(rows[0])[1]) > 0.0);
    CHECK(split(rows[1])[0] == "bessel");
    CHECK(split(rows[1])[1] == "0");
}

TEST_CASE("bsde: ladder rows and a K trace; desk-scale cap")
{
    const fs::path out = scratch("bsde");
    const auto files = run("bsde",
                           "n_paths = 500\nreplications = 2\ntime_steps = 5\nclock_dt = 0.01\n"
                           "lambdas = [0, 10]\nseed = 1\n",
                           out);
    const auto rows = data_rows(slurp(files.at(0)));
    REQUIRE(rows.size() == 2);
    CHECK(split(rows[0])[0] == "0");
    CHECK(split(rows[1])[0] == "10");
    CHECK(data_rows(slurp(files.at(1))).size() == 2 * 6);
    CHECK_THROWS_AS(run("bsde", "n = 4\n", scratch("bsde4")), ConfigError);
}

TEST_CASE("config file naming another command is rejected")
{
    CHECK_THROWS_AS(run("upath", "command = \"surface\"\n", scratch("mismatch")), ConfigError);
}

TEST_CASE("every preset parses for its own command")
{
    for (const auto& entry : fs::directory_iterator(RELARB_PRESET_DIR)) {
        Config c = Config::load(entry.path().string());
        const std::string name = entry.path().stem().string();
        INFO(name);
        CHECK(c.has("command"));
        CHECK(fs::exists(preset_path(name)));
    }
}

TEST_CASE("output is byte-identical across thread counts")
{
    const std::string surface = "n_paths = 40\nx1_cells = 3\nx2_cells = 2\nseed = 9\n";
    const auto a = run("surface", surface, scratch("det1"), 1);
    const auto b = run("surface", surface, scratch("det3"), 3);
    CHECK(slurp(a.at(0)) == slurp(b.at(0)));

    const std::string upath = "n_paths = 40\ndt = 0.1\nseed = 9\n";
    CHECK(slurp(run("upath", upath, scratch("detu1"), 1).at(0)) ==
          slurp(run("upath", upath, scratch("detu3"), 3).at(0)));

    const std::string boundary = "n_paths = 200\nseed = 9\ndt = 0.01\n";
    CHECK(slurp(run("boundary", boundary, scratch("detb1"), 1).at(0)) ==
          slurp(run("boundary", boundary, scratch("detb3"), 3).at(0)));
}

TEST_CASE("binary: exit codes")
{
    if (std::getenv("RELARB_CLI") == nullptr) {
        SKIP("RELARB_CLI not set");
    }
    const fs::path dir = scratch("binary");
    CHECK(run_binary("surface --preset no_such_preset --out " + dir.string()) == kExitConfig);
    const fs::path bad = write_config(dir, "n = 2\nthis is not valid\n");
    CHECK(run_binary("surface --config " + bad.string() + " --out " + dir.string()) == kExitConfig);
    const fs::path budget = write_config(dir, "n = 2\nn_paths = 10\nmax_steps = 3\nx1_cells = 1\nx2_cells = 1\n");
    CHECK(run_binary("surface --config " + budget.string() + " --out " + dir.string()) ==
          kExitNumerical);
    const fs::path ok = write_config(dir, "n = 2\nn_paths = 10\nx1_cells = 2\nx2_cells = 2\n");
    CHECK(run_binary("surface --config " + ok.string() + " --out " + dir.string()) == kExitOk);
    CHECK(run_binary("bsde --config " + write_config(dir, "n = 4\n").string() + " --out " +
                     dir.string()) == kExitConfig);
    CHECK(run_binary("euler_compare --out " + dir.string()) == kExitConfig);
}

TEST_CASE("binary: --seed overrides and threads do not change bytes")
{
    if (std::getenv("RELARB_CLI") == nullptr) {
        SKIP("RELARB_CLI not set");
    }
    const fs::path dir = scratch("binary_seed");
    const fs::path cfg = write_config(dir, "n = 2\nn_paths = 30\nx1_cells = 2\nx2_cells = 2\nseed = 1\n");
    const fs::path a = dir / "a";
    const fs::path b = dir / "b";
    REQUIRE(run_binary("surface --config " + cfg.string() + " --seed 77 --threads 1 --out " + a.string()) == 0);
    REQUIRE(run_binary("surface --config " + cfg.string() + " --seed 77 --threads 3 --out " + b.string()) == 0);
    const std::string sa = slurp(a / "surface.csv");
    CHECK(sa == slurp(b / "surface.csv"));
    CHECK(sa.find("seed=77") != std::string::npos);
}
