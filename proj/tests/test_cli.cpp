#include "catch2/catch_amalgamated.hpp"

#include "inclusion_lab/cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace inclusion_lab;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args)
{
    args.insert(args.begin(), "inclusion-lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "inclusion_lab_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("simulate writes the CSV schema", "[cli]")
{
    const Result r = call({"simulate", "--scenario", "sec8_example1", "--tfinal", "5", "--dt", "1e-2"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    REQUIRE(header == "t,x1,x2,V,W,event");
    std::string row;
    std::getline(lines, row);
    REQUIRE(std::count(row.begin(), row.end(), ',') == 5);
    REQUIRE(r.out.find('\r') == std::string::npos);
    REQUIRE(r.out.find("slide_enter") != std::string::npos);
    // 17 significant digits: V(0) = 0.5 * (1 + 4) prints exactly.
    REQUIRE(row.rfind("0,1,2,2.5,", 0) == 0);
    std::getline(lines, row);
    const std::string first = row.substr(0, row.find(','));
    REQUIRE(first == "0.01");
}

TEST_CASE("simulate is deterministic", "[cli]")
{
    const auto a = temp_path("a.csv");
    const auto b = temp_path("b.csv");
    REQUIRE(call({"simulate", "--scenario", "ex2", "--tfinal", "3", "--seed", "7", "--out", a.string()}).code == 0);
    REQUIRE(call({"simulate", "--scenario", "ex2", "--tfinal", "3", "--seed", "7", "--out", b.string()}).code == 0);
    const std::string sa = slurp(a);
    REQUIRE_FALSE(sa.empty());
    REQUIRE(sa == slurp(b));
}

TEST_CASE("exit codes", "[cli]")
{
    REQUIRE(call({}).code == 2);
    REQUIRE(call({"frobnicate"}).code == 2);
    REQUIRE(call({"simulate", "--scenario", "nope"}).code == 2);
    REQUIRE(call({"simulate", "--scenario", "sec7", "--bogus", "1"}).code == 2);
    REQUIRE(call({"simulate", "--scenario", "sec7", "--dt", "-1"}).code == 2);
    REQUIRE(call({"certify", "--scenario", "sec7", "--grid", "-2:2:1"}).code == 2);
    REQUIRE(call({"certify", "--scenario", "sec7", "--mode", "sideways"}).code == 2);
    REQUIRE(call({"simulate", "--scenario", "sec8_example1", "--param", "beta=0.1"}).code == 2);
    REQUIRE(call({"simulate", "--scenario", "sec8_example1", "--param", "gamma=1"}).code == 2);
    REQUIRE(call({"simulate", "--config", temp_path("missing.json").string()}).code == 2);

    const Result lower = call({"certify", "--scenario", "sec7", "--mode", "lower", "--grid", "-2:2:21,-2:2:21"});
    REQUIRE(lower.code == 1);
    REQUIRE(lower.out.find("FAIL") != std::string::npos);

    REQUIRE(call({"certify", "--scenario", "sec8_example1", "--grid", "-2:2:9,-2:2:9,0:6:3"}).code == 0);
    REQUIRE(call({"contain", "--scenario", "sec7"}).code == 0);
    REQUIRE(call({"contain", "--scenario", "sec4"}).code == 1);
    REQUIRE(call({"probe", "--scenario", "sec4"}).code == 1);
    REQUIRE(call({"probe", "--scenario", "sec7"}).code == 0);
}

TEST_CASE("repro commands pass", "[cli]")
{
    for (const char* name : {"sec4", "sec7", "sec8_example1", "sec8_example2"}) {
        const Result r = call({"repro", name});
        INFO(r.out << r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("FAIL") == std::string::npos);
        REQUIRE(r.out.find("PASS") != std::string::npos);
    }
    REQUIRE(call({"repro", "sec9"}).code == 2);
}

TEST_CASE("JSON summary keys", "[cli]")
{
    const auto path = temp_path("summary.json");
    REQUIRE(call({"certify", "--scenario", "sec7", "--mode", "lower", "--out", path.string()}).code == 1);
    const auto j = nlohmann::json::parse(slurp(path));
    for (const char* key : {"scenario", "params", "verdicts", "worst_margin", "runtime_s"}) REQUIRE(j.contains(key));
    REQUIRE(j["scenario"] == "sec7_counterexample");
    REQUIRE(j["verdicts"].is_array());
    REQUIRE(j["worst_margin"].get<double>() < 0.0);

    const auto sim_json = temp_path("sim.json");
    const auto csv = temp_path("sim.csv");
    REQUIRE(call({"simulate", "--scenario", "sec7", "--out", csv.string(), "--json", sim_json.string()}).code == 0);
    const auto s = nlohmann::json::parse(slurp(sim_json));
    REQUIRE(s["scenario"] == "sec7_counterexample");
}

TEST_CASE("config file with flag overrides", "[cli]")
{
    const auto cfg = temp_path("run.json");
    {
        std::ofstream os(cfg);
        os << R"({"scenario": "sec8_example1", "params": {"k": 2}, "dt": 0.01, "tfinal": 1})";
    }
    const cli::RunConfig base = cli::load_config(cfg.string());
    REQUIRE(base.scenario == "sec8_example1");
    REQUIRE(base.params.at("k") == 2.0);
    REQUIRE(*base.dt == 0.01);

    cli::RunConfig merged = base;
    cli::RunConfig flags;
    flags.tfinal = 0.5;
    cli::apply_overrides(merged, flags);
    REQUIRE(*merged.tfinal == 0.5);
    REQUIRE(*merged.dt == 0.01);

    const Result r = call({"simulate", "--config", cfg.string(), "--tfinal", "0.05"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line, last;
    while (std::getline(lines, line)) last = line;
    REQUIRE(last.rfind("0.050000000000000003,", 0) == 0);

    REQUIRE_THROWS_AS(cli::parse_config_text(R"({"scenaro": "sec7"})"), std::invalid_argument);
    REQUIRE_THROWS(cli::parse_config_text("{not json"));
}

TEST_CASE("parse_grid", "[cli]")
{
    const auto g = cli::parse_grid("-2:2:21,0:1:3");
    REQUIRE(g.size() == 2);
    REQUIRE(g[0].min == -2.0);
    REQUIRE(g[0].max == 2.0);
    REQUIRE(g[0].count == 21);
    REQUIRE(g[1].count == 3);
    REQUIRE_THROWS_AS(cli::parse_grid("-2:2:1"), std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_grid("2:-2:5"), std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_grid("a:b:c"), std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_grid("1:2"), std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_grid(""), std::invalid_argument);
}
