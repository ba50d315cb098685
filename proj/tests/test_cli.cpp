// Integration tests driving the installed CLI binary end to end. Every case
// runs the real executable through a shell, so flag parsing, exit codes and
// artifact layout are exercised exactly as a user would hit them.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "knobkit/knobkit.hpp"

using namespace knobkit;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr merged

    std::vector<std::string> lines() const {
        std::vector<std::string> out;
        std::istringstream in(output);
        std::string line;
        while (std::getline(in, line)) out.push_back(line);
        return out;
    }
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(KNOBKIT_CLI_PATH) + " " + args + " 2>&1";
    const auto outcome = detail::run_with_timeout(cmd, 300.0);
    REQUIRE(!outcome.timed_out);
    return {outcome.exit_code, outcome.stdout_text};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("knobkit_cli_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ConfigSpace demo_space() {
    return ConfigSpace("demo", {KnobSpec::make_continuous("cache_mb", 0.0, 1.0, 0.5),
                                KnobSpec::make_integer("threads", 1, 8, 4),
                                KnobSpec::make_categorical("policy", {"lru", "fifo", "arc"},
                                                           "lru")});
}

fs::path write_space(const TempDir& dir, const ConfigSpace& space) {
    const auto path = dir.path / "space.json";
    std::ofstream out(path);
    out << space_to_json(space).dump(2);
    return path;
}

fs::path write_dataset(const TempDir& dir, const ConfigSpace& space, std::uint64_t seed,
                       std::size_t n = 40) {
    const SyntheticObjective objective(space, seed);
    const auto path = dir.path / ("data" + std::to_string(seed) + ".csv");
    write_csv_file(path.string(), synthetic_dataset(objective, n, seed));
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void check_single_error_line(const CliResult& result) {
    REQUIRE(result.exit_code != 0);
    const auto lines = result.lines();
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("error:", 0) == 0);
}

} // namespace

TEST_CASE("help output enumerates every subcommand and flag") {
    const auto top = run_cli("--help");
    CHECK(top.exit_code == 0);
    for (const char* name : {"space-validate", "sample", "select-knobs", "tune", "bench-build",
                             "bench-run", "report"})
        CHECK(top.output.find(name) != std::string::npos);

    const auto tune = run_cli("tune --help");
    CHECK(tune.exit_code == 0);
    for (const char* flag : {"--space", "--optimizer", "--objective-cmd", "--budget", "--seed",
                             "--sense", "--n-init", "--gamma", "--timeout-seconds", "--out"})
        CHECK(tune.output.find(flag) != std::string::npos);
}

TEST_CASE("usage violations exit nonzero with one error line") {
    check_single_error_line(run_cli("sample --space nowhere.json --n 3 --seed 1 --out /tmp/x "
                                    "--bogus-flag 7"));
    check_single_error_line(run_cli("frobnicate"));
    check_single_error_line(run_cli("tune --space s.json --optimizer smac --seed 1 --out /tmp/x "
                                    "--objective-cmd 'echo 1 {config_path}'"));  // --budget missing
    CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("space-validate accepts a valid space and rejects garbage") {
    TempDir dir("validate");
    const auto space_path = write_space(dir, demo_space());
    const auto good = run_cli("space-validate --space " + space_path.string());
    CHECK(good.exit_code == 0);
    CHECK(good.output.find("3 knobs") != std::string::npos);

    {
        std::ofstream bad(dir.path / "bad.json");
        bad << "{\"knobs\": [{\"name\": \"x\"}]}";
    }
    check_single_error_line(
        run_cli("space-validate --space " + (dir.path / "bad.json").string()));
    check_single_error_line(
        run_cli("space-validate --space " + (dir.path / "missing.json").string()));
}

TEST_CASE("sample is seed-deterministic and method-sensitive") {
    TempDir dir("sample");
    const auto space_path = write_space(dir, demo_space());
    const std::string base = "sample --space " + space_path.string() + " --n 12 --seed 9 ";

    const auto first = run_cli(base + "--out " + (dir.path / "a").string());
    REQUIRE(first.exit_code == 0);
    const auto second = run_cli(base + "--out " + (dir.path / "b").string());
    REQUIRE(second.exit_code == 0);
    const auto lhs_text = slurp(dir.path / "a" / "samples.csv");
    CHECK(lhs_text == slurp(dir.path / "b" / "samples.csv"));

    const auto table = read_csv_text(lhs_text);
    CHECK(table.header == std::vector<std::string>{"cache_mb", "threads", "policy"});
    REQUIRE(table.rows.size() == 12);

    const auto random = run_cli(base + "--method random --out " + (dir.path / "c").string());
    REQUIRE(random.exit_code == 0);
    CHECK(slurp(dir.path / "c" / "samples.csv") != lhs_text);

    check_single_error_line(
        run_cli(base + "--method sobol --out " + (dir.path / "d").string()));
}

TEST_CASE("select-knobs writes a report and prints the chosen knobs") {
    TempDir dir("select");
    const auto space = demo_space();
    const auto space_path = write_space(dir, space);
    const auto data_path = write_dataset(dir, space, 11);

    const auto result = run_cli("select-knobs --space " + space_path.string() + " --data " +
                                data_path.string() +
                                " --method gini --k 2 --seed 4 --out " + dir.path.string());
    REQUIRE(result.exit_code == 0);
    const auto lines = result.lines();
    REQUIRE(lines.size() == 2);

    const auto doc = nlohmann::json::parse(slurp(dir.path / "importance.json"));
    CHECK(doc.at("method").get<std::string>() == "gini");
    CHECK(doc.at("k").get<std::size_t>() == 2);
    REQUIRE(doc.at("top").size() == 2);
    CHECK(doc.at("top")[0].get<std::string>() == lines[0]);
    CHECK(doc.at("top")[1].get<std::string>() == lines[1]);
    CHECK(doc.at("ranking").size() == space.size());

    check_single_error_line(run_cli("select-knobs --space " + space_path.string() + " --data " +
                                    data_path.string() +
                                    " --method entropy --k 2 --out " + dir.path.string()));
    check_single_error_line(run_cli("select-knobs --space " + space_path.string() + " --data " +
                                    data_path.string() +
                                    " --method gini --k 9 --out " + dir.path.string()));
}

TEST_CASE("tune drives an external command and writes its trajectory") {
    TempDir dir("tune");
    const auto space_path = write_space(dir, demo_space());
    const std::string base = "tune --space " + space_path.string() +
                             " --optimizer tpe --objective-cmd 'wc -c < {config_path}'"
                             " --budget 12 --seed 5 --gamma 0.3 ";

    const auto first = run_cli(base + "--out " + (dir.path / "a").string());
    REQUIRE(first.exit_code == 0);
    const auto lines = first.lines();
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("best_value=", 0) == 0);

    const auto traj = dir.path / "a" / "tpe_seed5.csv";
    REQUIRE(fs::exists(traj));
    const auto table = read_csv_text(slurp(traj));
    CHECK(table.rows.size() == 12);
    CHECK(table.has_column("best_so_far"));

    const auto second = run_cli(base + "--out " + (dir.path / "b").string());
    REQUIRE(second.exit_code == 0);
    CHECK(slurp(dir.path / "b" / "tpe_seed5.csv") == slurp(traj));

    SECTION("an always-failing objective is an error after the run") {
        const auto failed = run_cli(
            "tune --space " + space_path.string() +
            " --optimizer random_search --objective-cmd 'cat {config_path} >/dev/null; exit 1'"
            " --budget 3 --n-init 1 --seed 2 --out " +
            (dir.path / "f").string());
        REQUIRE(failed.exit_code == 1);
        const auto fail_lines = failed.lines();
        CHECK(fail_lines.back().rfind("error:", 0) == 0);
        CHECK(fs::exists(dir.path / "f" / "random_search_seed2.csv"));
    }
}

TEST_CASE("bench pipeline: build, run, report") {
    TempDir dir("bench");
    const auto space = demo_space();
    const auto space_path = write_space(dir, space);
    const auto d1 = write_dataset(dir, space, 21);
    const auto d2 = write_dataset(dir, space, 22);

    const auto build = run_cli("bench-build --space " + space_path.string() + " --data " +
                               d1.string() + " --data " + d2.string() +
                               " --seed 6 --description smoke --out " + dir.path.string());
    REQUIRE(build.exit_code == 0);
    CHECK(build.output.find("cv_winner=") != std::string::npos);
    const auto bench = load_benchmark(dir.path / "benchmark.json");
    CHECK(bench.provenance.at("description").get<std::string>() == "smoke");
    CHECK(bench.provenance.at("cv").size() == 3);

    ExperimentPlan plan;
    plan.benchmark_path = "benchmark.json";  // relative to the plan file
    plan.optimizers = {OptimizerKind::random_search, OptimizerKind::ga};
    plan.budget = 12;
    plan.seeds = {1, 2};
    plan.out_dir = (dir.path / "runs").string();
    {
        std::ofstream out(dir.path / "plan.json");
        out << plan.to_json().dump(2);
    }

    const auto run = run_cli("bench-run --plan " + (dir.path / "plan.json").string());
    REQUIRE(run.exit_code == 0);
    for (const char* name : {"random_search_seed1.csv", "random_search_seed2.csv",
                             "ga_seed1.csv", "ga_seed2.csv", "summary.json", "curves.csv"})
        CHECK(fs::exists(dir.path / "runs" / name));

    SECTION("parallel rerun produces the identical summary") {
        const auto parallel = run_cli("bench-run --plan " + (dir.path / "plan.json").string() +
                                      " --jobs 2 --out " + (dir.path / "runs2").string());
        REQUIRE(parallel.exit_code == 0);
        CHECK(slurp(dir.path / "runs2" / "summary.json") ==
              slurp(dir.path / "runs" / "summary.json"));
        CHECK(slurp(dir.path / "runs2" / "curves.csv") ==
              slurp(dir.path / "runs" / "curves.csv"));
        CHECK(slurp(dir.path / "runs2" / "ga_seed2.csv") ==
              slurp(dir.path / "runs" / "ga_seed2.csv"));
    }

    SECTION("report rebuilds the summary from trajectories alone") {
        const auto report = run_cli("report --benchmark " +
                                    (dir.path / "benchmark.json").string() + " --runs " +
                                    (dir.path / "runs").string() + " --out " +
                                    (dir.path / "rebuilt").string());
        REQUIRE(report.exit_code == 0);

        const auto original = nlohmann::json::parse(slurp(dir.path / "runs" / "summary.json"));
        const auto rebuilt = nlohmann::json::parse(slurp(dir.path / "rebuilt" / "summary.json"));
        CHECK(rebuilt.at("default_value") == original.at("default_value"));
        REQUIRE(rebuilt.at("optimizers").size() == original.at("optimizers").size());
        for (const auto& row : original.at("optimizers")) {
            bool found = false;
            for (const auto& other : rebuilt.at("optimizers"))
                if (other.at("optimizer") == row.at("optimizer")) {
                    found = true;
                    CHECK(other.at("best_value") == row.at("best_value"));
                    CHECK(other.at("median_best") == row.at("median_best"));
                    CHECK(other.at("mean_rank") == row.at("mean_rank"));
                    CHECK(other.at("sessions") == row.at("sessions"));
                }
            CHECK(found);
        }

        check_single_error_line(run_cli("report --benchmark " +
                                        (dir.path / "benchmark.json").string() + " --runs " +
                                        (dir.path / "nowhere").string() + " --out " +
                                        (dir.path / "r2").string()));
    }
}
