// knobkit command-line front end. Every subcommand maps onto one library
// operation, takes all randomness from explicit --seed flags, and writes its
// artifacts under --out, so pipelines can be rebuilt file by file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "knobkit/knobkit.hpp"

namespace fs = std::filesystem;
using namespace knobkit;

namespace {

std::string one_line(std::string text) {
    for (auto& c : text)
        if (c == '\n' || c == '\r') c = ' ';
    return text;
}

ConfigSpace load_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return parse_space(doc);
}

Sense parse_sense_flag(const std::string& s) { return sense_from_string(s); }

TrainingSet load_tables(const ConfigSpace& space, const std::vector<std::string>& paths,
                        Sense sense, bool log_y = false) {
    std::vector<CsvTable> tables;
    for (const auto& p : paths) tables.push_back(read_csv_file(p));
    return assemble_dataset(space, tables, sense, log_y);
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_config_table(const fs::path& path, const ConfigSpace& space,
                        const std::vector<Configuration>& configs) {
    CsvTable t;
    for (const auto& k : space.knobs()) t.header.push_back(k.name);
    for (const auto& c : configs) {
        std::vector<std::string> row;
        for (std::size_t d = 0; d < space.size(); ++d) {
            const auto& v = c.values[d];
            if (std::holds_alternative<double>(v))
                row.push_back(format_double(std::get<double>(v)));
            else if (std::holds_alternative<std::int64_t>(v))
                row.push_back(std::to_string(std::get<std::int64_t>(v)));
            else
                row.push_back(std::get<std::string>(v));
        }
        t.rows.push_back(std::move(row));
    }
    write_csv_file(path.string(), t);
}

int cmd_space_validate(const std::string& space_path) {
    const auto space = load_space(space_path);
    std::cout << "ok: '" << space.name() << "' with " << space.size() << " knobs\n";
    return 0;
}

int cmd_sample(const std::string& space_path, std::size_t n, std::uint64_t seed,
               const std::string& method, const std::string& out) {
    const auto space = load_space(space_path);
    std::vector<Configuration> configs;
    if (method == "lhs")
        configs = lhs_sample(space, n, seed);
    else if (method == "random")
        configs = random_sample(space, n, seed);
    else
        throw ValidationError("sample: unknown method '" + method + "' (expected lhs or random)");
    const auto path = ensure_out_dir(out) / "samples.csv";
    write_config_table(path, space, configs);
    std::cout << "samples=" << path.string() << "\n";
    return 0;
}

int cmd_select_knobs(const std::string& space_path, const std::vector<std::string>& data_paths,
                     const std::string& method, std::size_t k, const std::string& sense,
                     std::uint64_t seed, const std::string& out) {
    const auto space = load_space(space_path);
    const auto data = load_tables(space, data_paths, parse_sense_flag(sense));
    const auto report = compute_importance(method, data, seed);
    const auto top = topk(report, k);

    auto doc = report.to_json();
    doc["k"] = k;
    doc["top"] = top;
    const auto path = ensure_out_dir(out) / "importance.json";
    std::ofstream file(path);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    file << doc.dump(2) << '\n';
    for (const auto& name : top) std::cout << name << "\n";
    return 0;
}

int cmd_tune(const std::string& space_path, const std::string& optimizer,
             const std::string& objective_cmd, std::size_t budget, std::uint64_t seed,
             const std::string& sense, std::size_t n_init, std::optional<double> gamma,
             double timeout_seconds, const std::string& out) {
    const auto space = load_space(space_path);
    TuningSession session(space, optimizer_kind_from_string(optimizer), parse_sense_flag(sense),
                          budget, seed, n_init);
    if (gamma) session.set_tpe_gamma(*gamma);
    const ExternalCommand cmd{objective_cmd, timeout_seconds};
    for (std::size_t t = 0; t < budget; ++t) {
        const Configuration config = session.suggest();
        const ExternalResult result = external_objective(cmd, space, config);
        session.observe(config, result.value, result.status);
        if (result.status == EvalStatus::failed)
            std::cerr << "note: evaluation " << t << " failed: " << one_line(result.diagnostic)
                      << "\n";
    }

    const auto path = ensure_out_dir(out) /
                      (optimizer + "_seed" + std::to_string(seed) + ".csv");
    std::ofstream file(path);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    session.write_trajectory(file);
    if (session.history().ok_count() == 0)
        throw ValidationError("tune: every evaluation failed; see '" + path.string() + "'");
    const double value = best_so_far(session.history()).second;
    std::cout << "best_value=" << format_double(value) << " trajectory=" << path.string() << "\n";
    return 0;
}

int cmd_bench_build(const std::string& space_path, const std::vector<std::string>& data_paths,
                    const std::string& sense, std::uint64_t seed, std::string description,
                    bool log_transform, const std::string& out) {
    const auto space = load_space(space_path);
    const auto data = load_tables(space, data_paths, parse_sense_flag(sense), log_transform);
    if (log_transform)
        description += description.empty() ? "log-transformed objective"
                                           : "; log-transformed objective";
    const auto bench = build_benchmark(data, seed, description);
    const auto path = ensure_out_dir(out) / "benchmark.json";
    save_benchmark(path, bench);
    std::cout << "benchmark=" << path.string()
              << " cv_winner=" << bench.provenance.at("cv_winner").get<std::string>() << "\n";
    return 0;
}

int cmd_bench_run(const std::string& plan_path, std::size_t jobs,
                  const std::string& out_override) {
    auto plan = load_plan(plan_path);
    if (!out_override.empty()) plan.out_dir = out_override;
    fs::path bench_path(plan.benchmark_path);
    if (bench_path.is_relative()) bench_path = fs::path(plan_path).parent_path() / bench_path;
    const auto bench = load_benchmark(bench_path);
    const auto results = run_experiment(bench, plan, jobs);
    write_report(bench, results, plan.out_dir);
    std::cout << "summary=" << (fs::path(plan.out_dir) / "summary.json").string() << "\n";
    return 0;
}

std::vector<SessionResult> scan_trajectories(const TuningBenchmark& bench, const fs::path& runs) {
    if (!fs::is_directory(runs)) throw IoError("report: '" + runs.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<SessionResult> results;
    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        const auto at = stem.rfind("_seed");
        if (at == std::string::npos) continue;
        SessionResult r;
        try {
            r.optimizer = optimizer_kind_from_string(stem.substr(0, at));
            r.seed = std::stoull(stem.substr(at + 5));
        } catch (const std::exception&) {
            continue;  // unrelated csv file
        }
        const auto table = read_csv_file(path.string());
        const auto best_col = table.column("best_so_far");
        for (const auto& row : table.rows) r.best_curve.push_back(parse_double(row[best_col]));
        if (r.best_curve.empty())
            throw ValidationError("report: empty trajectory '" + path.string() + "'");
        r.best_value = r.best_curve.back();
        r.trajectory_path = path.string();
        results.push_back(std::move(r));
    }
    if (results.empty())
        throw ValidationError("report: no trajectory files in '" + runs.string() + "'");
    return results;
}

int cmd_report(const std::string& bench_path, const std::string& runs, const std::string& out) {
    const auto bench = load_benchmark(bench_path);
    const auto results = scan_trajectories(bench, runs);
    write_report(bench, results, out);
    std::cout << "summary=" << (fs::path(out) / "summary.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Configuration-tuning toolkit for knob spaces"};
    app.require_subcommand(1);

    std::string space_path, out, method, sense = "minimize", optimizer, objective_cmd;
    std::string plan_path, bench_path, runs_dir, description;
    std::vector<std::string> data_paths;
    std::size_t n = 0, k = 0, budget = 0, n_init = 10, jobs = 1;
    std::uint64_t seed = 0;
    std::optional<double> gamma;
    double timeout_seconds = 60.0;
    bool log_transform = false;

    auto* validate = app.add_subcommand("space-validate", "Check a space definition file");
    validate->add_option("--space", space_path, "Space JSON file")->required();

    auto* sample = app.add_subcommand("sample", "Draw configurations from a space");
    sample->add_option("--space", space_path, "Space JSON file")->required();
    sample->add_option("--n", n, "Number of configurations")->required();
    sample->add_option("--seed", seed, "Random seed")->required();
    sample->add_option("--method", method, "lhs or random")->default_val("lhs");
    sample->add_option("--out", out, "Output directory")->required();

    auto* select = app.add_subcommand("select-knobs", "Rank knobs by importance");
    select->add_option("--space", space_path, "Space JSON file")->required();
    select->add_option("--data", data_paths, "Observation CSV files")->required();
    select->add_option("--method", method, "gini, lasso, fanova, ablation or shap")->required();
    select->add_option("--k", k, "How many knobs to keep")->required();
    select->add_option("--sense", sense, "minimize or maximize")->default_val("minimize");
    select->add_option("--seed", seed, "Random seed")->default_val(0);
    select->add_option("--out", out, "Output directory")->required();

    auto* tune = app.add_subcommand("tune", "Optimize an external objective command");
    tune->add_option("--space", space_path, "Space JSON file")->required();
    tune->add_option("--optimizer", optimizer, "Optimizer name")->required();
    tune->add_option("--objective-cmd", objective_cmd,
                     "Shell command with {config_path} placeholder; its last stdout line is the "
                     "objective value")
        ->required();
    tune->add_option("--budget", budget, "Evaluation budget")->required();
    tune->add_option("--seed", seed, "Random seed")->required();
    tune->add_option("--sense", sense, "minimize or maximize")->default_val("minimize");
    tune->add_option("--n-init", n_init, "Initial design size")->default_val(10);
    tune->add_option("--gamma", gamma, "Quantile split for the density-ratio optimizer");
    tune->add_option("--timeout-seconds", timeout_seconds, "Per-evaluation timeout")
        ->default_val(60.0);
    tune->add_option("--out", out, "Output directory")->required();

    auto* build = app.add_subcommand("bench-build", "Package observations into a benchmark");
    build->add_option("--space", space_path, "Space JSON file")->required();
    build->add_option("--data", data_paths, "Observation CSV files")->required();
    build->add_option("--sense", sense, "minimize or maximize")->default_val("minimize");
    build->add_option("--seed", seed, "Random seed")->required();
    build->add_option("--description", description, "Provenance note")->default_val("");
    build->add_flag("--log-transform", log_transform,
                    "Fit the surrogate to log values (objective must be positive)");
    build->add_option("--out", out, "Output directory")->required();

    auto* run = app.add_subcommand("bench-run", "Run an experiment plan against a benchmark");
    run->add_option("--plan", plan_path, "Plan JSON file")->required();
    run->add_option("--jobs", jobs, "Parallel sessions")->default_val(1);
    run->add_option("--out", out, "Override the plan's output directory")->default_val("");

    auto* report = app.add_subcommand("report", "Summarize trajectories already on disk");
    report->add_option("--benchmark", bench_path, "Benchmark JSON file")->required();
    report->add_option("--runs", runs_dir, "Directory of trajectory CSV files")->required();
    report->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (*validate) return cmd_space_validate(space_path);
        if (*sample) return cmd_sample(space_path, n, seed, method, out);
        if (*select)
            return cmd_select_knobs(space_path, data_paths, method, k, sense, seed, out);
        if (*tune)
            return cmd_tune(space_path, optimizer, objective_cmd, budget, seed, sense, n_init,
                            gamma, timeout_seconds, out);
        if (*build)
            return cmd_bench_build(space_path, data_paths, sense, seed, description,
                                   log_transform, out);
        if (*run) return cmd_bench_run(plan_path, jobs, out);
        if (*report) return cmd_report(bench_path, runs_dir, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 2;
}
