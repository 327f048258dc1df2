#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpk/config.hpp"
#include "fpk/errors.hpp"
#include "fpk/train.hpp"

namespace fs = std::filesystem;

namespace {

std::string default_run_name(const fpk::RunConfig& cfg) {
    return cfg.problem + "_" + fpk::variant_to_string(cfg.train.variant) + "_seed" +
           std::to_string(cfg.train.seed);
}

std::string run_dir_for(const fpk::RunConfig& cfg, const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    return (fs::path("runs") / default_run_name(cfg)).string();
}

// Builds the evaluation grid axes exactly like evaluate_run does, so a
// simulated reference file lines up row-for-row with a later training run.
void build_grids(const fpk::FpkProblem& problem, const fpk::GridSpec& grid,
                 std::vector<std::vector<double>>& space_grid,
                 std::vector<double>& time_grid) {
    const int d = problem.dim;
    std::vector<int> idx(d, 0);
    long total = 1;
    for (int i = 0; i < d; ++i) total *= grid.n_space;
    space_grid.clear();
    space_grid.reserve(total);
    for (long c = 0; c < total; ++c) {
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i)
            x[i] = problem.space_box[i][0] +
                   (problem.space_box[i][1] - problem.space_box[i][0]) * idx[i] /
                       (grid.n_space - 1);
        space_grid.push_back(std::move(x));
        for (int i = 0; i < d; ++i) {
            if (++idx[i] < grid.n_space) break;
            idx[i] = 0;
        }
    }
    time_grid.resize(grid.n_time);
    for (int t = 0; t < grid.n_time; ++t)
        time_grid[t] =
            problem.t0 + (problem.t1 - problem.t0) * t / (grid.n_time - 1);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_reference_csv(const std::string& path, const fpk::FpkProblem& problem,
                         const std::vector<std::vector<double>>& space_grid,
                         const std::vector<double>& time_grid,
                         const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (problem.dim == 1 ? "x,t,ref\n" : "x,y,t,ref\n");
    for (std::size_t ti = 0; ti < time_grid.size(); ++ti)
        for (std::size_t i = 0; i < space_grid.size(); ++i) {
            for (double c : space_grid[i]) out << fmt(c) << ',';
            out << fmt(time_grid[ti]) << ','
                << fmt(values[ti * space_grid.size() + i]) << '\n';
        }
}

std::vector<double> read_reference_csv(const std::string& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fpk::ConfigError("reference.file: cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    values.reserve(expected);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find_last_of(',');
        if (comma == std::string::npos)
            throw fpk::ConfigError("reference.file: malformed row in " + path);
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (values.size() != expected)
        throw fpk::ConfigError("reference.file: " + path + " has " +
                               std::to_string(values.size()) + " rows, expected " +
                               std::to_string(expected));
    return values;
}

int cmd_train(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_flag) {
    fpk::RunConfig cfg = fpk::load_config(config_path);
    if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    const fpk::FpkProblem problem = cfg.make_problem();
    const std::string dir = run_dir_for(cfg, out_flag);

    const auto t_start = std::chrono::steady_clock::now();
    fpk::DsnResult result = fpk::dsn_loop(problem, cfg.train);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    std::vector<double> override_values;
    const std::vector<double>* override_ptr = nullptr;
    if (cfg.reference_file) {
        std::size_t n_space = 1;
        for (int i = 0; i < problem.dim; ++i) n_space *= cfg.grid.n_space;
        override_values =
            read_reference_csv(*cfg.reference_file, n_space * cfg.grid.n_time);
        override_ptr = &override_values;
    }
    auto [grid_eval, metrics] =
        fpk::evaluate_run(result.best_params, problem, cfg.grid, cfg.reference,
                          fpk::derive_seed(cfg.train.seed, 900000), override_ptr);
    metrics.variant = fpk::variant_to_string(cfg.train.variant);
    metrics.seed = cfg.train.seed;
    metrics.wall_time_seconds = wall;
    fpk::MetricsRecord normalized =
        fpk::hard_normalized_metrics(grid_eval, problem, metrics);

    nlohmann::ordered_json config_echo;
    config_echo["problem"] = cfg.problem;
    config_echo["variant"] = fpk::variant_to_string(cfg.train.variant);
    config_echo["seed"] = cfg.train.seed;
    config_echo["text"] = cfg.to_text();
    fpk::export_run(dir, grid_eval, metrics, normalized, result.residual_history,
                    config_echo.dump(2));

    std::cout << "run: " << dir << "\n"
              << "variant: " << metrics.variant << "  seed: " << metrics.seed << "\n"
              << "MAE: " << metrics.mae << "  R_PDE: " << metrics.mean_pde_residual
              << "  MSE: " << metrics.mse << "\n"
              << "iterations: " << result.iterations << "  accepts: " << result.accepts
              << "  wall: " << wall << " s" << std::endl;
    return 0;
}

int cmd_simulate(const std::string& config_path, std::int64_t seed_override,
                 const std::string& out_flag) {
    fpk::RunConfig cfg = fpk::load_config(config_path);
    if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    const fpk::FpkProblem problem = cfg.make_problem();
    if (cfg.reference.scheme == "milstein" && problem.dim != 1)
        throw fpk::ConfigError("reference.scheme: milstein is 1-d only");
    const std::string dir = run_dir_for(cfg, out_flag);

    std::vector<std::vector<double>> space_grid;
    std::vector<double> time_grid;
    build_grids(problem, cfg.grid, space_grid, time_grid);
    const auto values =
        fpk::reference_grid(problem, space_grid, time_grid, cfg.reference,
                            fpk::derive_seed(cfg.train.seed, 900000));

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
    write_reference_csv((fs::path(dir) / "reference.csv").string(), problem, space_grid,
                        time_grid, values);
    std::ofstream((fs::path(dir) / "config.txt").string(), std::ios::binary)
        << cfg.to_text();
    std::cout << "reference grid: " << (fs::path(dir) / "reference.csv").string()
              << " (" << values.size() << " rows)" << std::endl;
    return 0;
}

int cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_flag) {
    if (run_dirs.size() < 2)
        throw fpk::ConfigError("compare: need at least 2 run directories");
    struct Row {
        std::string variant;
        double mae, r_pde, mse;
    };
    std::string problem;
    std::vector<Row> rows;
    for (const auto& dir : run_dirs) {
        // accept either a run directory or a metrics.json path
        fs::path path(dir);
        if (fs::is_directory(path)) path /= "metrics.json";
        std::ifstream in(path, std::ios::binary);
        if (!in) throw fpk::ConfigError("compare: cannot read " + path.string());
        nlohmann::json j;
        in >> j;
        const auto& m = j.at("metrics");
        const std::string prob = m.at("problem").get<std::string>();
        if (problem.empty()) problem = prob;
        else if (problem != prob)
            throw fpk::ConfigError("compare: mixed problems (" + problem + " vs " +
                                   prob + ")");
        rows.push_back({m.at("variant").get<std::string>(), m.at("mae").get<double>(),
                        m.at("mean_pde_residual").get<double>(),
                        m.at("mse").get<double>()});
    }
    std::ostringstream csv;
    csv << "variant,mae,r_pde,mse\n";
    std::printf("%-10s %12s %12s %12s\n", "variant", "MAE", "R_PDE", "MSE");
    for (const auto& r : rows) {
        std::printf("%-10s %12.6g %12.6g %12.6g\n", r.variant.c_str(), r.mae, r.r_pde,
                    r.mse);
        csv << r.variant << ',' << fmt(r.mae) << ',' << fmt(r.r_pde) << ','
            << fmt(r.mse) << '\n';
    }
    const std::string out_path = out_flag.empty() ? "comparison.csv" : out_flag;
    std::ofstream(out_path, std::ios::binary) << csv.str();
    std::cout << "table: " << out_path << std::endl;
    return 0;
}

int cmd_presets_list(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw fpk::ConfigError("presets: no such directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".toml") names.push_back(entry.path().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) std::cout << n << "\n";
    return 0;
}

// Fans the configs out as child processes (`jobs` concurrent re-invocations
// of this binary), collecting the worst exit code.
int fan_out(const char* argv0, const std::string& subcommand,
            const std::vector<std::string>& configs, std::int64_t seed_override,
            int jobs) {
    int worst = 0;
    std::size_t next = 0;
    int running = 0;
    while (next < configs.size() || running > 0) {
        while (running < jobs && next < configs.size()) {
            std::vector<std::string> args = {argv0, subcommand, "--config",
                                             configs[next]};
            if (seed_override >= 0) {
                args.push_back("--seed");
                args.push_back(std::to_string(seed_override));
            }
            const pid_t pid = fork();
            if (pid == 0) {
                std::vector<char*> argv;
                for (auto& a : args) argv.push_back(a.data());
                argv.push_back(nullptr);
                execv(argv0, argv.data());
                std::perror("execv");
                _exit(127);
            }
            if (pid < 0) throw std::runtime_error("fork failed");
            ++running;
            ++next;
        }
        int status = 0;
        if (wait(&status) > 0) {
            --running;
            const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
            worst = std::max(worst, code);
        }
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fokker-Planck density solver: adaptive-resampling PINN experiments"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::int64_t seed_override = -1;
    std::string out_flag;
    int jobs = 1;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", configs, "config file path(s)");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_option("--out", out_flag, "output directory / file");
        sub->add_option("--jobs", jobs, "concurrent child processes")
            ->check(CLI::PositiveNumber);
    };

    auto* train = app.add_subcommand("train", "train a model and export the run");
    add_common(train, true);
    auto* simulate =
        app.add_subcommand("simulate", "export a Monte Carlo / exact reference grid");
    add_common(simulate, true);

    auto* compare = app.add_subcommand("compare", "tabulate metrics across runs");
    std::vector<std::string> run_dirs;
    compare->add_option("runs", run_dirs, "completed run directories")->required();
    compare->add_option("--out", out_flag, "CSV output path");

    auto* presets = app.add_subcommand("presets", "preset utilities");
    auto* presets_list = presets->add_subcommand("list", "list shipped preset files");
    std::string presets_dir = "presets";
    presets_list->add_option("--dir", presets_dir, "preset directory");
    presets->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            if (configs.size() > 1 || jobs > 1)
                return fan_out(argv[0], "train", configs, seed_override, jobs);
            return cmd_train(configs[0], seed_override, out_flag);
        }
        if (simulate->parsed()) {
            if (configs.size() > 1 || jobs > 1)
                return fan_out(argv[0], "simulate", configs, seed_override, jobs);
            return cmd_simulate(configs[0], seed_override, out_flag);
        }
        if (compare->parsed()) return cmd_compare(run_dirs, out_flag);
        if (presets->parsed()) return cmd_presets_list(presets_dir);
    } catch (const fpk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const fpk::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
