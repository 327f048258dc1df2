#include "fpk/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fpk/errors.hpp"
#include "fpk/loss.hpp"

namespace fpk {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> ref) {
    if (pred.empty() || pred.size() != ref.size())
        throw ShapeError("mae: empty or mismatched inputs");
    double worst = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        worst = std::max(worst, std::fabs(pred[i] - ref[i]));
    return worst;
}

double mse(std::span<const double> pred, std::span<const double> ref) {
    if (pred.empty() || pred.size() != ref.size())
        throw ShapeError("mse: empty or mismatched inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double z = pred[i] - ref[i];
        acc += z * z;
    }
    return acc / static_cast<double>(pred.size());
}

std::pair<GridEval, MetricsRecord> evaluate_run(const MlpParams& params,
                                                const FpkProblem& problem,
                                                const GridSpec& grid,
                                                const ReferenceOptions& ref_options,
                                                std::uint64_t ref_seed,
                                                const std::vector<double>* reference_override) {
    const int d = problem.dim;
    GridEval eval;

    // tensor spatial grid, n_space nodes per axis
    {
        std::vector<int> idx(d, 0);
        long total = 1;
        for (int i = 0; i < d; ++i) total *= grid.n_space;
        eval.space_grid.reserve(total);
        eval.interior.reserve(total);
        for (long c = 0; c < total; ++c) {
            std::vector<double> x(d);
            bool interior = true;
            for (int i = 0; i < d; ++i) {
                const auto& box = problem.space_box[i];
                x[i] = box[0] + (box[1] - box[0]) * idx[i] / (grid.n_space - 1);
                if (idx[i] == 0 || idx[i] == grid.n_space - 1) interior = false;
            }
            eval.space_grid.push_back(std::move(x));
            eval.interior.push_back(interior ? 1 : 0);
            for (int i = 0; i < d; ++i) {
                if (++idx[i] < grid.n_space) break;
                idx[i] = 0;
            }
        }
    }
    eval.time_grid.resize(grid.n_time);
    for (int t = 0; t < grid.n_time; ++t)
        eval.time_grid[t] =
            problem.t0 + (problem.t1 - problem.t0) * t / (grid.n_time - 1);

    if (reference_override) {
        if (reference_override->size() != eval.space_grid.size() * eval.time_grid.size())
            throw ShapeError("evaluate_run: reference override size mismatch");
        eval.reference = *reference_override;
    } else {
        eval.reference =
            reference_grid(problem, eval.space_grid, eval.time_grid, ref_options, ref_seed);
    }

    // predictions and mean PDE residual in one sweep over the grid
    JetEvaluator jets(params.layer_sizes);
    std::vector<double> coord(d + 1);
    eval.predicted.resize(eval.reference.size());
    double residual_acc = 0.0;
    long residual_count = 0;
    SpacetimePoint sp;
    for (std::size_t ti = 0; ti < eval.time_grid.size(); ++ti) {
        const double t = eval.time_grid[ti];
        sp.t = t;
        for (std::size_t i = 0; i < eval.space_grid.size(); ++i) {
            std::copy(eval.space_grid[i].begin(), eval.space_grid[i].end(), coord.begin());
            coord[d] = t;
            const Jet jet = jets.forward(params, coord);
            eval.predicted[ti * eval.space_grid.size() + i] = jet.value;
            if (eval.interior[i]) {
                sp.x = eval.space_grid[i];
                residual_acc += std::fabs(fpk_residual(problem, jet, sp));
                ++residual_count;
            }
        }
    }

    MetricsRecord rec;
    rec.problem = problem.name;
    rec.mae = mae(eval.predicted, eval.reference);
    rec.mse = mse(eval.predicted, eval.reference);
    rec.mean_pde_residual = residual_acc / static_cast<double>(residual_count);
    return {std::move(eval), std::move(rec)};
}

MetricsRecord hard_normalized_metrics(const GridEval& grid, const FpkProblem& problem,
                                      const MetricsRecord& raw) {
    double p_bar = 0.0;
    for (double v : grid.predicted) p_bar += v;
    p_bar /= static_cast<double>(grid.predicted.size());
    const std::vector<double> adjusted = hard_normalize(grid.predicted, p_bar, problem);
    MetricsRecord rec = raw;
    rec.mae = mae(adjusted, grid.reference);
    rec.mse = mse(adjusted, grid.reference);
    return rec;
}

namespace {

nlohmann::ordered_json metrics_json(const MetricsRecord& rec) {
    nlohmann::ordered_json j;
    j["mae"] = rec.mae;
    j["mean_pde_residual"] = rec.mean_pde_residual;
    j["mse"] = rec.mse;
    j["variant"] = rec.variant;
    j["problem"] = rec.problem;
    j["seed"] = rec.seed;
    j["wall_time_seconds"] = rec.wall_time_seconds;
    return j;
}

}  // namespace

void export_run(const std::string& dir, const GridEval& grid, const MetricsRecord& metrics,
                const MetricsRecord& normalized_metrics,
                const std::vector<double>& residual_history,
                const std::string& config_json) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("export_run: cannot create " + dir + ": " + ec.message());

    const int d = static_cast<int>(grid.space_grid.empty() ? 1 : grid.space_grid[0].size());
    {
        std::ofstream csv(fs::path(dir) / "grid.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("export_run: cannot write grid.csv in " + dir);
        csv << (d == 1 ? "x,t,pred,ref,abs_err\n" : "x,y,t,pred,ref,abs_err\n");
        for (std::size_t ti = 0; ti < grid.time_grid.size(); ++ti) {
            for (std::size_t i = 0; i < grid.space_grid.size(); ++i) {
                const std::size_t row = ti * grid.space_grid.size() + i;
                for (int k = 0; k < d; ++k) csv << format_double(grid.space_grid[i][k]) << ',';
                csv << format_double(grid.time_grid[ti]) << ','
                    << format_double(grid.predicted[row]) << ','
                    << format_double(grid.reference[row]) << ','
                    << format_double(std::fabs(grid.predicted[row] - grid.reference[row]))
                    << '\n';
            }
        }
    }
    {
        std::ofstream csv(fs::path(dir) / "residual_history.csv", std::ios::binary);
        csv << "iteration,mean_pde_residual\n";
        for (std::size_t i = 0; i < residual_history.size(); ++i)
            csv << i << ',' << format_double(residual_history[i]) << '\n';
    }
    {
        nlohmann::ordered_json j;
        j["metrics"] = metrics_json(metrics);
        j["metrics_hard_normalized"] = metrics_json(normalized_metrics);
        j["config"] = nlohmann::ordered_json::parse(config_json);
        std::ofstream out(fs::path(dir) / "metrics.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "config.json", std::ios::binary);
        out << config_json << '\n';
    }
}

}  // namespace fpk
