#pragma once

#include <span>
#include <string>
#include <vector>

#include "fpk/net.hpp"
#include "fpk/problems.hpp"
#include "fpk/reference.hpp"

namespace fpk {

// Maximum absolute error max_i |pred_i - ref_i|.
double mae(std::span<const double> pred, std::span<const double> ref);

// Mean squared error (1/N) sum_i (pred_i - ref_i)^2.
double mse(std::span<const double> pred, std::span<const double> ref);

struct MetricsRecord {
    double mae = 0.0;
    double mean_pde_residual = 0.0;
    double mse = 0.0;
    std::string variant;
    std::string problem;
    std::uint64_t seed = 0;
    double wall_time_seconds = 0.0;
};

struct GridSpec {
    int n_space = 201;       // nodes per spatial axis
    int n_time = 101;        // time nodes (t0..t1 inclusive)
};

// Tensor evaluation grid with per-point predictions and reference values,
// time-major: values[t * n_space_total + i].
struct GridEval {
    std::vector<std::vector<double>> space_grid;  // row-major d-vectors
    std::vector<double> time_grid;
    std::vector<double> predicted;
    std::vector<double> reference;
    std::vector<std::uint8_t> interior;  // 1 where the spatial point is interior
};

// Evaluates the network and the reference on the grid and computes the
// metrics. The mean PDE residual uses the spatial-interior grid points.
std::pair<GridEval, MetricsRecord> evaluate_run(const MlpParams& params,
                                                const FpkProblem& problem,
                                                const GridSpec& grid,
                                                const ReferenceOptions& ref_options,
                                                std::uint64_t ref_seed,
                                                const std::vector<double>* reference_override = nullptr);

// Recomputes MAE/MSE against the hard-normalized prediction
// p* = p_hat - mean(p_hat) + C_T/M(Q), mean over the evaluation grid.
MetricsRecord hard_normalized_metrics(const GridEval& grid, const FpkProblem& problem,
                                      const MetricsRecord& raw);

// Persists run artifacts:
//   <dir>/metrics.json           metrics (raw + hard-normalized) + config echo
//   <dir>/grid.csv               x[,y],t,pred,ref,abs_err
//   <dir>/residual_history.csv   outer-iteration mean PDE residuals
//   <dir>/config.json            full configuration echo
// File contents are byte-stable for identical runs.
void export_run(const std::string& dir, const GridEval& grid, const MetricsRecord& metrics,
                const MetricsRecord& normalized_metrics,
                const std::vector<double>& residual_history,
                const std::string& config_json);

}  // namespace fpk
