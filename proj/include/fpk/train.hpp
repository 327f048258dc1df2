#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpk/loss.hpp"
#include "fpk/net.hpp"
#include "fpk/problems.hpp"
#include "fpk/sampling.hpp"

namespace fpk {

// Model variants compared in the experiments. pinn/n-pinn/s-pinn train on a
// fixed (budget-augmented) base set; d-pinn/dsn-pinn run the adaptive
// resampling loop. Normalization is active every round for n-pinn and only
// in the pretraining round (k = 0) for dsn-pinn.
enum class Variant { pinn, n_pinn, s_pinn, d_pinn, dsn_pinn };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

bool variant_resamples(Variant v);
bool variant_self_adaptive(Variant v);

// First/second-moment accumulators for Adam over a list of parameter arrays.
struct AdamState {
    std::vector<std::vector<double>> m, v;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState like(const MlpParams& params);
    static AdamState flat(std::size_t n);
};

// One bias-corrected Adam update over a list of shape-congruent arrays.
// A non-finite gradient rejects the step: values and state stay unchanged.
void adam_step(AdamState& state, std::vector<double*> values,
               std::vector<const double*> grads, std::vector<std::size_t> sizes,
               double learning_rate);
void adam_step(AdamState& state, MlpParams& params, const ParamGrad& grads,
               double learning_rate);

struct TrainConfig {
    int epochs_per_round = 5000;
    double lr = 0.005;
    double epsilon = 5e-5;   // residual-improvement threshold
    int n_max = 5;           // iteration cap
    int n_adap = 3;          // accepted-improvement cap
    double beta = 0.5;       // mixture ratio
    double normalization_mu = 1.0;
    Mask mask = Mask::identity;
    Variant variant = Variant::dsn_pinn;
    std::uint64_t seed = 1;

    // sampling
    int n_per_slice = 50;
    int time_slices = 40;
    int n_boundary = 80;
    int n_initial = 160;
    int candidate_factor = 10;
    int snapshot_factor = 4;

    // Budget multiplier for non-resampling baselines: the base set is
    // enlarged by this fraction of extra points per slice. Negative means
    // the default n_adap * beta.
    double augment_factor = -1.0;

    // network hidden layer widths
    std::vector<int> hidden = {20, 20, 20};

    void validate() const;
};

// Mean absolute PDE residual over the residual points, fixed order.
double mean_pde_residual(const MlpParams& params, const FpkProblem& problem,
                         const PointSet& points);

// Runs `epochs` full-batch Adam steps minimizing the composite loss (and
// ascending on the pointwise weights when `adaptive_lambda`). Returns the
// per-epoch total loss history. A numeric failure aborts the remaining
// epochs; parameters keep their last finite state.
std::vector<double> train_rounds(MlpParams& params, const FpkProblem& problem,
                                 const PointSet& points, const TrainConfig& cfg,
                                 int epochs, bool normalization_on, bool adaptive_lambda,
                                 LossWeights& weights, AdamState& opt_params,
                                 AdamState& opt_lambda);

// Control-flow core of the adaptive resampling loop, factored out so that
// its accept/reject/counter semantics can be exercised with scripted
// residual sequences.
struct LoopStep {
    int k = 0;
    double residual = 0.0;
    bool accepted = false;
    int s_after = 0;
};
struct LoopTrace {
    std::vector<LoopStep> steps;
    int final_k = 0;
    int final_s = 0;
};
LoopTrace run_adaptive_loop(int n_max, int n_adap, double epsilon,
                            const std::function<double(int)>& train_and_residual,
                            const std::function<void(int)>& on_accept);

struct DsnResult {
    MlpParams best_params;
    PointSet final_points;
    std::vector<double> residual_history;  // R per outer iteration
    std::vector<double> loss_history;      // per epoch, concatenated
    int iterations = 0;                    // final k
    int accepts = 0;                       // final s (number of rebuilds)
};

// Full DSN-PINN driver: pretraining with normalization, iterative
// weighted-KDE resampling with the mixture strategy, best-model
// checkpointing. Baseline variants run the same loop with resampling (and
// optionally normalization / self-adaptive weights) switched off.
DsnResult dsn_loop(const FpkProblem& problem, const TrainConfig& cfg);

}  // namespace fpk
