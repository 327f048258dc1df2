#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpk/net.hpp"
#include "fpk/problems.hpp"
#include "fpk/sampling.hpp"

namespace fpk {

// Self-adaptation mask f applied to the trainable pointwise loss weights.
enum class Mask { identity, sigmoid, sqrt };

Mask mask_from_string(const std::string& name);
std::string mask_to_string(Mask mask);

double mask_apply(Mask mask, double lambda);
double mask_derivative(Mask mask, double lambda);

// Pointwise loss weights lambda per collocation category, the normalization
// coefficient mu, and the mask shaping the weights.
struct LossWeights {
    std::vector<double> lambda_r, lambda_b, lambda_0;
    double mu = 1.0;
    Mask mask = Mask::identity;

    // Plain (unweighted) objective: identity mask, all lambda = 1.
    static LossWeights ones(std::size_t n_r, std::size_t n_b, std::size_t n_0,
                            double mu = 1.0);
    // Self-adaptive initialization: lambda ~ U[0, 1] per point.
    static LossWeights uniform_init(std::size_t n_r, std::size_t n_b, std::size_t n_0,
                                    double mu, Mask mask, std::uint64_t seed);
};

struct LossBreakdown {
    double residual_term = 0.0;
    double boundary_term = 0.0;
    double initial_term = 0.0;
    double normalization_term = 0.0;
    double total = 0.0;
};

// (1/N) sum_i f(lambda_i) r_i^2; the shared kernel of the three data terms.
double weighted_mean_square(std::span<const double> values, std::span<const double> lambda,
                            Mask mask);

double residual_loss(std::span<const double> residuals, const LossWeights& weights);
double boundary_loss(std::span<const double> boundary_errors, const LossWeights& weights);
double initial_loss(std::span<const double> initial_errors, const LossWeights& weights);

// Arithmetic mean of the network output over the union of residual, boundary,
// and initial points, in that fixed order.
double mean_output(const MlpParams& params, const PointSet& points);

// | p_bar - C_T / M(Q) |^2 (the mu factor is applied by total_loss).
double normalization_loss(double p_bar, const FpkProblem& problem);

// Post-processing shift p* = p_hat - p_bar + C_T/M(Q); never used in training.
std::vector<double> hard_normalize(std::span<const double> values, double p_bar,
                                   const FpkProblem& problem);

LossBreakdown total_loss(const MlpParams& params, const FpkProblem& problem,
                         const PointSet& points, const LossWeights& weights,
                         bool normalization_on);

// Gradients of the total loss with respect to the parameters and, when a
// non-identity mask is active, with respect to the pointwise weights.
struct LossGradients {
    ParamGrad params;
    std::vector<double> lambda_r, lambda_b, lambda_0;
};

// Evaluates the loss and its exact gradients in one reverse sweep.
// `gradients` must be shaped for `params` beforehand (zeroed internally).
LossBreakdown total_loss_grad(const MlpParams& params, const FpkProblem& problem,
                              const PointSet& points, const LossWeights& weights,
                              bool normalization_on, LossGradients& gradients);

}  // namespace fpk
