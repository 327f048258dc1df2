#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace fpk {

// Dense Tanh MLP parameters. Input layer has width d+1 (spatial coordinates
// followed by time), output layer has width 1. Weight matrices are stored
// row-major with shape (layer_sizes[k+1] x layer_sizes[k]).
struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    int input_dim() const { return layer_sizes.front(); }
    int spatial_dim() const { return layer_sizes.front() - 1; }
    int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Gradient of a scalar objective with respect to every network parameter;
// shape-congruent with its MlpParams.
struct ParamGrad {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static ParamGrad zeros_like(const MlpParams& params);
    void set_zero();
    void axpy(double alpha, const ParamGrad& other);  // this += alpha * other
    bool all_finite() const;
};

// Network output at a point together with its first derivatives and spatial
// second derivatives. grad is laid out (d/dt, d/dx_1, ..., d/dx_d); hess is
// the spatial Hessian packed as upper triangle (i <= j) in row order.
struct Jet {
    int dim = 0;  // spatial dimension d
    double value = 0.0;
    std::vector<double> grad;   // length d+1
    std::vector<double> hess;   // length d*(d+1)/2, packed upper triangle

    double hess_at(int i, int j) const {
        if (i > j) std::swap(i, j);
        return hess[static_cast<std::size_t>(i) * dim - i * (i + 1) / 2 + j];
    }
};

// Sensitivity of a scalar objective to the components of one Jet. The packed
// hess entry (i < j) carries the combined sensitivity of h_ij and h_ji.
struct JetCotangent {
    double value = 0.0;
    std::vector<double> grad;   // length d+1, may be empty (treated as zero)
    std::vector<double> hess;   // packed like Jet::hess, may be empty
};

// Xavier (Glorot) uniform initialization: weights of layer k drawn from
// U[-r, r] with r = sqrt(6 / (fan_in + fan_out)); biases zero.
MlpParams xavier_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Plain forward pass: affine layers with Tanh on hidden layers, linear output.
double forward(const MlpParams& params, std::span<const double> point);

// Forward pass with exact analytic propagation of the input derivatives.
Jet forward_jet(const MlpParams& params, std::span<const double> point);

// Reusable forward/backward workspace. One evaluator holds the tape of the
// most recent forward call; backward() reverse-accumulates a JetCotangent
// into a ParamGrad. Construct one evaluator per thread of execution.
//
// Channel layout per unit: [value, d/dt, d/dx_1..d/dx_d, packed spatial
// second derivatives]. track_second=false drops the second-order block;
// track_first=false reduces to a plain value tape (used for boundary and
// initial points where only the output value enters the loss).
class JetEvaluator {
public:
    JetEvaluator(const std::vector<int>& layer_sizes, bool track_first = true,
                 bool track_second = true);

    // Runs the forward pass and records the tape.
    Jet forward(const MlpParams& params, std::span<const double> point);

    // Reverse accumulation through the tape of the last forward() call.
    // Adds the parameter gradient contribution of this point to `out`.
    void backward(const MlpParams& params, const JetCotangent& cot, ParamGrad& out);

    int channel_count() const { return channels_; }

private:
    std::vector<int> sizes_;
    int dim_;        // spatial dimension
    int nd1_;        // number of first-derivative channels (0 or d+1)
    int npairs_;     // number of packed second-derivative channels
    int channels_;   // 1 + nd1_ + npairs_
    std::vector<std::pair<int, int>> pairs_;  // spatial index pairs (i <= j)

    // tape: channel-contiguous state per layer, state[k][unit*channels_+c]
    std::vector<std::vector<double>> input_state_;  // input of each layer
    std::vector<std::vector<double>> pre_state_;    // pre-activation of each layer

    // backward scratch
    std::vector<double> adj_a_, adj_b_;
};

// Objective over a batch of Jets: returns the scalar value and fills one
// cotangent per point. Used by param_gradient and by the gradient-check
// harness in the tests.
using JetObjective = std::function<double(const std::vector<Jet>&, std::vector<JetCotangent>&)>;

// Evaluates the objective on the Jets at `points` and returns its value
// together with the exact gradient with respect to every parameter.
std::pair<double, ParamGrad> param_gradient(const MlpParams& params,
                                            const std::vector<std::vector<double>>& points,
                                            const JetObjective& objective);

}  // namespace fpk
