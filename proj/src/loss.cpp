#include "fpk/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "fpk/errors.hpp"
#include "fpk/rng.hpp"

namespace fpk {

Mask mask_from_string(const std::string& name) {
    if (name == "identity") return Mask::identity;
    if (name == "sigmoid") return Mask::sigmoid;
    if (name == "sqrt") return Mask::sqrt;
    throw ConfigError("unknown mask: " + name);
}

std::string mask_to_string(Mask mask) {
    switch (mask) {
        case Mask::identity: return "identity";
        case Mask::sigmoid: return "sigmoid";
        case Mask::sqrt: return "sqrt";
    }
    return "identity";
}

double mask_apply(Mask mask, double lambda) {
    switch (mask) {
        case Mask::identity:
            return lambda;
        case Mask::sigmoid:
            return 1.0 / (1.0 + std::exp(-lambda));
        case Mask::sqrt:
            if (lambda < 0.0)
                throw std::domain_error("mask_apply: sqrt mask needs lambda >= 0");
            return std::sqrt(lambda);
    }
    return lambda;
}

double mask_derivative(Mask mask, double lambda) {
    switch (mask) {
        case Mask::identity:
            return 1.0;
        case Mask::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-lambda));
            return s * (1.0 - s);
        }
        case Mask::sqrt:
            if (lambda < 0.0)
                throw std::domain_error("mask_derivative: sqrt mask needs lambda >= 0");
            return 0.5 / std::sqrt(std::max(lambda, 1e-12));
    }
    return 1.0;
}

LossWeights LossWeights::ones(std::size_t n_r, std::size_t n_b, std::size_t n_0, double mu) {
    LossWeights w;
    w.lambda_r.assign(n_r, 1.0);
    w.lambda_b.assign(n_b, 1.0);
    w.lambda_0.assign(n_0, 1.0);
    w.mu = mu;
    w.mask = Mask::identity;
    return w;
}

LossWeights LossWeights::uniform_init(std::size_t n_r, std::size_t n_b, std::size_t n_0,
                                      double mu, Mask mask, std::uint64_t seed) {
    LossWeights w;
    w.mu = mu;
    w.mask = mask;
    Rng rng(seed);
    w.lambda_r.resize(n_r);
    w.lambda_b.resize(n_b);
    w.lambda_0.resize(n_0);
    for (auto& v : w.lambda_r) v = rng.uniform();
    for (auto& v : w.lambda_b) v = rng.uniform();
    for (auto& v : w.lambda_0) v = rng.uniform();
    return w;
}

double weighted_mean_square(std::span<const double> values, std::span<const double> lambda,
                            Mask mask) {
    if (values.empty()) throw ConfigError("weighted_mean_square: empty batch");
    if (values.size() != lambda.size())
        throw ShapeError("weighted_mean_square: lambda length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        acc += mask_apply(mask, lambda[i]) * values[i] * values[i];
    return acc / static_cast<double>(values.size());
}

double residual_loss(std::span<const double> residuals, const LossWeights& weights) {
    return weighted_mean_square(residuals, weights.lambda_r, weights.mask);
}

double boundary_loss(std::span<const double> boundary_errors, const LossWeights& weights) {
    return weighted_mean_square(boundary_errors, weights.lambda_b, weights.mask);
}

double initial_loss(std::span<const double> initial_errors, const LossWeights& weights) {
    return weighted_mean_square(initial_errors, weights.lambda_0, weights.mask);
}

double mean_output(const MlpParams& params, const PointSet& points) {
    const std::size_t total = points.n_residual() + points.n_boundary() + points.n_initial();
    if (total == 0) throw ConfigError("mean_output: empty point set");
    const int d = params.spatial_dim();
    std::vector<double> p(d + 1);
    double acc = 0.0;
    auto add = [&](const std::vector<double>& x, double t) {
        std::copy(x.begin(), x.end(), p.begin());
        p[d] = t;
        acc += forward(params, p);
    };
    for (const auto& s : points.residual_slices)
        for (const auto& x : s.x) add(x, s.t);
    for (const auto& q : points.boundary) add(q.x, q.t);
    for (const auto& q : points.initial) add(q.x, q.t);
    return acc / static_cast<double>(total);
}

double normalization_loss(double p_bar, const FpkProblem& problem) {
    const double dev = p_bar - problem.norm_target();
    return dev * dev;
}

std::vector<double> hard_normalize(std::span<const double> values, double p_bar,
                                   const FpkProblem& problem) {
    const double shift = problem.norm_target() - p_bar;
    std::vector<double> out(values.begin(), values.end());
    for (auto& v : out) v += shift;
    return out;
}

LossBreakdown total_loss(const MlpParams& params, const FpkProblem& problem,
                         const PointSet& points, const LossWeights& weights,
                         bool normalization_on) {
    LossGradients scratch;
    scratch.params = ParamGrad::zeros_like(params);
    return total_loss_grad(params, problem, points, weights, normalization_on, scratch);
}

LossBreakdown total_loss_grad(const MlpParams& params, const FpkProblem& problem,
                              const PointSet& points, const LossWeights& weights,
                              bool normalization_on, LossGradients& gradients) {
    const std::size_t n_r = points.n_residual();
    const std::size_t n_b = points.n_boundary();
    const std::size_t n_0 = points.n_initial();
    if (n_r == 0 || n_b == 0 || n_0 == 0)
        throw ConfigError("total_loss: all three point categories must be non-empty");
    if (weights.lambda_r.size() != n_r || weights.lambda_b.size() != n_b ||
        weights.lambda_0.size() != n_0)
        throw ShapeError("total_loss: lambda lengths do not match point set");

    const int d = problem.dim;
    gradients.params.set_zero();
    gradients.lambda_r.assign(n_r, 0.0);
    gradients.lambda_b.assign(n_b, 0.0);
    gradients.lambda_0.assign(n_0, 0.0);

    const std::size_t n_total = n_r + n_b + n_0;
    const bool norm_active = normalization_on && weights.mu > 0.0;

    // The normalization cotangent couples every point through p_bar, so it is
    // computed in a value-only pre-pass before the gradient sweep.
    double p_bar = 0.0;
    double norm_cot = 0.0;  // dLoss_n / d(value of any single point)
    LossBreakdown breakdown;
    if (norm_active) {
        p_bar = mean_output(params, points);
        breakdown.normalization_term = weights.mu * normalization_loss(p_bar, problem);
        norm_cot = weights.mu * 2.0 * (p_bar - problem.norm_target()) /
                   static_cast<double>(n_total);
    }

    JetEvaluator jet_eval(params.layer_sizes, true, true);
    JetEvaluator val_eval(params.layer_sizes, false, false);
    std::vector<double> coord(d + 1);

    // residual points, slice-major order
    {
        double acc = 0.0;
        std::size_t i = 0;
        SpacetimePoint sp;
        for (const auto& slice : points.residual_slices) {
            sp.t = slice.t;
            for (const auto& x : slice.x) {
                sp.x = x;
                std::copy(x.begin(), x.end(), coord.begin());
                coord[d] = slice.t;
                const Jet jet = jet_eval.forward(params, coord);
                if (!std::isfinite(jet.value))
                    throw NumericError("total_loss: non-finite network output",
                                       static_cast<long>(i));
                const ResidualCoeffs coeffs = residual_coeffs(problem, sp);
                const double r = fpk_residual(coeffs, jet);
                const double f = mask_apply(weights.mask, weights.lambda_r[i]);
                acc += f * r * r;
                gradients.lambda_r[i] =
                    mask_derivative(weights.mask, weights.lambda_r[i]) * r * r /
                    static_cast<double>(n_r);

                JetCotangent cot;
                const double scale = 2.0 * f * r / static_cast<double>(n_r);
                cot.value = scale * coeffs.value + norm_cot;
                cot.grad.resize(d + 1);
                cot.grad[0] = scale * coeffs.time;
                for (int k = 0; k < d; ++k) cot.grad[1 + k] = scale * coeffs.grad[k];
                cot.hess.resize(coeffs.hess.size());
                for (std::size_t p = 0; p < coeffs.hess.size(); ++p)
                    cot.hess[p] = scale * coeffs.hess[p];
                jet_eval.backward(params, cot, gradients.params);
                ++i;
            }
        }
        breakdown.residual_term = acc / static_cast<double>(n_r);
    }

    // boundary points: target g == 0 (zero Dirichlet on the box faces)
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_b; ++i) {
            const auto& q = points.boundary[i];
            std::copy(q.x.begin(), q.x.end(), coord.begin());
            coord[d] = q.t;
            const Jet jet = val_eval.forward(params, coord);
            const double err = jet.value;
            const double f = mask_apply(weights.mask, weights.lambda_b[i]);
            acc += f * err * err;
            gradients.lambda_b[i] = mask_derivative(weights.mask, weights.lambda_b[i]) *
                                    err * err / static_cast<double>(n_b);
            JetCotangent cot;
            cot.value = 2.0 * f * err / static_cast<double>(n_b) + norm_cot;
            val_eval.backward(params, cot, gradients.params);
        }
        breakdown.boundary_term = acc / static_cast<double>(n_b);
    }

    // initial points: target p_0(x)
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_0; ++i) {
            const auto& q = points.initial[i];
            std::copy(q.x.begin(), q.x.end(), coord.begin());
            coord[d] = q.t;
            const Jet jet = val_eval.forward(params, coord);
            const double err = jet.value - problem.initial_density(q.x.data());
            const double f = mask_apply(weights.mask, weights.lambda_0[i]);
            acc += f * err * err;
            gradients.lambda_0[i] = mask_derivative(weights.mask, weights.lambda_0[i]) *
                                    err * err / static_cast<double>(n_0);
            JetCotangent cot;
            cot.value = 2.0 * f * err / static_cast<double>(n_0) + norm_cot;
            val_eval.backward(params, cot, gradients.params);
        }
        breakdown.initial_term = acc / static_cast<double>(n_0);
    }

    breakdown.total = breakdown.residual_term + breakdown.boundary_term +
                      breakdown.initial_term + breakdown.normalization_term;
    return breakdown;
}

}  // namespace fpk
