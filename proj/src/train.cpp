#include "fpk/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "fpk/errors.hpp"
#include "fpk/rng.hpp"

namespace fpk {

Variant variant_from_string(const std::string& name) {
    if (name == "pinn") return Variant::pinn;
    if (name == "n-pinn") return Variant::n_pinn;
    if (name == "s-pinn") return Variant::s_pinn;
    if (name == "d-pinn") return Variant::d_pinn;
    if (name == "dsn-pinn") return Variant::dsn_pinn;
    throw ConfigError("unknown variant: " + name);
}

std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::pinn: return "pinn";
        case Variant::n_pinn: return "n-pinn";
        case Variant::s_pinn: return "s-pinn";
        case Variant::d_pinn: return "d-pinn";
        case Variant::dsn_pinn: return "dsn-pinn";
    }
    return "pinn";
}

bool variant_resamples(Variant v) {
    return v == Variant::d_pinn || v == Variant::dsn_pinn;
}

bool variant_self_adaptive(Variant v) {
    return v == Variant::s_pinn || v == Variant::dsn_pinn;
}

void TrainConfig::validate() const {
    if (epochs_per_round < 0) throw ConfigError("epochs_per_round must be >= 0");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    if (n_max < 0 || n_adap < 0) throw ConfigError("n_max and n_adap must be >= 0");
    if (n_adap > n_max) throw ConfigError("n_adap must not exceed n_max");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    if (normalization_mu < 0.0) throw ConfigError("mu must be >= 0");
    if (n_per_slice <= 0 || time_slices <= 0 || n_boundary <= 0 || n_initial <= 0)
        throw ConfigError("point counts must be positive");
    if (candidate_factor < 1) throw ConfigError("candidate_factor must be >= 1");
    if (snapshot_factor < 1) throw ConfigError("snapshot_factor must be >= 1");
    if (hidden.empty()) throw ConfigError("at least one hidden layer required");
    for (int h : hidden)
        if (h <= 0) throw ConfigError("hidden widths must be positive");
}

AdamState AdamState::like(const MlpParams& params) {
    AdamState s;
    for (const auto& w : params.weights) {
        s.m.emplace_back(w.size(), 0.0);
        s.v.emplace_back(w.size(), 0.0);
    }
    for (const auto& b : params.biases) {
        s.m.emplace_back(b.size(), 0.0);
        s.v.emplace_back(b.size(), 0.0);
    }
    return s;
}

AdamState AdamState::flat(std::size_t n) {
    AdamState s;
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
    return s;
}

void adam_step(AdamState& state, std::vector<double*> values,
               std::vector<const double*> grads, std::vector<std::size_t> sizes,
               double learning_rate) {
    if (values.size() != grads.size() || values.size() != sizes.size() ||
        values.size() != state.m.size())
        throw ShapeError("adam_step: array list mismatch");
    for (std::size_t a = 0; a < grads.size(); ++a) {
        if (state.m[a].size() != sizes[a])
            throw ShapeError("adam_step: accumulator shape mismatch");
        for (std::size_t i = 0; i < sizes[a]; ++i)
            if (!std::isfinite(grads[a][i]))
                throw NumericError("adam_step: non-finite gradient, step rejected",
                                   static_cast<long>(i));
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t a = 0; a < grads.size(); ++a) {
        double* m = state.m[a].data();
        double* v = state.v[a].data();
        for (std::size_t i = 0; i < sizes[a]; ++i) {
            const double g = grads[a][i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            values[a][i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

void adam_step(AdamState& state, MlpParams& params, const ParamGrad& grads,
               double learning_rate) {
    std::vector<double*> values;
    std::vector<const double*> g;
    std::vector<std::size_t> sizes;
    for (std::size_t k = 0; k < params.weights.size(); ++k) {
        values.push_back(params.weights[k].data());
        g.push_back(grads.weights[k].data());
        sizes.push_back(params.weights[k].size());
    }
    for (std::size_t k = 0; k < params.biases.size(); ++k) {
        values.push_back(params.biases[k].data());
        g.push_back(grads.biases[k].data());
        sizes.push_back(params.biases[k].size());
    }
    adam_step(state, std::move(values), std::move(g), std::move(sizes), learning_rate);
}

double mean_pde_residual(const MlpParams& params, const FpkProblem& problem,
                         const PointSet& points) {
    if (points.n_residual() == 0)
        throw ConfigError("mean_pde_residual: no residual points");
    JetEvaluator eval(params.layer_sizes);
    const int d = problem.dim;
    std::vector<double> coord(d + 1);
    SpacetimePoint sp;
    double acc = 0.0;
    for (const auto& slice : points.residual_slices) {
        sp.t = slice.t;
        for (const auto& x : slice.x) {
            sp.x = x;
            std::copy(x.begin(), x.end(), coord.begin());
            coord[d] = slice.t;
            acc += std::fabs(fpk_residual(problem, eval.forward(params, coord), sp));
        }
    }
    return acc / static_cast<double>(points.n_residual());
}

std::vector<double> train_rounds(MlpParams& params, const FpkProblem& problem,
                                 const PointSet& points, const TrainConfig& cfg,
                                 int epochs, bool normalization_on, bool adaptive_lambda,
                                 LossWeights& weights, AdamState& opt_params,
                                 AdamState& opt_lambda) {
    std::vector<double> history;
    history.reserve(epochs);
    LossGradients grads;
    grads.params = ParamGrad::zeros_like(params);
    std::vector<double> neg_lambda_grads;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        LossBreakdown breakdown;
        try {
            breakdown = total_loss_grad(params, problem, points, weights,
                                        normalization_on, grads);
            adam_step(opt_params, params, grads.params, cfg.lr);
        } catch (const NumericError&) {
            // abort the round; parameters retain their last finite state
            break;
        }
        if (adaptive_lambda) {
            // gradient ascent on the pointwise weights: feed Adam the
            // negated gradient, same step size as the parameter optimizer
            neg_lambda_grads.clear();
            neg_lambda_grads.reserve(grads.lambda_r.size() + grads.lambda_b.size() +
                                     grads.lambda_0.size());
            for (double g : grads.lambda_r) neg_lambda_grads.push_back(-g);
            for (double g : grads.lambda_b) neg_lambda_grads.push_back(-g);
            for (double g : grads.lambda_0) neg_lambda_grads.push_back(-g);
            std::vector<double*> values = {weights.lambda_r.data(), weights.lambda_b.data(),
                                           weights.lambda_0.data()};
            std::vector<const double*> gptr = {
                neg_lambda_grads.data(), neg_lambda_grads.data() + grads.lambda_r.size(),
                neg_lambda_grads.data() + grads.lambda_r.size() + grads.lambda_b.size()};
            std::vector<std::size_t> sizes = {weights.lambda_r.size(),
                                              weights.lambda_b.size(),
                                              weights.lambda_0.size()};
            try {
                adam_step(opt_lambda, std::move(values), std::move(gptr), std::move(sizes),
                          cfg.lr);
            } catch (const NumericError&) {
                break;
            }
            if (weights.mask == Mask::sqrt) {
                // keep the sqrt mask inside its domain
                for (auto& l : weights.lambda_r) l = std::max(l, 0.0);
                for (auto& l : weights.lambda_b) l = std::max(l, 0.0);
                for (auto& l : weights.lambda_0) l = std::max(l, 0.0);
            }
        }
        history.push_back(breakdown.total);
    }
    return history;
}

LoopTrace run_adaptive_loop(int n_max, int n_adap, double epsilon,
                            const std::function<double(int)>& train_and_residual,
                            const std::function<void(int)>& on_accept) {
    LoopTrace trace;
    double r_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    int s = 0;
    while (k < n_max && s < n_adap) {
        const double r = train_and_residual(k);
        const bool accepted = r < r_prev - epsilon;
        if (accepted) {
            r_prev = r;
            s += 1;
            on_accept(k);
        }
        trace.steps.push_back(LoopStep{k, r, accepted, s});
        k += 1;
    }
    trace.final_k = k;
    trace.final_s = s;
    return trace;
}

namespace {

std::size_t lambda_total(const LossWeights& w) {
    return w.lambda_r.size() + w.lambda_b.size() + w.lambda_0.size();
}

}  // namespace

DsnResult dsn_loop(const FpkProblem& problem, const TrainConfig& cfg) {
    cfg.validate();
    const bool resampling = variant_resamples(cfg.variant);
    const bool adaptive = variant_self_adaptive(cfg.variant) && cfg.mask != Mask::identity;

    // matched-budget rule: non-resampling baselines see extra base points in
    // place of the points the adaptive loop would introduce
    int n_per_slice = cfg.n_per_slice;
    if (!resampling) {
        const double factor =
            cfg.augment_factor >= 0.0 ? cfg.augment_factor : cfg.n_adap * cfg.beta;
        n_per_slice = static_cast<int>(std::lround(cfg.n_per_slice * (1.0 + factor)));
    }

    std::vector<int> layer_sizes;
    layer_sizes.push_back(problem.dim + 1);
    layer_sizes.insert(layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    layer_sizes.push_back(1);

    const PointSet base = base_points(problem, n_per_slice, cfg.time_slices,
                                      cfg.n_boundary, cfg.n_initial,
                                      derive_seed(cfg.seed, 10));
    MlpParams params = xavier_init(layer_sizes, derive_seed(cfg.seed, 11));

    DsnResult result;
    result.best_params = params;
    result.final_points = base;
    PointSet current = base;

    auto make_weights = [&](std::uint64_t stream) {
        return adaptive ? LossWeights::uniform_init(current.n_residual(),
                                                    current.n_boundary(),
                                                    current.n_initial(),
                                                    cfg.normalization_mu, cfg.mask,
                                                    derive_seed(cfg.seed, stream))
                        : LossWeights::ones(current.n_residual(), current.n_boundary(),
                                            current.n_initial(), cfg.normalization_mu);
    };

    LossWeights weights = make_weights(12);
    AdamState opt_params = AdamState::like(params);
    AdamState opt_lambda = AdamState::flat(0);
    if (adaptive) {
        opt_lambda = AdamState();
        opt_lambda.m = {std::vector<double>(weights.lambda_r.size(), 0.0),
                        std::vector<double>(weights.lambda_b.size(), 0.0),
                        std::vector<double>(weights.lambda_0.size(), 0.0)};
        opt_lambda.v = opt_lambda.m;
    }

    auto reset_lambda_state = [&](std::uint64_t stream) {
        weights = make_weights(stream);
        if (adaptive) {
            opt_lambda = AdamState();
            opt_lambda.m = {std::vector<double>(weights.lambda_r.size(), 0.0),
                            std::vector<double>(weights.lambda_b.size(), 0.0),
                            std::vector<double>(weights.lambda_0.size(), 0.0)};
            opt_lambda.v = opt_lambda.m;
            opt_lambda.step_count = 0;
        }
    };

    auto normalization_active = [&](int k) {
        switch (cfg.variant) {
            case Variant::n_pinn: return true;
            case Variant::dsn_pinn: return k == 0;  // pretraining round only
            default: return false;
        }
    };

    auto train_and_residual = [&](int k) {
        auto history = train_rounds(params, problem, current, cfg, cfg.epochs_per_round,
                                    normalization_active(k), adaptive, weights,
                                    opt_params, opt_lambda);
        result.loss_history.insert(result.loss_history.end(), history.begin(),
                                   history.end());
        const double r = mean_pde_residual(params, problem, current);
        result.residual_history.push_back(r);
        return r;
    };

    auto on_accept = [&](int k) {
        result.best_params = params;
        if (!resampling) return;

        // rebuild D_r: per time slice, snapshot -> weighted KDE -> categorical
        // resampling, then remix with the base set
        PointSet resampled;
        resampled.residual_slices.resize(current.residual_slices.size());
        const int n = cfg.n_per_slice;
        const int snapshot_n = cfg.snapshot_factor * n;
        const int candidates = cfg.candidate_factor * n;
        for (std::size_t m = 0; m < current.residual_slices.size(); ++m) {
            const double t = base.residual_slices[m].t;
            Slice& slice = resampled.residual_slices[m];
            slice.t = t;
            const std::uint64_t slice_seed =
                derive_seed(cfg.seed, 100000 + static_cast<std::uint64_t>(k) * 1000 + m);
            try {
                auto [centers, u] = snapshot(params, problem, t, snapshot_n);
                const KdeModel kde = fit_weighted_kde(std::move(centers), std::move(u));
                slice.x = resample_slice(kde, problem.space_box, candidates, n, slice_seed);
            } catch (const DegenerateSampleError&) {
                // collapsed prior: fall back to uniform sampling of the slice
                std::fprintf(stderr,
                             "[dsn] degenerate prior at t=%.6g (iteration %d); "
                             "falling back to uniform slice sampling\n",
                             t, k);
                Rng rng(slice_seed);
                slice.x.assign(n, std::vector<double>(problem.dim));
                for (auto& x : slice.x)
                    for (int i = 0; i < problem.dim; ++i)
                        x[i] = rng.uniform(problem.space_box[i][0], problem.space_box[i][1]);
            }
        }
        current = mixture(resampled, base, cfg.beta,
                          derive_seed(cfg.seed, 200000 + static_cast<std::uint64_t>(k)));
        // pointwise weights are tied to point identities; re-initialize
        reset_lambda_state(300000 + static_cast<std::uint64_t>(k));
    };

    const LoopTrace trace = run_adaptive_loop(cfg.n_max, cfg.n_adap, cfg.epsilon,
                                              train_and_residual, on_accept);
    result.iterations = trace.final_k;
    result.accepts = trace.final_s;
    result.final_points = current;
    return result;
}

}  // namespace fpk
