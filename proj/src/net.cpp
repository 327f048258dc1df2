#include "fpk/net.hpp"

#include <cmath>
#include <cstring>

#include "fpk/errors.hpp"
#include "fpk/rng.hpp"

namespace fpk {

ParamGrad ParamGrad::zeros_like(const MlpParams& params) {
    ParamGrad g;
    g.weights.reserve(params.weights.size());
    g.biases.reserve(params.biases.size());
    for (const auto& w : params.weights) g.weights.emplace_back(w.size(), 0.0);
    for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

void ParamGrad::set_zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void ParamGrad::axpy(double alpha, const ParamGrad& other) {
    if (weights.size() != other.weights.size())
        throw ShapeError("ParamGrad::axpy: layer count mismatch");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        for (std::size_t i = 0; i < weights[k].size(); ++i)
            weights[k][i] += alpha * other.weights[k][i];
        for (std::size_t i = 0; i < biases[k].size(); ++i)
            biases[k][i] += alpha * other.biases[k][i];
    }
}

bool ParamGrad::all_finite() const {
    for (const auto& w : weights)
        for (double v : w)
            if (!std::isfinite(v)) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

MlpParams xavier_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw ConfigError("xavier_init: need at least input and output layer");
    for (int n : layer_sizes)
        if (n <= 0) throw ConfigError("xavier_init: non-positive layer size");
    if (layer_sizes.back() != 1)
        throw ConfigError("xavier_init: output layer width must be 1");

    MlpParams params;
    params.layer_sizes = layer_sizes;
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const int fan_in = layer_sizes[k];
        const int fan_out = layer_sizes[k + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& x : w) x = rng.uniform(-bound, bound);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

double forward(const MlpParams& params, std::span<const double> point) {
    if (static_cast<int>(point.size()) != params.input_dim())
        throw ShapeError("forward: point length does not match input layer");
    std::vector<double> cur(point.begin(), point.end());
    std::vector<double> next;
    const int layers = params.layer_count();
    for (int k = 0; k < layers; ++k) {
        const int nin = params.layer_sizes[k];
        const int nout = params.layer_sizes[k + 1];
        const double* w = params.weights[k].data();
        next.assign(nout, 0.0);
        for (int u = 0; u < nout; ++u) {
            double acc = params.biases[k][u];
            const double* row = w + static_cast<std::size_t>(u) * nin;
            for (int v = 0; v < nin; ++v) acc += row[v] * cur[v];
            next[u] = (k + 1 < layers) ? std::tanh(acc) : acc;
        }
        cur.swap(next);
    }
    return cur[0];
}

JetEvaluator::JetEvaluator(const std::vector<int>& layer_sizes, bool track_first,
                           bool track_second)
    : sizes_(layer_sizes), dim_(layer_sizes.front() - 1) {
    if (layer_sizes.size() < 2 || layer_sizes.back() != 1 || dim_ < 1)
        throw ConfigError("JetEvaluator: invalid layer sizes");
    nd1_ = track_first ? dim_ + 1 : 0;
    npairs_ = 0;
    if (track_first && track_second) {
        for (int i = 1; i <= dim_; ++i)
            for (int j = i; j <= dim_; ++j) {
                pairs_.emplace_back(i, j);
                ++npairs_;
            }
    }
    channels_ = 1 + nd1_ + npairs_;
    const int layers = static_cast<int>(sizes_.size()) - 1;
    input_state_.resize(layers);
    pre_state_.resize(layers);
    for (int k = 0; k < layers; ++k) {
        input_state_[k].assign(static_cast<std::size_t>(sizes_[k]) * channels_, 0.0);
        pre_state_[k].assign(static_cast<std::size_t>(sizes_[k + 1]) * channels_, 0.0);
    }
}

Jet JetEvaluator::forward(const MlpParams& params, std::span<const double> point) {
    if (params.layer_sizes != sizes_)
        throw ShapeError("JetEvaluator: params do not match evaluator architecture");
    if (static_cast<int>(point.size()) != sizes_.front())
        throw ShapeError("JetEvaluator: point length does not match input layer");

    const int C = channels_;
    const int layers = static_cast<int>(sizes_.size()) - 1;

    // seed the input channels: point layout is (x_1..x_d, t); first-derivative
    // channel 1 is d/dt, channels 2..d+1 are d/dx_1..d/dx_d
    {
        auto& in = input_state_[0];
        std::fill(in.begin(), in.end(), 0.0);
        for (int v = 0; v <= dim_; ++v) in[static_cast<std::size_t>(v) * C] = point[v];
        if (nd1_ > 0) {
            in[static_cast<std::size_t>(dim_) * C + 1] = 1.0;  // t channel
            for (int i = 1; i <= dim_; ++i)
                in[static_cast<std::size_t>(i - 1) * C + 1 + i] = 1.0;
        }
    }

    for (int k = 0; k < layers; ++k) {
        const int nin = sizes_[k];
        const int nout = sizes_[k + 1];
        const double* in = input_state_[k].data();
        double* pre = pre_state_[k].data();
        const double* w = params.weights[k].data();
        std::fill(pre_state_[k].begin(), pre_state_[k].end(), 0.0);
        for (int u = 0; u < nout; ++u) {
            double* pu = pre + static_cast<std::size_t>(u) * C;
            const double* row = w + static_cast<std::size_t>(u) * nin;
            for (int v = 0; v < nin; ++v) {
                const double wv = row[v];
                const double* iv = in + static_cast<std::size_t>(v) * C;
                for (int c = 0; c < C; ++c) pu[c] += wv * iv[c];
            }
            pu[0] += params.biases[k][u];
        }
        if (k + 1 < layers) {
            double* out = input_state_[k + 1].data();
            for (int u = 0; u < nout; ++u) {
                const double* pu = pre + static_cast<std::size_t>(u) * C;
                double* ou = out + static_cast<std::size_t>(u) * C;
                const double t = std::tanh(pu[0]);
                const double s = 1.0 - t * t;
                ou[0] = t;
                for (int a = 1; a <= nd1_; ++a) ou[a] = s * pu[a];
                if (npairs_ > 0) {
                    const double tdd = -2.0 * t * s;
                    for (int p = 0; p < npairs_; ++p) {
                        const int ci = 1 + pairs_[p].first;
                        const int cj = 1 + pairs_[p].second;
                        ou[1 + nd1_ + p] = s * pu[1 + nd1_ + p] + tdd * pu[ci] * pu[cj];
                    }
                }
            }
        }
    }

    const double* out = pre_state_[layers - 1].data();
    Jet jet;
    jet.dim = dim_;
    jet.value = out[0];
    if (nd1_ > 0) jet.grad.assign(out + 1, out + 1 + nd1_);
    if (npairs_ > 0) jet.hess.assign(out + 1 + nd1_, out + 1 + nd1_ + npairs_);
    return jet;
}

void JetEvaluator::backward(const MlpParams& params, const JetCotangent& cot,
                            ParamGrad& out) {
    const int C = channels_;
    const int layers = static_cast<int>(sizes_.size()) - 1;

    // adjoint of the output layer channels
    adj_a_.assign(C, 0.0);
    adj_a_[0] = cot.value;
    if (!cot.grad.empty()) {
        if (nd1_ == 0) throw ShapeError("JetEvaluator: grad cotangent on value-only tape");
        for (int a = 0; a < nd1_; ++a) adj_a_[1 + a] = cot.grad[a];
    }
    if (!cot.hess.empty()) {
        if (npairs_ == 0) throw ShapeError("JetEvaluator: hess cotangent without second order");
        for (int p = 0; p < npairs_; ++p) adj_a_[1 + nd1_ + p] = cot.hess[p];
    }

    for (int k = layers - 1; k >= 0; --k) {
        const int nin = sizes_[k];
        const int nout = sizes_[k + 1];
        // adj_a_ currently holds the adjoint of this layer's *output*; convert
        // to the adjoint of the pre-activation (identity for the last layer)
        if (k + 1 < layers) {
            const double* pre = pre_state_[k].data();
            for (int u = 0; u < nout; ++u) {
                const double* pu = pre + static_cast<std::size_t>(u) * C;
                double* au = adj_a_.data() + static_cast<std::size_t>(u) * C;
                const double t = std::tanh(pu[0]);
                const double s = 1.0 - t * t;
                const double tdd = -2.0 * t * s;
                double acc_a = au[0] * s;
                for (int a = 1; a <= nd1_; ++a) acc_a += au[a] * tdd * pu[a];
                // scale the outgoing first-derivative adjoints before adding
                // pair contributions, which enter the pre-activation adjoint
                // without the extra factor of s
                for (int a = 1; a <= nd1_; ++a) au[a] *= s;
                if (npairs_ > 0) {
                    const double tddd = -2.0 * s * (1.0 - 3.0 * t * t);
                    for (int p = 0; p < npairs_; ++p) {
                        const int ci = 1 + pairs_[p].first;
                        const int cj = 1 + pairs_[p].second;
                        const double ah = au[1 + nd1_ + p];
                        acc_a += ah * (tdd * pu[1 + nd1_ + p] + tddd * pu[ci] * pu[cj]);
                        if (ci == cj) {
                            au[ci] += ah * 2.0 * tdd * pu[ci];
                        } else {
                            au[ci] += ah * tdd * pu[cj];
                            au[cj] += ah * tdd * pu[ci];
                        }
                        au[1 + nd1_ + p] *= s;
                    }
                }
                au[0] = acc_a;
            }
        }

        // affine adjoint: parameter gradient and input adjoint
        const double* in = input_state_[k].data();
        const double* w = params.weights[k].data();
        double* gw = out.weights[k].data();
        double* gb = out.biases[k].data();
        adj_b_.assign(static_cast<std::size_t>(nin) * C, 0.0);
        for (int u = 0; u < nout; ++u) {
            const double* au = adj_a_.data() + static_cast<std::size_t>(u) * C;
            const double* row = w + static_cast<std::size_t>(u) * nin;
            double* grow = gw + static_cast<std::size_t>(u) * nin;
            gb[u] += au[0];
            for (int v = 0; v < nin; ++v) {
                const double* iv = in + static_cast<std::size_t>(v) * C;
                double* bv = adj_b_.data() + static_cast<std::size_t>(v) * C;
                double acc = 0.0;
                const double wv = row[v];
                for (int c = 0; c < C; ++c) {
                    acc += au[c] * iv[c];
                    bv[c] += wv * au[c];
                }
                grow[v] += acc;
            }
        }
        adj_a_.swap(adj_b_);
    }
}

Jet forward_jet(const MlpParams& params, std::span<const double> point) {
    JetEvaluator eval(params.layer_sizes);
    return eval.forward(params, point);
}

std::pair<double, ParamGrad> param_gradient(const MlpParams& params,
                                            const std::vector<std::vector<double>>& points,
                                            const JetObjective& objective) {
    JetEvaluator eval(params.layer_sizes);
    std::vector<Jet> jets;
    jets.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        jets.push_back(eval.forward(params, points[i]));
        if (!std::isfinite(jets.back().value))
            throw NumericError("param_gradient: non-finite network output",
                               static_cast<long>(i));
    }
    std::vector<JetCotangent> cots(points.size());
    const double value = objective(jets, cots);
    if (!std::isfinite(value)) throw NumericError("param_gradient: non-finite objective");
    ParamGrad grad = ParamGrad::zeros_like(params);
    for (std::size_t i = 0; i < points.size(); ++i) {
        eval.forward(params, points[i]);  // rebuild the tape for this point
        eval.backward(params, cots[i], grad);
    }
    if (!grad.all_finite()) throw NumericError("param_gradient: non-finite gradient");
    return {value, std::move(grad)};
}

}  // namespace fpk
