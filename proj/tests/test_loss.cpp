#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fpk/errors.hpp"
#include "fpk/loss.hpp"
#include "fpk/rng.hpp"
#include "fpk/sampling.hpp"

using namespace fpk;

namespace {

PointSet small_set(const FpkProblem& problem, std::uint64_t seed) {
    return base_points(problem, 6, 4, 8, 10, seed);
}

// finite difference of the total loss w.r.t. one parameter
double fd_loss(MlpParams p, const FpkProblem& prob, const PointSet& pts,
               const LossWeights& w, bool norm_on, int layer, bool weight,
               std::size_t idx, double h) {
    auto& slot = weight ? p.weights[layer][idx] : p.biases[layer][idx];
    const double orig = slot;
    slot = orig + h;
    const double up = total_loss(p, prob, pts, w, norm_on).total;
    slot = orig - h;
    const double dn = total_loss(p, prob, pts, w, norm_on).total;
    return (up - dn) / (2.0 * h);
}

}  // namespace

TEST_CASE("mask values and round-trip names") {
    CHECK(mask_apply(Mask::sigmoid, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mask_apply(Mask::sqrt, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mask_apply(Mask::identity, 0.37) == 0.37);
    CHECK_THROWS_AS(mask_apply(Mask::sqrt, -0.1), std::domain_error);
    for (const auto* name : {"identity", "sigmoid", "sqrt"})
        CHECK(mask_to_string(mask_from_string(name)) == name);
    CHECK_THROWS_AS(mask_from_string("relu"), ConfigError);
}

TEST_CASE("mask derivatives match finite differences") {
    for (Mask m : {Mask::identity, Mask::sigmoid, Mask::sqrt}) {
        for (double lam : {0.3, 1.0, 2.7}) {
            const double h = 1e-6;
            const double fd = (mask_apply(m, lam + h) - mask_apply(m, lam - h)) / (2 * h);
            CHECK(mask_derivative(m, lam) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("residual_loss frozen examples") {
    LossWeights w = LossWeights::ones(2, 1, 1);
    CHECK(residual_loss(std::vector<double>{1.0, -1.0}, w) == doctest::Approx(1.0));
    CHECK(residual_loss(std::vector<double>{0.0, 0.0}, w) == 0.0);

    LossWeights ws = LossWeights::ones(1, 1, 1);
    ws.mask = Mask::sqrt;
    ws.lambda_r = {4.0};
    CHECK(residual_loss(std::vector<double>{2.0}, ws) == doctest::Approx(8.0));

    CHECK_THROWS_AS(residual_loss(std::vector<double>{}, w), ConfigError);
}

TEST_CASE("initial_loss single point frozen example") {
    LossWeights w = LossWeights::ones(1, 1, 1);
    // p_hat = 0.3, p_0 = 0.1 -> (0.2)^2 = 0.04
    CHECK(initial_loss(std::vector<double>{0.2}, w) == doctest::Approx(0.04));
}

TEST_CASE("normalization loss and hard normalization") {
    const auto p = example1();  // target 3/36 = 0.08333...
    CHECK(normalization_loss(p.norm_target(), p) == 0.0);
    CHECK(normalization_loss(0.18333333333333332, p) == doctest::Approx(0.01).epsilon(1e-9));

    const std::vector<double> vals{0.0, 0.1, 0.4, -0.2};
    const double p_bar = std::accumulate(vals.begin(), vals.end(), 0.0) / 4.0;
    const auto adjusted = hard_normalize(vals, p_bar, p);
    double mean = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        CHECK(adjusted[i] - vals[i] ==
              doctest::Approx(p.norm_target() - p_bar).epsilon(1e-12));
        mean += adjusted[i];
    }
    CHECK(mean / 4.0 == doctest::Approx(p.norm_target()).epsilon(1e-12));
}

TEST_CASE("uniform_init draws lambdas in [0,1], deterministic per seed") {
    const auto a = LossWeights::uniform_init(10, 5, 5, 1.0, Mask::sigmoid, 42);
    const auto b = LossWeights::uniform_init(10, 5, 5, 1.0, Mask::sigmoid, 42);
    CHECK(a.lambda_r == b.lambda_r);
    for (double v : a.lambda_r) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    const auto c = LossWeights::uniform_init(10, 5, 5, 1.0, Mask::sigmoid, 43);
    CHECK(a.lambda_r != c.lambda_r);
}

TEST_CASE("total_loss: zero network on example1") {
    const auto prob = example1();
    const auto pts = small_set(prob, 7);
    MlpParams net = xavier_init({2, 8, 1}, 1);
    for (auto& w : net.weights)
        for (auto& v : w) v = 0.0;
    for (auto& b : net.biases)
        for (auto& v : b) v = 0.0;
    const auto w = LossWeights::ones(pts.n_residual(), pts.n_boundary(), pts.n_initial());

    const auto off = total_loss(net, prob, pts, w, false);
    CHECK(off.residual_term == 0.0);
    CHECK(off.boundary_term == 0.0);
    double expected_initial = 0.0;
    for (const auto& pt : pts.initial) {
        const double p0 = prob.initial_density(pt.x.data());
        expected_initial += p0 * p0;
    }
    expected_initial /= static_cast<double>(pts.n_initial());
    CHECK(off.initial_term == doctest::Approx(expected_initial).epsilon(1e-12));
    CHECK(off.normalization_term == 0.0);
    CHECK(off.total == doctest::Approx(off.residual_term + off.boundary_term +
                                       off.initial_term).epsilon(1e-15));

    const auto on = total_loss(net, prob, pts, w, true);
    CHECK(on.normalization_term ==
          doctest::Approx(prob.norm_target() * prob.norm_target()).epsilon(1e-12));
    CHECK(on.total == doctest::Approx(off.total + on.normalization_term).epsilon(1e-12));
}

TEST_CASE("mean_output: constant network returns the constant") {
    const auto prob = example1();
    const auto pts = small_set(prob, 11);
    MlpParams net = xavier_init({2, 4, 1}, 1);
    for (auto& w : net.weights)
        for (auto& v : w) v = 0.0;
    net.biases.back()[0] = 0.7;
    CHECK(mean_output(net, pts) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("total_loss_grad matches finite differences (all masks, with and without normalization)") {
    const auto prob = example1();
    const auto pts = small_set(prob, 19);
    for (Mask mask : {Mask::identity, Mask::sigmoid, Mask::sqrt}) {
        for (bool norm_on : {false, true}) {
            MlpParams net = xavier_init({2, 6, 1}, 23);
            Rng rng(5);
            for (auto& b : net.biases)
                for (auto& v : b) v = rng.uniform(-0.3, 0.3);
            auto w = LossWeights::uniform_init(pts.n_residual(), pts.n_boundary(),
                                               pts.n_initial(), 1.0, mask, 31);
            LossGradients grads;
            grads.params = ParamGrad::zeros_like(net);
            const auto bd = total_loss_grad(net, prob, pts, w, norm_on, grads);
            CHECK(bd.total ==
                  doctest::Approx(total_loss(net, prob, pts, w, norm_on).total)
                      .epsilon(1e-12));

            Rng pick(77);
            for (int layer = 0; layer < net.layer_count(); ++layer) {
                for (int probe = 0; probe < 2; ++probe) {
                    const std::size_t wi = pick.below(net.weights[layer].size());
                    const double fd =
                        fd_loss(net, prob, pts, w, norm_on, layer, true, wi, 1e-6);
                    CHECK(grads.params.weights[layer][wi] ==
                          doctest::Approx(fd).epsilon(2e-5));
                }
                const std::size_t bi = pick.below(net.biases[layer].size());
                const double fd =
                    fd_loss(net, prob, pts, w, norm_on, layer, false, bi, 1e-6);
                CHECK(grads.params.biases[layer][bi] ==
                      doctest::Approx(fd).epsilon(2e-5));
            }

            // lambda gradients (non-identity masks expose them)
            if (mask != Mask::identity) {
                REQUIRE(grads.lambda_r.size() == w.lambda_r.size());
                const double h = 1e-6;
                for (std::size_t i : {std::size_t{0}, w.lambda_r.size() - 1}) {
                    auto wp = w;
                    wp.lambda_r[i] += h;
                    auto wm = w;
                    wm.lambda_r[i] -= h;
                    const double fd = (total_loss(net, prob, pts, wp, norm_on).total -
                                       total_loss(net, prob, pts, wm, norm_on).total) /
                                      (2 * h);
                    CHECK(grads.lambda_r[i] == doctest::Approx(fd).epsilon(1e-4));
                }
            }
        }
    }
}

TEST_CASE("raising a lambda raises the weighted residual term (monotonicity)") {
    for (Mask mask : {Mask::identity, Mask::sigmoid, Mask::sqrt}) {
        LossWeights w = LossWeights::ones(2, 1, 1);
        w.mask = mask;
        w.lambda_r = {1.0, 1.0};
        const std::vector<double> residuals{0.5, -0.3};
        const double before = residual_loss(residuals, w);
        w.lambda_r[0] = 2.0;
        CHECK(residual_loss(residuals, w) > before);
    }
}

TEST_CASE("plain weights reduce the weighted objective to the unweighted one") {
    const auto prob = example2();
    const auto pts = small_set(prob, 3);
    const MlpParams net = xavier_init({2, 8, 1}, 9);
    const auto ones = LossWeights::ones(pts.n_residual(), pts.n_boundary(), pts.n_initial());
    auto sig = LossWeights::uniform_init(pts.n_residual(), pts.n_boundary(),
                                         pts.n_initial(), 1.0, Mask::identity, 4);
    for (auto* v : {&sig.lambda_r, &sig.lambda_b, &sig.lambda_0})
        std::fill(v->begin(), v->end(), 1.0);
    CHECK(total_loss(net, prob, pts, ones, false).total ==
          total_loss(net, prob, pts, sig, false).total);
}
