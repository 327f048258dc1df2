#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "fpk/errors.hpp"
#include "fpk/rng.hpp"
#include "fpk/sampling.hpp"

using namespace fpk;

namespace {

KdeModel single_center_model() {
    KdeModel m;
    m.centers = {{0.0}};
    m.weights = {1.0};
    m.bandwidth = 1.0;
    m.dim = 1;
    return m;
}

}  // namespace

TEST_CASE("base_points: counts, ranges, slice structure") {
    const auto prob = example1();
    const auto pts = base_points(prob, 50, 40, 80, 160, 1);
    CHECK(pts.n_residual() == 2000);
    CHECK(pts.n_boundary() == 80);
    CHECK(pts.n_initial() == 160);
    CHECK(pts.residual_slices.size() == 40);
    for (const auto& s : pts.residual_slices) {
        CHECK(s.x.size() == 50);
        CHECK(s.t > prob.t0);
        CHECK(s.t <= prob.t1 + 1e-12);
        for (const auto& x : s.x) {
            CHECK(x[0] > prob.space_box[0][0]);
            CHECK(x[0] < prob.space_box[0][1]);
        }
    }
    for (const auto& b : pts.boundary) {
        CHECK((b.x[0] == prob.space_box[0][0] || b.x[0] == prob.space_box[0][1]));
        CHECK(b.t >= prob.t0);
        CHECK(b.t <= prob.t1);
    }
    for (const auto& i : pts.initial) CHECK(i.t == prob.t0);

    const auto pts2 = base_points(example2(), 60, 60, 120, 240, 1);
    CHECK(pts2.n_residual() == 3600);

    // deterministic per seed
    const auto again = base_points(prob, 50, 40, 80, 160, 1);
    CHECK(again.residual_slices[0].x == pts.residual_slices[0].x);
    const auto other = base_points(prob, 50, 40, 80, 160, 2);
    CHECK(other.residual_slices[0].x != pts.residual_slices[0].x);
}

TEST_CASE("base_points: 2d boundary points sit on faces") {
    const auto prob = example4();
    const auto pts = base_points(prob, 20, 5, 40, 30, 3);
    for (const auto& b : pts.boundary) {
        bool on_face = false;
        for (int i = 0; i < 2; ++i)
            on_face = on_face || b.x[i] == prob.space_box[i][0] ||
                      b.x[i] == prob.space_box[i][1];
        CHECK(on_face);
    }
}

TEST_CASE("scott_bandwidth: frozen value, errors, homogeneity") {
    // 100 points with pooled sigma exactly 2: 50 at -2, 50 at +2
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({-2.0});
    for (int i = 0; i < 50; ++i) pts.push_back({2.0});
    const double h = scott_bandwidth(pts);
    CHECK(h == doctest::Approx(2.0 * std::pow(100.0, -0.2)).epsilon(1e-12));
    CHECK(h == doctest::Approx(0.796214).epsilon(1e-6));

    CHECK_THROWS_AS(scott_bandwidth({{1.0}}), DegenerateSampleError);
    CHECK_THROWS_AS(scott_bandwidth({{1.0}, {1.0}, {1.0}}), DegenerateSampleError);

    for (auto& p : pts) p[0] *= 3.0;
    CHECK(scott_bandwidth(pts) == doctest::Approx(3.0 * h).epsilon(1e-12));
}

TEST_CASE("snapshot: clamping and grid layout") {
    const auto prob = example1();
    MlpParams net = xavier_init({2, 4, 1}, 1);
    for (auto& w : net.weights)
        for (auto& v : w) v = 0.0;

    net.biases.back()[0] = -0.1;
    auto [centers, u] = snapshot(net, prob, 1.0, 100);
    CHECK(centers.size() == 100);
    for (double v : u) CHECK(v == 0.0);

    net.biases.back()[0] = 0.25;
    auto [centers2, u2] = snapshot(net, prob, 1.0, 100);
    for (double v : u2) CHECK(v == 0.25);
    for (const auto& c : centers2) {
        CHECK(c[0] >= prob.space_box[0][0]);
        CHECK(c[0] <= prob.space_box[0][1]);
    }

    // 2d: ceil(sqrt(90)) = 10 nodes per axis
    MlpParams net2 = xavier_init({3, 4, 1}, 1);
    auto [centers3, u3] = snapshot(net2, example3(), 0.5, 90);
    CHECK(centers3.size() == 100);
}

TEST_CASE("kde_eval: frozen kernel value and mass") {
    const auto m = single_center_model();
    const double x = 0.0;
    CHECK(kde_eval(m, &x) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
    CHECK(kde_eval(m, &x) == doctest::Approx(0.398942).epsilon(1e-6));

    KdeModel zero = m;
    zero.weights = {0.0};
    for (double q : {-1.0, 0.0, 2.0}) CHECK(kde_eval(zero, &q) == 0.0);

    // mass by trapezoid quadrature = (sum u)/n within 1e-3
    KdeModel multi;
    multi.centers = {{-1.0}, {0.5}, {2.0}};
    multi.weights = {0.5, 1.5, 1.0};
    multi.bandwidth = 0.7;
    multi.dim = 1;
    double mass = 0.0;
    const int n = 20000;
    const double lo = -12.0, hi = 14.0, dx = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        const double q = lo + i * dx;
        mass += kde_eval(multi, &q) * ((i == 0 || i == n) ? 0.5 : 1.0);
    }
    mass *= dx;
    CHECK(mass == doctest::Approx(3.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("categorical_weights: normalization, zeros, degenerate error") {
    const auto m = single_center_model();
    // symmetric candidates around the center get equal weights
    const std::vector<std::vector<double>> sym{{-0.5}, {0.5}, {-0.5}, {0.5}};
    const auto a = categorical_weights(m, sym);
    CHECK(a.size() == 4);
    double total = 0.0;
    for (double v : a) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : a) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    // density ratio 3:1 -> weights 0.75 / 0.25
    KdeModel two;
    two.centers = {{0.0}};
    two.weights = {1.0};
    two.bandwidth = 1.0;
    two.dim = 1;
    const double d1 = kde_eval(two, std::vector<double>{0.0}.data());
    double x2 = std::sqrt(2.0 * std::log(3.0));  // kde(x2) = d1/3
    const std::vector<std::vector<double>> pair{{0.0}, {x2}};
    const auto b = categorical_weights(two, pair);
    CHECK(b[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(b[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(d1 > 0.0);

    KdeModel zero = m;
    zero.weights = {0.0};
    CHECK_THROWS_AS(categorical_weights(zero, sym), DegenerateSampleError);
}

TEST_CASE("categorical frequencies track the weights within 3 sigma over 1e5 draws") {
    // mirror the resampling draw: cumulative weights + uniform inversion
    KdeModel m;
    m.centers = {{-1.0}, {1.0}};
    m.weights = {3.0, 1.0};
    m.bandwidth = 0.8;
    m.dim = 1;
    const std::vector<std::vector<double>> cands{{-1.2}, {-0.8}, {0.9}, {1.4}};
    const auto alpha = categorical_weights(m, cands);

    std::vector<double> cum(alpha.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        acc += alpha[i];
        cum[i] = acc;
    }
    const int draws = 100000;
    std::vector<int> counts(alpha.size(), 0);
    Rng rng(12345);
    for (int i = 0; i < draws; ++i) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        counts[static_cast<std::size_t>(it - cum.begin())]++;
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double freq = counts[i] / static_cast<double>(draws);
        const double sigma = std::sqrt(alpha[i] * (1.0 - alpha[i]) / draws);
        CHECK(std::fabs(freq - alpha[i]) <= 3.0 * sigma);
    }
}

TEST_CASE("resample_slice: uniqueness, support, determinism") {
    KdeModel m;
    m.centers = {{0.0}};
    m.weights = {1.0};
    m.bandwidth = 0.5;
    m.dim = 1;
    const std::vector<std::array<double, 2>> box{{-3.0, 3.0}};

    const auto pts = resample_slice(m, box, 100, 10, 7);
    CHECK(pts.size() == 10);
    std::set<double> uniq;
    for (const auto& p : pts) {
        uniq.insert(p[0]);
        CHECK(p[0] >= -3.0);
        CHECK(p[0] <= 3.0);
    }
    CHECK(uniq.size() == 10);

    const auto again = resample_slice(m, box, 100, 10, 7);
    CHECK(again == pts);
    const auto other = resample_slice(m, box, 100, 10, 8);
    CHECK(other != pts);

    CHECK_THROWS_AS(resample_slice(m, box, 5, 10, 7), ConfigError);
}

TEST_CASE("resample_slice: draws concentrate where the density lives") {
    // a tight kernel at +2: nearly all resampled points land near +2
    KdeModel m;
    m.centers = {{2.0}};
    m.weights = {1.0};
    m.bandwidth = 0.1;
    m.dim = 1;
    const std::vector<std::array<double, 2>> box{{-3.0, 3.0}};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto pts = resample_slice(m, box, 400, 5, seed);
        for (const auto& p : pts) CHECK(std::fabs(p[0] - 2.0) < 1.0);
    }
}

TEST_CASE("mixture: per-slice split sizes and pass-through") {
    const auto prob = example1();
    for (const auto [n, beta, from_res] :
         {std::tuple{50, 0.5, 25}, std::tuple{60, 0.6, 36}, std::tuple{40, 0.7, 28}}) {
        const auto base = base_points(prob, n, 4, 8, 10, 100);
        auto resampled = base_points(prob, n, 4, 8, 10, 200);
        for (auto& s : resampled.residual_slices)
            for (auto& x : s.x) x[0] = 5.9;  // marker: resampled points sit near the edge
        const auto mixed = mixture(resampled, base, beta, 42);
        CHECK(mixed.residual_slices.size() == 4);
        for (std::size_t si = 0; si < mixed.residual_slices.size(); ++si) {
            const auto& s = mixed.residual_slices[si];
            CHECK(static_cast<int>(s.x.size()) == n);
            int marked = 0;
            for (const auto& x : s.x) marked += (x[0] == 5.9) ? 1 : 0;
            CHECK(marked == from_res);
            CHECK(s.t == base.residual_slices[si].t);
        }
        CHECK(mixed.n_boundary() == base.n_boundary());
        CHECK(mixed.boundary[0].x == base.boundary[0].x);
        CHECK(mixed.initial[0].x == base.initial[0].x);
        CHECK(mixed.n_initial() == base.n_initial());
    }
}

TEST_CASE("mixture: determinism and structure mismatch error") {
    const auto prob = example1();
    const auto base = base_points(prob, 10, 3, 4, 5, 1);
    const auto resampled = base_points(prob, 10, 3, 4, 5, 2);
    const auto a = mixture(resampled, base, 0.5, 9);
    const auto b = mixture(resampled, base, 0.5, 9);
    for (std::size_t i = 0; i < a.residual_slices.size(); ++i)
        CHECK(a.residual_slices[i].x == b.residual_slices[i].x);

    const auto wrong = base_points(prob, 10, 4, 4, 5, 3);
    CHECK_THROWS_AS(mixture(wrong, base, 0.5, 9), ConfigError);
}

TEST_CASE("fit_weighted_kde wires snapshot output into a model") {
    std::vector<std::vector<double>> centers{{-1.0}, {0.0}, {1.0}, {2.0}};
    std::vector<double> weights{0.1, 0.9, 0.4, 0.0};
    const auto model = fit_weighted_kde(centers, weights);
    CHECK(model.dim == 1);
    CHECK(model.bandwidth == doctest::Approx(scott_bandwidth(centers)).epsilon(1e-12));
    CHECK(model.centers == centers);
    CHECK(model.weights == weights);
}
