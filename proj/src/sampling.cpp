#include "fpk/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpk/errors.hpp"
#include "fpk/rng.hpp"

namespace fpk {

std::vector<SpacetimePoint> PointSet::residual_flat() const {
    std::vector<SpacetimePoint> out;
    out.reserve(n_residual());
    for (const auto& s : residual_slices)
        for (const auto& x : s.x) out.push_back(SpacetimePoint{x, s.t});
    return out;
}

PointSet base_points(const FpkProblem& problem, int n_per_slice, int time_slices,
                     int n_boundary, int n_initial, std::uint64_t seed) {
    if (n_per_slice <= 0 || time_slices <= 0 || n_boundary <= 0 || n_initial <= 0)
        throw ConfigError("base_points: all counts must be positive");
    const int d = problem.dim;
    const double dt = (problem.t1 - problem.t0) / time_slices;

    PointSet set;
    set.residual_slices.resize(time_slices);
    for (int m = 0; m < time_slices; ++m) {
        Rng rng(derive_seed(seed, 1000 + m));
        Slice& slice = set.residual_slices[m];
        slice.t = problem.t0 + (m + 1) * dt;
        slice.x.resize(n_per_slice);
        for (auto& x : slice.x) {
            x.resize(d);
            for (int i = 0; i < d; ++i)
                x[i] = rng.uniform(problem.space_box[i][0], problem.space_box[i][1]);
        }
    }

    // boundary: pick a face with probability proportional to its measure,
    // then uniform on the face and uniform in time
    {
        Rng rng(derive_seed(seed, 2));
        std::vector<double> face_measure(2 * d, 1.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (j != i) {
                    face_measure[2 * i] *= problem.space_box[j][1] - problem.space_box[j][0];
                    face_measure[2 * i + 1] = face_measure[2 * i];
                }
        const double total = std::accumulate(face_measure.begin(), face_measure.end(), 0.0);
        set.boundary.resize(n_boundary);
        for (auto& p : set.boundary) {
            double u = rng.uniform() * total;
            int face = 0;
            while (face + 1 < 2 * d && u > face_measure[face]) {
                u -= face_measure[face];
                ++face;
            }
            const int axis = face / 2;
            p.x.resize(d);
            for (int i = 0; i < d; ++i)
                p.x[i] = rng.uniform(problem.space_box[i][0], problem.space_box[i][1]);
            p.x[axis] = problem.space_box[axis][face % 2];
            p.t = rng.uniform(problem.t0, problem.t1);
        }
    }

    {
        Rng rng(derive_seed(seed, 3));
        set.initial.resize(n_initial);
        for (auto& p : set.initial) {
            p.x.resize(d);
            for (int i = 0; i < d; ++i)
                p.x[i] = rng.uniform(problem.space_box[i][0], problem.space_box[i][1]);
            p.t = problem.t0;
        }
    }
    return set;
}

double scott_bandwidth(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    if (n < 2) throw DegenerateSampleError("scott_bandwidth: need at least 2 points");
    const int d = static_cast<int>(points.front().size());
    std::vector<double> mean(d, 0.0);
    for (const auto& p : points)
        for (int i = 0; i < d; ++i) mean[i] += p[i];
    for (int i = 0; i < d; ++i) mean[i] /= static_cast<double>(n);
    double ssq = 0.0;
    for (const auto& p : points)
        for (int i = 0; i < d; ++i) {
            const double z = p[i] - mean[i];
            ssq += z * z;
        }
    const double sigma = std::sqrt(ssq / static_cast<double>(n));
    if (sigma == 0.0)
        throw DegenerateSampleError("scott_bandwidth: zero variance sample");
    return sigma * std::pow(static_cast<double>(n), -1.0 / (d + 4));
}

std::pair<std::vector<std::vector<double>>, std::vector<double>>
snapshot(const MlpParams& params, const FpkProblem& problem, double t, int n) {
    const int d = problem.dim;
    const int per_axis = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 1.0 / d)));
    std::vector<std::vector<double>> centers;
    std::vector<double> weights;
    std::vector<double> point(d + 1, 0.0);
    point[d] = t;

    std::vector<int> idx(d, 0);
    const long total = static_cast<long>(std::pow(static_cast<double>(per_axis), d));
    centers.reserve(total);
    for (long c = 0; c < total; ++c) {
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) {
            const auto& box = problem.space_box[i];
            x[i] = per_axis == 1
                       ? 0.5 * (box[0] + box[1])
                       : box[0] + (box[1] - box[0]) * idx[i] / (per_axis - 1);
        }
        std::copy(x.begin(), x.end(), point.begin());
        const double u = forward(params, point);
        centers.push_back(std::move(x));
        weights.push_back(std::max(u, 0.0));  // clamp: KDE weights must be >= 0
        for (int i = 0; i < d; ++i) {
            if (++idx[i] < per_axis) break;
            idx[i] = 0;
        }
    }
    return {std::move(centers), std::move(weights)};
}

KdeModel fit_weighted_kde(std::vector<std::vector<double>> centers,
                          std::vector<double> weights) {
    if (centers.size() != weights.size())
        throw ShapeError("fit_weighted_kde: centers/weights length mismatch");
    KdeModel model;
    model.dim = static_cast<int>(centers.front().size());
    model.bandwidth = scott_bandwidth(centers);
    model.centers = std::move(centers);
    model.weights = std::move(weights);
    return model;
}

double kde_eval(const KdeModel& model, const double* x) {
    const int d = model.dim;
    const std::size_t n = model.centers.size();
    const double h = model.bandwidth;
    const double inv_2h2 = 1.0 / (2.0 * h * h);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (model.weights[i] == 0.0) continue;
        double dist2 = 0.0;
        const double* c = model.centers[i].data();
        for (int k = 0; k < d; ++k) {
            const double z = x[k] - c[k];
            dist2 += z * z;
        }
        acc += model.weights[i] * std::exp(-dist2 * inv_2h2);
    }
    const double norm = std::pow(2.0 * M_PI, -0.5 * d) / (static_cast<double>(n) * std::pow(h, d));
    return acc * norm;
}

std::vector<double> categorical_weights(const KdeModel& model,
                                        const std::vector<std::vector<double>>& candidates) {
    std::vector<double> alpha(candidates.size());
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        alpha[i] = kde_eval(model, candidates[i].data());
        total += alpha[i];
    }
    if (total <= 0.0)
        throw DegenerateSampleError("categorical_weights: density vanishes on all candidates");
    for (auto& a : alpha) a /= total;
    return alpha;
}

std::vector<std::vector<double>> resample_slice(const KdeModel& model,
                                                const std::vector<std::array<double, 2>>& box,
                                                int n_candidates, int n, std::uint64_t seed) {
    if (n_candidates < n)
        throw ConfigError("resample_slice: candidate pool smaller than requested sample");
    const int d = static_cast<int>(box.size());
    Rng rng(seed);
    std::vector<std::vector<double>> candidates(n_candidates);
    for (auto& y : candidates) {
        y.resize(d);
        for (int i = 0; i < d; ++i) y[i] = rng.uniform(box[i][0], box[i][1]);
    }
    const std::vector<double> alpha = categorical_weights(model, candidates);

    int positive = 0;
    for (double a : alpha)
        if (a > 0.0) ++positive;
    if (positive < n)
        throw DegenerateSampleError("resample_slice: fewer positive-weight candidates than n");

    std::vector<double> cumulative(alpha.size());
    std::partial_sum(alpha.begin(), alpha.end(), cumulative.begin());
    cumulative.back() = 1.0;

    std::vector<char> taken(alpha.size(), 0);
    std::vector<std::vector<double>> out;
    out.reserve(n);
    while (static_cast<int>(out.size()) < n) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t j = static_cast<std::size_t>(it - cumulative.begin());
        // guard against landing on a zero-probability bin at a cumulative tie
        while (j < alpha.size() && alpha[j] == 0.0) ++j;
        if (j >= alpha.size()) continue;
        if (!taken[j]) {
            taken[j] = 1;
            out.push_back(candidates[j]);
        }
    }
    return out;
}

PointSet mixture(const PointSet& resampled, const PointSet& base, double beta,
                 std::uint64_t seed) {
    if (resampled.residual_slices.size() != base.residual_slices.size())
        throw ConfigError("mixture: slice count mismatch");
    PointSet out;
    out.boundary = base.boundary;
    out.initial = base.initial;
    out.residual_slices.resize(base.residual_slices.size());
    for (std::size_t m = 0; m < base.residual_slices.size(); ++m) {
        const Slice& rs = resampled.residual_slices[m];
        const Slice& bs = base.residual_slices[m];
        if (rs.x.size() != bs.x.size())
            throw ConfigError("mixture: per-slice point count mismatch");
        const int n = static_cast<int>(bs.x.size());
        const int n_r = static_cast<int>(std::floor(beta * n));
        const int n_b = n - n_r;

        Rng rng(derive_seed(seed, 4000 + m));
        auto draw = [&rng](const std::vector<std::vector<double>>& src, int count) {
            // partial Fisher-Yates over an index array: without replacement
            std::vector<std::size_t> idx(src.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::vector<std::vector<double>> picked;
            picked.reserve(count);
            for (int i = 0; i < count; ++i) {
                const std::size_t j = i + rng.below(idx.size() - i);
                std::swap(idx[i], idx[j]);
                picked.push_back(src[idx[i]]);
            }
            return picked;
        };

        Slice& os = out.residual_slices[m];
        os.t = bs.t;
        os.x = draw(rs.x, n_r);
        auto from_base = draw(bs.x, n_b);
        os.x.insert(os.x.end(), from_base.begin(), from_base.end());
    }
    return out;
}

}  // namespace fpk
