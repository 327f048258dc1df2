#pragma once

#include <cstdint>
#include <vector>

#include "fpk/net.hpp"
#include "fpk/problems.hpp"

namespace fpk {

// Residual collocation points of one time level.
struct Slice {
    double t = 0.0;
    std::vector<std::vector<double>> x;  // n points in R^d
};

// Collocation sets D_r (sliced), D_b (boundary faces), D_0 (t = t0).
struct PointSet {
    std::vector<Slice> residual_slices;
    std::vector<SpacetimePoint> boundary;
    std::vector<SpacetimePoint> initial;

    std::size_t n_residual() const {
        std::size_t n = 0;
        for (const auto& s : residual_slices) n += s.x.size();
        return n;
    }
    std::size_t n_boundary() const { return boundary.size(); }
    std::size_t n_initial() const { return initial.size(); }

    // Residual points flattened in slice-major order.
    std::vector<SpacetimePoint> residual_flat() const;
};

// Weighted Gaussian kernel density estimate over spatial points:
//   p(x) = 1/(n h^d) sum_i u_i (2 pi)^(-d/2) exp(-|x - x_i|^2 / (2 h^2))
struct KdeModel {
    std::vector<std::vector<double>> centers;
    std::vector<double> weights;  // u_i >= 0
    double bandwidth = 0.0;
    int dim = 1;
};

// Uniform base collocation set: n_per_slice interior points at each of M
// equally spaced time levels spanning (t0, t1]; boundary points uniform over
// the box faces and uniform in time; initial points uniform at t = t0.
PointSet base_points(const FpkProblem& problem, int n_per_slice, int time_slices,
                     int n_boundary, int n_initial, std::uint64_t seed);

// Scott's rule with pooled standard deviation:
//   sigma = sqrt(mean |x_i - xbar|^2), h = sigma * n^(-1/(d+4))
double scott_bandwidth(const std::vector<std::vector<double>>& points);

// Network marginal snapshot at time t: centers on a uniform tensor grid over
// the space box (ceil(n^(1/d)) nodes per axis), weights u_i = max(p_hat, 0).
std::pair<std::vector<std::vector<double>>, std::vector<double>>
snapshot(const MlpParams& params, const FpkProblem& problem, double t, int n);

// Snapshot followed by bandwidth selection over the snapshot centers.
KdeModel fit_weighted_kde(std::vector<std::vector<double>> centers, std::vector<double> weights);

double kde_eval(const KdeModel& model, const double* x);

// Normalized categorical weights alpha(y_j) = p(y_j) / sum_i p(y_i).
// Throws DegenerateSampleError when the density vanishes on all candidates.
std::vector<double> categorical_weights(const KdeModel& model,
                                        const std::vector<std::vector<double>>& candidates);

// Draws N uniform candidates in the box, then categorical indices until n
// unique candidates are collected. Deterministic per seed.
std::vector<std::vector<double>> resample_slice(const KdeModel& model,
                                                const std::vector<std::array<double, 2>>& box,
                                                int n_candidates, int n, std::uint64_t seed);

// Per slice: floor(beta*n) points drawn without replacement from the
// resampled slice, the rest from the base slice. Boundary and initial sets
// pass through from `base` unchanged.
PointSet mixture(const PointSet& resampled, const PointSet& base, double beta,
                 std::uint64_t seed);

}  // namespace fpk
