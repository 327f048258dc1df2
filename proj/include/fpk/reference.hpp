#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fpk/problems.hpp"
#include "fpk/rng.hpp"

namespace fpk {

// SDE dX = b(X, t) dt + sigma(X, t) dB. sigma writes a d x d matrix
// (row-major); sigma_x is the spatial derivative of the scalar diffusion,
// required only by the Milstein scheme (d = 1).
struct SdeSpec {
    int dim = 1;
    std::function<void(const double* x, double t, double* b)> drift;
    std::function<void(const double* x, double t, double* sigma)> diffusion;
    std::function<double(double x, double t)> sigma_x;  // scalar case only
    std::function<void(Rng& rng, double* x0)> initial;  // samples X(t_start)
    double t_start = 0.0;
};

// Trajectory ensemble: values[(path * (n_steps+1) + step) * dim + k].
// Paths that leave the finite range are flagged dead and excluded from all
// downstream statistics.
struct PathEnsemble {
    int n_paths = 0;
    int n_steps = 0;
    int dim = 1;
    double dt = 0.0;
    double t_start = 0.0;
    std::vector<double> values;
    std::vector<std::uint8_t> alive;
    int n_exploded = 0;

    const double* state(int path, int step) const {
        return values.data() +
               (static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim;
    }
    double time_at(int step) const { return t_start + dt * step; }
};

// Single integration steps, exposed so tests can drive them with forced
// noise increments. z has length dim (1 for milstein_step).
void em_step(const SdeSpec& spec, const double* x, double t, double dt,
             const double* z, double* out);
void milstein_step(const SdeSpec& spec, double x, double t, double dt, double z,
                   double& out);

// Euler-Maruyama: Y_{i+1} = Y_i + b dt + sigma sqrt(dt) Z_i. Per-path noise
// streams are derived deterministically from the master seed, so the result
// is independent of evaluation order.
PathEnsemble euler_maruyama(const SdeSpec& spec, double duration, int n_steps,
                            int n_paths, std::uint64_t seed);

// Milstein (scalar only): adds (1/2) sigma sigma_x ((dB)^2 - dt). Consumes
// the identical noise stream as euler_maruyama under the same seed.
PathEnsemble milstein(const SdeSpec& spec, double duration, int n_steps, int n_paths,
                      std::uint64_t seed);

// Unweighted Gaussian KDE over the surviving path states at one time index,
// Scott bandwidth, evaluated at `grid` (row-major d-vectors).
std::vector<double> empirical_density(const PathEnsemble& ensemble, int t_index,
                                      const std::vector<std::vector<double>>& grid);

// The SDE companion of an FPK problem (drift/diffusion read off the
// operator; initial states sampled from the initial density).
SdeSpec sde_for_problem(const FpkProblem& problem);

struct ReferenceOptions {
    int n_paths = 200000;
    int n_steps = 1000;
    std::string scheme = "em";  // "em" | "milstein"
};

// Reference values on the tensor grid space_grid x time_grid (row-major,
// time-major: index t * n_space + i). Uses the closed-form solution when the
// problem has one, otherwise a Monte Carlo empirical density.
std::vector<double> reference_grid(const FpkProblem& problem,
                                   const std::vector<std::vector<double>>& space_grid,
                                   const std::vector<double>& time_grid,
                                   const ReferenceOptions& options,
                                   std::uint64_t seed);

}  // namespace fpk
