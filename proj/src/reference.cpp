#include "fpk/reference.hpp"

#include <algorithm>
#include <cmath>

#include "fpk/errors.hpp"
#include "fpk/sampling.hpp"

namespace fpk {

namespace {

constexpr double kExplosionBound = 1e12;

bool state_ok(const double* x, int d) {
    for (int k = 0; k < d; ++k)
        if (!std::isfinite(x[k]) || std::fabs(x[k]) > kExplosionBound) return false;
    return true;
}

PathEnsemble simulate(const SdeSpec& spec, double duration, int n_steps, int n_paths,
                      std::uint64_t seed, bool use_milstein) {
    if (n_steps < 1 || n_paths < 1)
        throw ConfigError("simulate: n_steps and n_paths must be >= 1");
    if (use_milstein) {
        if (spec.dim != 1) throw ConfigError("milstein: scalar SDEs only");
        if (!spec.sigma_x) throw ConfigError("milstein: sigma_x not supplied");
    }
    const int d = spec.dim;
    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.n_steps = n_steps;
    ens.dim = d;
    ens.dt = duration / n_steps;
    ens.t_start = spec.t_start;
    ens.values.assign(static_cast<std::size_t>(n_paths) * (n_steps + 1) * d, 0.0);
    ens.alive.assign(n_paths, 1);

    const double sqdt = std::sqrt(ens.dt);
    std::vector<double> z(d), x(d), next(d), b(d);
    std::vector<double> sigma(static_cast<std::size_t>(d) * d);
    for (int p = 0; p < n_paths; ++p) {
        Rng rng(derive_seed(seed, 500000 + static_cast<std::uint64_t>(p)));
        double* path = ens.values.data() + static_cast<std::size_t>(p) * (n_steps + 1) * d;
        spec.initial(rng, path);
        if (!state_ok(path, d)) {
            ens.alive[p] = 0;
            ens.n_exploded += 1;
            continue;
        }
        std::copy(path, path + d, x.begin());
        for (int i = 0; i < n_steps; ++i) {
            const double t = spec.t_start + ens.dt * i;
            for (int k = 0; k < d; ++k) z[k] = rng.normal();
            spec.drift(x.data(), t, b.data());
            spec.diffusion(x.data(), t, sigma.data());
            for (int r = 0; r < d; ++r) {
                double acc = x[r] + b[r] * ens.dt;
                for (int c = 0; c < d; ++c)
                    acc += sigma[static_cast<std::size_t>(r) * d + c] * sqdt * z[c];
                next[r] = acc;
            }
            if (use_milstein) {
                const double db = sqdt * z[0];
                next[0] += 0.5 * sigma[0] * spec.sigma_x(x[0], t) * (db * db - ens.dt);
            }
            double* dst = path + static_cast<std::size_t>(i + 1) * d;
            if (!state_ok(next.data(), d)) {
                ens.alive[p] = 0;
                ens.n_exploded += 1;
                // freeze the rest of the path at the last finite state
                for (int j = i + 1; j <= n_steps; ++j)
                    std::copy(x.begin(), x.end(),
                              path + static_cast<std::size_t>(j) * d);
                break;
            }
            std::copy(next.begin(), next.end(), dst);
            x.swap(next);
        }
    }
    return ens;
}

}  // namespace

void em_step(const SdeSpec& spec, const double* x, double t, double dt,
             const double* z, double* out) {
    const int d = spec.dim;
    std::vector<double> b(d), sigma(static_cast<std::size_t>(d) * d);
    spec.drift(x, t, b.data());
    spec.diffusion(x, t, sigma.data());
    const double sqdt = std::sqrt(dt);
    for (int i = 0; i < d; ++i) {
        double acc = x[i] + b[i] * dt;
        for (int j = 0; j < d; ++j)
            acc += sigma[static_cast<std::size_t>(i) * d + j] * sqdt * z[j];
        out[i] = acc;
    }
}

void milstein_step(const SdeSpec& spec, double x, double t, double dt, double z,
                   double& out) {
    double b, sigma;
    spec.drift(&x, t, &b);
    spec.diffusion(&x, t, &sigma);
    const double db = std::sqrt(dt) * z;
    out = x + b * dt + sigma * db +
          0.5 * sigma * spec.sigma_x(x, t) * (db * db - dt);
}

PathEnsemble euler_maruyama(const SdeSpec& spec, double duration, int n_steps,
                            int n_paths, std::uint64_t seed) {
    return simulate(spec, duration, n_steps, n_paths, seed, false);
}

PathEnsemble milstein(const SdeSpec& spec, double duration, int n_steps, int n_paths,
                      std::uint64_t seed) {
    return simulate(spec, duration, n_steps, n_paths, seed, true);
}

std::vector<double> empirical_density(const PathEnsemble& ensemble, int t_index,
                                      const std::vector<std::vector<double>>& grid) {
    if (t_index < 0 || t_index > ensemble.n_steps)
        throw ConfigError("empirical_density: time index out of range");
    const int d = ensemble.dim;
    std::vector<std::vector<double>> states;
    states.reserve(ensemble.n_paths);
    for (int p = 0; p < ensemble.n_paths; ++p) {
        if (!ensemble.alive[p]) continue;
        const double* s = ensemble.state(p, t_index);
        states.emplace_back(s, s + d);
    }
    if (states.size() < 2)
        throw DegenerateSampleError("empirical_density: fewer than 2 surviving paths");
    const double h = scott_bandwidth(states);

    // flat center array for the hot loop
    const std::size_t n = states.size();
    std::vector<double> centers(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(states[i].begin(), states[i].end(), centers.begin() + i * d);

    const double inv_2h2 = 1.0 / (2.0 * h * h);
    const double norm =
        std::pow(2.0 * M_PI, -0.5 * d) / (static_cast<double>(n) * std::pow(h, d));
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double* y = grid[g].data();
        double acc = 0.0;
        const double* c = centers.data();
        if (d == 1) {
            const double y0 = y[0];
            for (std::size_t i = 0; i < n; ++i) {
                const double dz = y0 - c[i];
                acc += std::exp(-dz * dz * inv_2h2);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i, c += d) {
                double dist2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double dz = y[k] - c[k];
                    dist2 += dz * dz;
                }
                acc += std::exp(-dist2 * inv_2h2);
            }
        }
        out[g] = acc * norm;
    }
    return out;
}

SdeSpec sde_for_problem(const FpkProblem& problem) {
    SdeSpec spec;
    spec.dim = problem.dim;
    spec.t_start = problem.t0;

    // allocation-free coefficient callbacks for the path-simulation hot loop
    if (problem.name == "example1") {
        spec.drift = [](const double*, double, double* b) { b[0] = 0.5; };
        spec.diffusion = [](const double*, double, double* s) { s[0] = 1.0; };
        spec.sigma_x = [](double, double) { return 0.0; };
    } else if (problem.name == "example2") {
        spec.drift = [](const double* x, double, double* b) {
            b[0] = x[0] - x[0] * x[0] * x[0];
        };
        spec.diffusion = [](const double*, double, double* s) { s[0] = 1.0; };
        spec.sigma_x = [](double, double) { return 0.0; };
    } else if (problem.name == "example3") {
        spec.drift = [](const double*, double, double* b) { b[0] = b[1] = 0.0; };
        spec.diffusion = [](const double*, double, double* s) {
            s[0] = 1.0; s[1] = 0.0; s[2] = 0.0; s[3] = 1.0;
        };
    } else if (problem.name == "example4") {
        // sigma_y = sqrt(0.4) so the ensemble is consistent with the
        // coefficient 0.2 in the printed FPK equation
        spec.drift = [](const double* x, double, double* b) {
            b[0] = x[1];
            b[1] = x[0] - 0.4 * x[1] - 0.1 * x[0] * x[0] * x[0];
        };
        spec.diffusion = [sy = std::sqrt(0.4)](const double*, double, double* s) {
            s[0] = 0.0; s[1] = 0.0; s[2] = 0.0; s[3] = sy;
        };
    } else if (problem.name == "gbm") {
        spec.drift = [](const double* x, double, double* b) { b[0] = 0.3430 * x[0]; };
        spec.diffusion = [](const double* x, double, double* s) { s[0] = 0.5693 * x[0]; };
        spec.sigma_x = [](double, double) { return 0.5693; };
    } else {
        throw ConfigError("sde_for_problem: no SDE companion for " + problem.name);
    }

    // exact rejection sampler from the initial density over the space box
    const auto box = problem.space_box;
    const auto density = problem.initial_density;
    const int d = problem.dim;
    double dmax = 0.0;
    {
        const int per_axis = d == 1 ? 4096 : 256;
        std::vector<int> idx(d, 0);
        std::vector<double> x(d);
        long total = 1;
        for (int i = 0; i < d; ++i) total *= per_axis;
        for (long c = 0; c < total; ++c) {
            for (int i = 0; i < d; ++i)
                x[i] = box[i][0] + (box[i][1] - box[i][0]) * (idx[i] + 0.5) / per_axis;
            dmax = std::max(dmax, density(x.data()));
            for (int i = 0; i < d; ++i) {
                if (++idx[i] < per_axis) break;
                idx[i] = 0;
            }
        }
        dmax *= 1.05;  // headroom over the grid-scan maximum
    }
    spec.initial = [box, density, d, dmax](Rng& rng, double* x0) {
        while (true) {
            for (int i = 0; i < d; ++i) x0[i] = rng.uniform(box[i][0], box[i][1]);
            if (rng.uniform() * dmax <= density(x0)) return;
        }
    };
    return spec;
}

std::vector<double> reference_grid(const FpkProblem& problem,
                                   const std::vector<std::vector<double>>& space_grid,
                                   const std::vector<double>& time_grid,
                                   const ReferenceOptions& options,
                                   std::uint64_t seed) {
    std::vector<double> out(space_grid.size() * time_grid.size());
    if (problem.exact_solution) {
        for (std::size_t ti = 0; ti < time_grid.size(); ++ti)
            for (std::size_t i = 0; i < space_grid.size(); ++i)
                out[ti * space_grid.size() + i] =
                    problem.exact_solution(space_grid[i].data(), time_grid[ti]);
        return out;
    }
    if (options.scheme == "milstein" && problem.dim != 1)
        throw ConfigError("reference_grid: milstein scheme is 1-d only");
    const SdeSpec spec = sde_for_problem(problem);
    const double duration = problem.t1 - problem.t0;
    const PathEnsemble ens =
        options.scheme == "milstein"
            ? milstein(spec, duration, options.n_steps, options.n_paths, seed)
            : euler_maruyama(spec, duration, options.n_steps, options.n_paths, seed);
    for (std::size_t ti = 0; ti < time_grid.size(); ++ti) {
        const int index = static_cast<int>(
            std::lround((time_grid[ti] - problem.t0) / ens.dt));
        const auto density =
            empirical_density(ens, std::clamp(index, 0, ens.n_steps), space_grid);
        std::copy(density.begin(), density.end(), out.begin() + ti * space_grid.size());
    }
    return out;
}

}  // namespace fpk
