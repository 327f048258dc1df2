#include "fpk/problems.hpp"

#include <cmath>

#include "fpk/errors.hpp"

namespace fpk {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double gaussian_1d(double x, double mean, double var) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / var) / std::sqrt(kTwoPi * var);
}

DriftEval constant_drift_1d(double mu) {
    return DriftEval{{mu}, {0.0}};
}

DiffusionEval constant_diffusion(std::vector<double> mat, int d) {
    return DiffusionEval{std::move(mat), std::vector<double>(d, 0.0), 0.0};
}

}  // namespace

double FpkProblem::spatial_volume() const {
    double v = 1.0;
    for (const auto& iv : space_box) v *= iv[1] - iv[0];
    return v;
}

ResidualCoeffs residual_coeffs(const FpkProblem& problem, const SpacetimePoint& point) {
    const int d = problem.dim;
    if (static_cast<int>(point.x.size()) != d)
        throw ShapeError("residual_coeffs: point dimension mismatch");
    const DriftEval drift = problem.drift(point.x.data(), point.t);
    const DiffusionEval diff = problem.diffusion(point.x.data(), point.t);

    ResidualCoeffs c;
    c.time = 1.0;
    c.value = drift.divergence(d) - 0.5 * diff.second_sum;
    c.grad.resize(d);
    for (int k = 0; k < d; ++k) c.grad[k] = drift.b[k] - diff.div_col[k];
    c.hess.reserve(static_cast<std::size_t>(d) * (d + 1) / 2);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            const double dij = diff.mat[static_cast<std::size_t>(i) * d + j];
            c.hess.push_back(i == j ? -0.5 * dij : -dij);
        }
    return c;
}

double fpk_residual(const ResidualCoeffs& coeffs, const Jet& jet) {
    const int d = jet.dim;
    if (static_cast<int>(coeffs.grad.size()) != d)
        throw ShapeError("fpk_residual: jet dimension does not match coefficients");
    double r = coeffs.time * jet.grad[0] + coeffs.value * jet.value;
    for (int k = 0; k < d; ++k) r += coeffs.grad[k] * jet.grad[1 + k];
    for (std::size_t p = 0; p < coeffs.hess.size(); ++p) r += coeffs.hess[p] * jet.hess[p];
    return r;
}

double fpk_residual(const FpkProblem& problem, const Jet& jet, const SpacetimePoint& point) {
    return fpk_residual(residual_coeffs(problem, point), jet);
}

FpkProblem example1() {
    // dX = mu dt + sigma dB with mu = 0.5, sigma = 1 (read off the printed
    // exact solution: mean (t+0.2)/2, variance t+0.2)
    FpkProblem p;
    p.name = "example1";
    p.dim = 1;
    p.drift = [](const double*, double) { return constant_drift_1d(0.5); };
    p.diffusion = [](const double*, double) { return constant_diffusion({1.0}, 1); };
    p.space_box = {{-6.0, 6.0}};
    p.t0 = 0.0;
    p.t1 = 3.0;
    p.c_t = 3.0;
    p.initial_density = [](const double* x) { return gaussian_1d(x[0], 0.1, 0.2); };
    p.exact_solution = [](const double* x, double t) {
        return gaussian_1d(x[0], 0.5 * (t + 0.2), t + 0.2);
    };
    return p;
}

FpkProblem example2() {
    // dX = (X - X^3) dt + dB, bimodal double-well potential
    FpkProblem p;
    p.name = "example2";
    p.dim = 1;
    p.drift = [](const double* x, double) {
        return DriftEval{{x[0] - x[0] * x[0] * x[0]}, {1.0 - 3.0 * x[0] * x[0]}};
    };
    p.diffusion = [](const double*, double) { return constant_diffusion({1.0}, 1); };
    p.space_box = {{-2.5, 2.5}};
    p.t0 = 0.2;
    p.t1 = 3.2;
    p.c_t = 3.0;
    p.initial_density = [](const double* x) { return gaussian_1d(x[0], 0.0, 0.2); };
    return p;
}

FpkProblem example3() {
    // 2-d heat equation p_t = (1/2) Laplacian(p)
    FpkProblem p;
    p.name = "example3";
    p.dim = 2;
    p.drift = [](const double*, double) {
        return DriftEval{{0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
    };
    p.diffusion = [](const double*, double) {
        return constant_diffusion({1.0, 0.0, 0.0, 1.0}, 2);
    };
    p.space_box = {{0.0, 6.0}, {0.0, 6.0}};
    p.t0 = 0.0;
    p.t1 = 1.0;
    p.c_t = 1.0;
    p.initial_density = [](const double* x) {
        const double dx = x[0] - 4.0;
        const double dy = x[1] - 4.0;
        return std::exp(-0.5 * (dx * dx + dy * dy)) / kTwoPi;
    };
    p.exact_solution = [](const double* x, double t) {
        const double var = 1.0 + t;
        const double dx = x[0] - 4.0;
        const double dy = x[1] - 4.0;
        return std::exp(-0.5 * (dx * dx + dy * dy) / var) / (kTwoPi * var);
    };
    return p;
}

FpkProblem example4() {
    // nonlinear oscillator, drift (y, x - 0.4 y - 0.1 x^3); the printed PDE
    // has diffusion coefficient 0.2 * p_yy, i.e. D_yy = 0.4
    FpkProblem p;
    p.name = "example4";
    p.dim = 2;
    p.drift = [](const double* x, double) {
        DriftEval d;
        d.b = {x[1], x[0] - 0.4 * x[1] - 0.1 * x[0] * x[0] * x[0]};
        // row-major Jacobian: [[0, 1], [1 - 0.3 x^2, -0.4]]
        d.jac = {0.0, 1.0, 1.0 - 0.3 * x[0] * x[0], -0.4};
        return d;
    };
    p.diffusion = [](const double*, double) {
        return constant_diffusion({0.0, 0.0, 0.0, 0.4}, 2);
    };
    p.space_box = {{-4.0, 6.0}, {-6.0, 9.0}};
    p.t0 = 0.0;
    p.t1 = 1.0;
    p.c_t = 1.0;
    p.initial_density = [](const double* x) {
        const double dx = x[0];
        const double dy = x[1] - 5.0;
        return std::exp(-0.5 * (dx * dx + dy * dy)) / kTwoPi;
    };
    return p;
}

FpkProblem gbm_problem() {
    // geometric Brownian motion fitted to stock data; initial density is the
    // log-normal solution shifted to t0 = 0.2
    constexpr double mu = 0.3430;
    constexpr double sigma = 0.5693;
    constexpr double x0 = 13.54;
    constexpr double t_shift = 0.2;

    auto lognormal = [](double x, double t_eff) {
        if (x <= 0.0) return 0.0;
        const double m = (mu - 0.5 * sigma * sigma) * t_eff;
        const double z = std::log(x / x0) - m;
        const double var = sigma * sigma * t_eff;
        return std::exp(-0.5 * z * z / var) / (x * sigma * std::sqrt(kTwoPi * t_eff));
    };

    FpkProblem p;
    p.name = "gbm";
    p.dim = 1;
    p.drift = [](const double* x, double) {
        return DriftEval{{mu * x[0]}, {mu}};
    };
    p.diffusion = [](const double* x, double) {
        DiffusionEval d;
        d.mat = {sigma * sigma * x[0] * x[0]};
        d.div_col = {2.0 * sigma * sigma * x[0]};
        d.second_sum = 2.0 * sigma * sigma;
        return d;
    };
    p.space_box = {{0.0, 40.0}};
    p.t0 = 0.0;
    p.t1 = 2.0;
    p.c_t = 2.0;
    p.initial_density = [lognormal](const double* x) { return lognormal(x[0], t_shift); };
    p.exact_solution = [lognormal](const double* x, double t) {
        return lognormal(x[0], t + t_shift);
    };
    return p;
}

FpkProblem problem_by_name(const std::string& name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "example3") return example3();
    if (name == "example4") return example4();
    if (name == "gbm") return gbm_problem();
    throw ConfigError("unknown problem: " + name);
}

std::vector<std::string> problem_names() {
    return {"example1", "example2", "example3", "example4", "gbm"};
}

}  // namespace fpk
