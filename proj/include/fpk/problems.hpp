#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "fpk/net.hpp"

namespace fpk {

// A collocation coordinate (x_1..x_d, t).
struct SpacetimePoint {
    std::vector<double> x;
    double t = 0.0;
};

// Drift vector b(x, t) together with its spatial Jacobian,
// jac[i*d + j] = db_i/dx_j.
struct DriftEval {
    std::vector<double> b;
    std::vector<double> jac;
    double divergence(int d) const {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += jac[static_cast<std::size_t>(i) * d + i];
        return s;
    }
};

// Diffusion matrix D = sigma sigma^T and the spatial derivatives the
// expanded FPK operator needs: div_col[k] = sum_i dD_ik/dx_i and
// second_sum = sum_{i,j} d^2 D_ij / dx_i dx_j.
struct DiffusionEval {
    std::vector<double> mat;      // d*d, row-major, symmetric
    std::vector<double> div_col;  // length d
    double second_sum = 0.0;
};

// One FPK problem instance: operator coefficients, domain, initial density,
// and (where available) the closed-form solution. Immutable after
// construction; all evaluation functions are pure.
struct FpkProblem {
    std::string name;
    int dim = 1;
    std::function<DriftEval(const double* x, double t)> drift;
    std::function<DiffusionEval(const double* x, double t)> diffusion;
    std::vector<std::array<double, 2>> space_box;  // per-dimension [lo, hi]
    double t0 = 0.0;
    double t1 = 1.0;
    double c_t = 1.0;
    std::function<double(const double* x)> initial_density;
    std::function<double(const double* x, double t)> exact_solution;  // may be empty

    double spatial_volume() const;
    double measure() const { return spatial_volume() * (t1 - t0); }
    // Target value C_T / M(Q) of the normalization constraint.
    double norm_target() const { return c_t / measure(); }
};

// Coefficients of the FPK residual as a linear functional of a Jet:
//   r = time * p_t + value * p + sum_k grad[k] * p_{x_k}
//       + sum_{i<=j} hess[packed(i,j)] * p_{x_i x_j}
// Off-diagonal packed entries carry the combined i,j and j,i contributions.
struct ResidualCoeffs {
    double value = 0.0;
    double time = 1.0;
    std::vector<double> grad;  // length d
    std::vector<double> hess;  // packed upper triangle, length d*(d+1)/2
};

ResidualCoeffs residual_coeffs(const FpkProblem& problem, const SpacetimePoint& point);

// p_t + sum_i d/dx_i(b_i p) - 1/2 sum_{ij} d^2/dx_i dx_j [D_ij p],
// fully expanded by the product rule. Zero means the PDE holds at the point.
double fpk_residual(const FpkProblem& problem, const Jet& jet, const SpacetimePoint& point);
double fpk_residual(const ResidualCoeffs& coeffs, const Jet& jet);

FpkProblem example1();
FpkProblem example2();
FpkProblem example3();
FpkProblem example4();
FpkProblem gbm_problem();

// Lookup by CLI name: "example1".."example4", "gbm".
FpkProblem problem_by_name(const std::string& name);
std::vector<std::string> problem_names();

}  // namespace fpk
