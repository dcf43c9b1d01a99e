#pragma once

#include <vector>

#include "kanforge/common.hpp"

namespace kf {

// Uniform B-spline knot layout: G interior subintervals on [lo, hi] with the
// knot line continued k uniform steps past each end (no repeated boundary
// knots), giving G + 2k + 1 knots and G + k basis functions.
struct SplineGrid {
    int degree = 3;     // k
    int interior = 2;   // G
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> knots;

    static SplineGrid uniform(int degree, int interior, double lo = -1.0, double hi = 1.0);

    int basis_count() const { return interior + degree; }
    double step() const { return (hi - lo) / interior; }

    // clamp into [lo, hi]; throws on non-finite input
    double clamp(double x) const;
};

// Evaluates the degree+1 possibly nonzero basis functions at x (clamped to
// the domain) via the Cox-de Boor / de Boor triangle. `vals` must hold
// degree+1 doubles. Returns the index of the first nonzero basis function.
int basis_window(const SplineGrid& grid, double x, double* vals);

// Same windowing for first derivatives. Out-of-domain x is clamped first, so
// the returned values are the one-sided derivatives at the boundary.
int basis_window_derivative(const SplineGrid& grid, double x, double* dvals);

// Dense variants: full vectors of length basis_count.
std::vector<double> basis_eval(const SplineGrid& grid, double x);
std::vector<double> basis_derivative(const SplineGrid& grid, double x);

struct SplineFunction {
    SplineGrid grid;
    std::vector<double> coeffs;  // length grid.basis_count()

    double eval(double x) const;
    double deriv(double x) const;
};

struct SplineFit {
    SplineFunction fn;
    bool degenerate = false;  // design matrix was rank-deficient; least-norm solution returned
};

// Least-squares projection of samples (xs, ys) onto the basis. Requires at
// least basis_count samples. Rank-deficient designs are solved via the
// least-norm solution with the degenerate flag set.
SplineFit fit_coefficients(const SplineGrid& grid,
                           std::span<const double> xs,
                           std::span<const double> ys);

// Re-fits fn on a finer uniform grid (same domain, same degree) sampled at
// 10 * (new_interior + degree) uniform points. Nested uniform knots make the
// coarse function exactly representable, so values are preserved.
SplineFunction extend_grid(const SplineFunction& fn, int new_interior);

}  // namespace kf
