#include "kanforge/spline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace kf {

SplineGrid SplineGrid::uniform(int degree, int interior, double lo, double hi) {
    require(degree >= 0, "spline degree must be >= 0");
    require(interior >= 1, "interior interval count must be >= 1");
    require(lo < hi, "spline domain requires lo < hi");
    SplineGrid g;
    g.degree = degree;
    g.interior = interior;
    g.lo = lo;
    g.hi = hi;
    const double h = (hi - lo) / interior;
    g.knots.resize(interior + 2 * degree + 1);
    for (int j = 0; j < static_cast<int>(g.knots.size()); ++j)
        g.knots[j] = lo + (j - degree) * h;
    return g;
}

double SplineGrid::clamp(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("spline input is not finite");
    return std::min(std::max(x, lo), hi);
}

namespace {

// span index s with knots[s] <= x < knots[s+1], restricted to the interior
// intervals [degree, degree+interior-1]
int find_span(const SplineGrid& g, double x) {
    int s = g.degree + static_cast<int>(std::floor((x - g.lo) / g.step()));
    return std::clamp(s, g.degree, g.degree + g.interior - 1);
}

// de Boor triangle: N[0..p] = B_{span-p+j, p}(x)
void deboor_triangle(const std::vector<double>& t, int span, int p, double x, double* N) {
    double left[16], right[16];
    N[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
    }
}

}  // namespace

int basis_window(const SplineGrid& grid, double x, double* vals) {
    require(grid.degree < 16, "spline degree too large");
    const double xc = grid.clamp(x);
    const int s = find_span(grid, xc);
    deboor_triangle(grid.knots, s, grid.degree, xc, vals);
    return s - grid.degree;
}

int basis_window_derivative(const SplineGrid& grid, double x, double* dvals) {
    require(grid.degree < 16, "spline degree too large");
    const int k = grid.degree;
    const double xc = grid.clamp(x);
    const int s = find_span(grid, xc);
    if (k == 0) {
        dvals[0] = 0.0;
        return s;
    }
    // derivative identity through the degree k-1 window at the same span
    double low[16];
    deboor_triangle(grid.knots, s, k - 1, xc, low);  // low[j] = B_{s-k+1+j, k-1}
    const auto& t = grid.knots;
    for (int m = 0; m <= k; ++m) {
        const int i = s - k + m;
        const double a = (m > 0) ? low[m - 1] / (t[i + k] - t[i]) : 0.0;
        const double b = (m < k) ? low[m] / (t[i + k + 1] - t[i + 1]) : 0.0;
        dvals[m] = k * (a - b);
    }
    return s - k;
}

std::vector<double> basis_eval(const SplineGrid& grid, double x) {
    std::vector<double> out(grid.basis_count(), 0.0);
    double w[17];
    const int first = basis_window(grid, x, w);
    for (int j = 0; j <= grid.degree; ++j) out[first + j] = w[j];
    return out;
}

std::vector<double> basis_derivative(const SplineGrid& grid, double x) {
    std::vector<double> out(grid.basis_count(), 0.0);
    double w[17];
    const int first = basis_window_derivative(grid, x, w);
    for (int j = 0; j <= grid.degree; ++j) out[first + j] = w[j];
    return out;
}

double SplineFunction::eval(double x) const {
    double w[17];
    const int first = basis_window(grid, x, w);
    double acc = 0.0;
    for (int j = 0; j <= grid.degree; ++j) acc += coeffs[first + j] * w[j];
    return acc;
}

double SplineFunction::deriv(double x) const {
    double w[17];
    const int first = basis_window_derivative(grid, x, w);
    double acc = 0.0;
    for (int j = 0; j <= grid.degree; ++j) acc += coeffs[first + j] * w[j];
    return acc;
}

SplineFit fit_coefficients(const SplineGrid& grid,
                           std::span<const double> xs,
                           std::span<const double> ys) {
    require(xs.size() == ys.size(), "fit_coefficients: xs and ys must have equal length");
    const int m = grid.basis_count();
    require(xs.size() >= static_cast<std::size_t>(m),
            "fit_coefficients: need at least basis_count samples");

    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd b(n);
    double w[17];
    for (Eigen::Index r = 0; r < n; ++r) {
        const int first = basis_window(grid, xs[r], w);
        for (int j = 0; j <= grid.degree; ++j) A(r, first + j) = w[j];
        b(r) = ys[r];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd c = svd.solve(b);  // least-norm solution when rank-deficient

    SplineFit fit;
    fit.fn.grid = grid;
    fit.fn.coeffs.assign(c.data(), c.data() + m);
    fit.degenerate = svd.rank() < m;
    return fit;
}

SplineFunction extend_grid(const SplineFunction& fn, int new_interior) {
    if (new_interior < fn.grid.interior)
        throw std::invalid_argument("extend_grid: new interior count below current grid");
    const SplineGrid fine =
        SplineGrid::uniform(fn.grid.degree, new_interior, fn.grid.lo, fn.grid.hi);
    const int n = 10 * fine.basis_count();
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = fn.grid.lo + (fn.grid.hi - fn.grid.lo) * i / (n - 1);
        ys[i] = fn.eval(xs[i]);
    }
    return fit_coefficients(fine, xs, ys).fn;
}

}  // namespace kf
