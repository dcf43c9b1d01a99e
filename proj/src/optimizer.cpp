#include "kanforge/optimizer.hpp"

#include <cmath>
#include <deque>

namespace kf::lbfgs {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Pair {
    std::vector<double> s, y;
    double rho = 0.0;
};

struct LineSearchOut {
    bool ok = false;
    double alpha = 0.0;
    double f = 0.0;
    std::vector<double> g;
};

// strong Wolfe bracket-and-zoom (Nocedal & Wright alg. 3.5 / 3.6)
LineSearchOut line_search(const Objective& objective, std::span<const double> x,
                          std::span<const double> d, double f0, double dphi0,
                          double init_step, const Options& opts) {
    const std::size_t n = x.size();
    std::vector<double> xt(n), g(n);
    LineSearchOut out;
    out.g.resize(n);

    auto eval = [&](double a, double& phi, double& dphi) {
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + a * d[i];
        phi = objective(xt, g);
        dphi = std::isfinite(phi) ? dot(g, d) : 0.0;
    };
    auto accept = [&](double a, double phi) {
        out.ok = true;
        out.alpha = a;
        out.f = phi;
        out.g = g;
    };

    int evals = 0;
    double a_prev = 0.0, phi_prev = f0, dphi_prev = dphi0;
    double a = init_step;
    double a_lo = 0.0, a_hi = 0.0, phi_lo = f0, phi_hi = f0, dphi_lo = dphi0;
    bool bracketed = false;

    // expansion phase
    while (evals < opts.max_line_search) {
        double phi, dphi;
        eval(a, phi, dphi);
        ++evals;
        if (!std::isfinite(phi)) {
            a = 0.5 * (a_prev + a);  // overshoot into non-finite territory: halve back
            continue;
        }
        if (phi > f0 + opts.c1 * a * dphi0 || (evals > 1 && phi >= phi_prev)) {
            a_lo = a_prev;
            phi_lo = phi_prev;
            dphi_lo = dphi_prev;
            a_hi = a;
            phi_hi = phi;
            bracketed = true;
            break;
        }
        if (std::fabs(dphi) <= -opts.c2 * dphi0) {
            accept(a, phi);
            return out;
        }
        if (dphi >= 0.0) {
            a_lo = a;
            phi_lo = phi;
            dphi_lo = dphi;
            a_hi = a_prev;
            phi_hi = phi_prev;
            bracketed = true;
            break;
        }
        a_prev = a;
        phi_prev = phi;
        dphi_prev = dphi;
        a *= 2.0;
    }
    if (!bracketed) return out;

    // zoom: a_lo always satisfies Armijo with the lowest value seen; trials
    // come from quadratic interpolation, safeguarded toward bisection
    while (evals < opts.max_line_search) {
        const double h = a_hi - a_lo;
        double at = a_lo + 0.5 * h;
        const double curv = (phi_hi - phi_lo - dphi_lo * h) / (h * h);
        if (curv > 0.0) {
            const double interp = a_lo - 0.5 * dphi_lo / curv;
            const double margin = 0.1 * std::fabs(h);
            const double lo_b = std::min(a_lo, a_hi) + margin;
            const double hi_b = std::max(a_lo, a_hi) - margin;
            if (interp > lo_b && interp < hi_b) at = interp;
        }
        double phi, dphi;
        eval(at, phi, dphi);
        ++evals;
        if (!std::isfinite(phi)) {
            a_hi = at;
            phi_hi = phi_lo;  // unusable value; treat as a plain shrink
            continue;
        }
        if (phi > f0 + opts.c1 * at * dphi0 || phi >= phi_lo) {
            a_hi = at;
            phi_hi = phi;
        } else {
            if (std::fabs(dphi) <= -opts.c2 * dphi0) {
                accept(at, phi);
                return out;
            }
            if (dphi * (a_hi - a_lo) >= 0.0) {
                a_hi = a_lo;
                phi_hi = phi_lo;
            }
            a_lo = at;
            phi_lo = phi;
            dphi_lo = dphi;
        }
    }
    return out;
}

}  // namespace

Result minimize(const Objective& objective, std::vector<double> x0, const Options& opts,
                const IterCallback& callback) {
    const std::size_t n = x0.size();
    Result res;
    res.x = std::move(x0);

    std::vector<double> g(n);
    double f = objective(res.x, g);
    if (!std::isfinite(f))
        throw std::runtime_error("lbfgs: objective is not finite at the starting point");
    double gnorm = norm2(g);

    if (gnorm <= opts.grad_tol) {
        res.f = f;
        res.grad_norm = gnorm;
        res.stop_reason = "converged";
        return res;
    }

    std::deque<Pair> history;
    std::vector<double> d(n), q(n), alpha_buf;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        // two-loop recursion: d = -H * g
        q.assign(g.begin(), g.end());
        alpha_buf.assign(history.size(), 0.0);
        for (std::size_t h = history.size(); h-- > 0;) {
            const Pair& p = history[h];
            alpha_buf[h] = p.rho * dot(p.s, q);
            for (std::size_t i = 0; i < n; ++i) q[i] -= alpha_buf[h] * p.y[i];
        }
        double gamma = 1.0;
        if (!history.empty()) {
            const Pair& last = history.back();
            gamma = dot(last.s, last.y) / dot(last.y, last.y);
        }
        for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
        for (std::size_t h = 0; h < history.size(); ++h) {
            const Pair& p = history[h];
            const double beta = p.rho * dot(p.y, q);
            for (std::size_t i = 0; i < n; ++i) q[i] += (alpha_buf[h] - beta) * p.s[i];
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

        double dphi0 = dot(g, d);
        if (dphi0 >= 0.0) {  // stale curvature; fall back to steepest descent
            history.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            dphi0 = -dot(g, g);
        }

        // unscaled steepest-descent directions need a conservative first step
        const double init_step = history.empty() ? 1.0 / std::max(1.0, norm2(d)) : 1.0;
        const LineSearchOut ls = line_search(objective, res.x, d, f, dphi0, init_step, opts);
        if (!ls.ok) {
            res.f = f;
            res.grad_norm = gnorm;
            res.iterations = iter - 1;
            res.stop_reason = "line_search_failed";
            return res;
        }

        StepRecord rec;
        rec.iteration = iter;
        rec.alpha = ls.alpha;
        rec.f_before = f;
        rec.f_after = ls.f;
        rec.dg_before = dphi0;
        rec.dg_after = dot(ls.g, d);
        res.steps.push_back(rec);

        Pair p;
        p.s.resize(n);
        p.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = ls.alpha * d[i];
            p.y[i] = ls.g[i] - g[i];
            res.x[i] += p.s[i];
        }
        const double sy = dot(p.s, p.y);
        if (sy > 1e-10 * norm2(p.s) * norm2(p.y)) {
            p.rho = 1.0 / sy;
            history.push_back(std::move(p));
            if (static_cast<int>(history.size()) > opts.history) history.pop_front();
        }

        f = ls.f;
        g = ls.g;
        gnorm = norm2(g);
        res.iterations = iter;
        if (callback) callback(iter, res.x, f, gnorm);

        if (gnorm <= opts.grad_tol) {
            res.f = f;
            res.grad_norm = gnorm;
            res.stop_reason = "converged";
            return res;
        }
    }

    res.f = f;
    res.grad_norm = gnorm;
    res.stop_reason = "max_iters";
    return res;
}

}  // namespace kf::lbfgs
