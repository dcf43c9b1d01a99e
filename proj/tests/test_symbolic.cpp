#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kanforge/kernels.hpp"
#include "kanforge/rng.hpp"
#include "kanforge/symbolic.hpp"

using namespace kf;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1.0);
    return xs;
}

}  // namespace

TEST_CASE("primitive library has nine ranked members") {
    const auto& lib = primitive_library();
    REQUIRE(lib.size() == 9);
    for (std::size_t i = 1; i < lib.size(); ++i) CHECK(lib[i].complexity > lib[i - 1].complexity);
    CHECK(std::string(primitive_name(PrimitiveKind::NegExpDecay)) == "neg_exp_decay");
}

TEST_CASE("fit_affine recovers a tanh parameterization") {
    const auto xs = linspace(-1.0, 1.0, 50);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = 2.0 * std::tanh(3.0 * xs[i] - 1.0) + 0.5;
    const AffineFit fit = fit_affine(primitive(PrimitiveKind::Tanh), xs, ys);
    CHECK(fit.r2 > 0.9999);
    // sign symmetry: (a,b,c) and (-a,-b,-c) describe the same tanh; compare canonically
    const double sgn = fit.wrap.a > 0 ? 1.0 : -1.0;
    CHECK(sgn * fit.wrap.a == doctest::Approx(3.0).epsilon(1e-2));
    CHECK(sgn * fit.wrap.b == doctest::Approx(-1.0).epsilon(2e-2));
    CHECK(sgn * fit.wrap.c == doctest::Approx(2.0).epsilon(1e-2));
    CHECK(fit.wrap.d == doctest::Approx(0.5).epsilon(2e-2));
}

TEST_CASE("fit_affine: constant targets give the constant wrap with r2 = 1") {
    const auto xs = linspace(-1.0, 1.0, 20);
    const std::vector<double> ys(xs.size(), 4.2);
    const AffineFit fit = fit_affine(primitive(PrimitiveKind::Sin), xs, ys);
    CHECK(fit.r2 == 1.0);
    CHECK(fit.wrap.c == 0.0);
    CHECK(fit.wrap.d == doctest::Approx(4.2));
}

TEST_CASE("fit_affine: identity data recovers unit composite slope") {
    const auto xs = linspace(-1.0, 1.0, 40);
    const AffineFit fit = fit_affine(primitive(PrimitiveKind::Identity), xs, xs);
    CHECK(fit.r2 > 1.0 - 1e-10);
    CHECK(fit.wrap.a * fit.wrap.c == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_affine requires at least 8 samples") {
    const auto xs = linspace(0.0, 1.0, 5);
    CHECK_THROWS_AS(fit_affine(primitive(PrimitiveKind::Identity), xs, xs),
                    std::invalid_argument);
}

TEST_CASE("self-generated data is recovered with r2 >= 0.999 for every primitive") {
    Rng rng(2024);
    const auto xs = linspace(-1.0, 1.0, 60);
    for (const Primitive& prim : primitive_library()) {
        for (int trial = 0; trial < 20; ++trial) {
            double a = rng.uniform(0.4, 2.0);
            double b = rng.uniform(-0.5, 0.5);
            if (prim.kind == PrimitiveKind::LogShifted) {
                a = rng.uniform(0.2, 0.4);  // keep 1 + ax + b away from zero
                b = rng.uniform(0.0, 0.4);
            }
            if (!prim.positive_scale_only && rng.uniform() < 0.5) a = -a;
            const double c = rng.uniform(0.5, 2.0);
            const double d = rng.uniform(-1.0, 1.0);
            std::vector<double> ys(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = c * prim.f(a * xs[i] + b) + d;
            const AffineFit fit = fit_affine(prim, xs, ys);
            CHECK(fit.r2 >= 0.999);
        }
    }
}

TEST_CASE("snap_edge: the zero edge snaps to a constant with r2 = 1") {
    KanEdge edge;
    edge.spline.grid = SplineGrid::uniform(3, 2, -1.0, 1.0);
    edge.spline.coeffs.assign(edge.spline.grid.basis_count(), 0.0);
    edge.w_base = 0.0;
    edge.w_spline = 0.0;
    const auto xs = linspace(-1.0, 1.0, 30);
    const SnapResult res = snap_edge(edge, xs);
    CHECK(res.best_r2 == 1.0);
    CHECK(res.best.c == 0.0);
    CHECK(res.best.d == 0.0);
    CHECK(res.ranking.size() == primitive_library().size());
}

TEST_CASE("snap_edge ranks sin first for a sin-shaped edge") {
    // train the spline on sin(6.2x - 2.35) samples, then snap the edge
    const SplineGrid g = SplineGrid::uniform(3, 8, -1.0, 1.0);
    const auto xs = linspace(-1.0, 1.0, 80);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::sin(6.2 * xs[i] - 2.35);
    KanEdge edge;
    edge.spline = fit_coefficients(g, xs, ys).fn;
    edge.w_base = 0.0;
    edge.w_spline = 1.0;

    const SnapResult res = snap_edge(edge, xs);
    CHECK(res.best.kind == PrimitiveKind::Sin);
    CHECK(res.best_r2 > 0.99);
    CHECK(res.ranking.front().first == PrimitiveKind::Sin);
    // ranking is a permutation of the library, sorted by r2
    CHECK(res.ranking.size() == 9);
    for (std::size_t i = 1; i < res.ranking.size(); ++i)
        CHECK(res.ranking[i - 1].second >= res.ranking[i].second);
    double best_in_ranking = res.ranking.front().second;
    CHECK(res.best_r2 == best_in_ranking);
}

TEST_CASE("extract_formula: zero network gives the literal formula 0") {
    KanModel m = new_kan({2, 2, 1}, 2, 3, 0);
    unflatten_params(m, std::vector<double>(param_count(m), 0.0));
    Matrix X(10, 2);
    Rng rng(5);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    const ExtractionResult res = extract_formula(m, X);
    CHECK(res.formula.to_infix() == "0");
    CHECK(res.report.fidelity_mse == 0.0);
}

TEST_CASE("extract_formula reproduces a 1-1-1 network built from library shapes") {
    // inner edge ~ tanh, outer edge ~ identity (exactly representable splines
    // would require infinite knots; fitted G=8 splines are close enough that
    // extraction should track the network to ~1e-6 MSE)
    const SplineGrid inner_grid = SplineGrid::uniform(3, 8, -1.0, 1.0);
    const auto xs = linspace(-1.0, 1.0, 100);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::tanh(2.0 * xs[i] + 0.3);

    KanModel m = new_kan({1, 1, 1}, 8, 3, 0);
    m.layers[0].edges[0].spline = fit_coefficients(inner_grid, xs, ys).fn;
    m.layers[0].edges[0].w_base = 0.0;
    m.layers[0].edges[0].w_spline = 1.0;

    const SplineGrid outer_grid = m.layers[1].edges[0].spline.grid;
    const auto xs2 = linspace(outer_grid.lo, outer_grid.hi, 100);
    std::vector<double> ys2(xs2.size());
    for (std::size_t i = 0; i < xs2.size(); ++i) ys2[i] = 1.7 * xs2[i] - 0.2;
    m.layers[1].edges[0].spline = fit_coefficients(outer_grid, xs2, ys2).fn;
    m.layers[1].edges[0].w_base = 0.0;
    m.layers[1].edges[0].w_spline = 1.0;

    Matrix X(60, 1);
    for (int i = 0; i < 60; ++i) X(i, 0) = -1.0 + 2.0 * i / 59.0;
    const ExtractionResult res = extract_formula(m, X);
    CHECK(res.report.fidelity_mse < 1e-6);
    CHECK_FALSE(res.report.low_fidelity);
    REQUIRE(res.report.edges.size() == 2);
    for (const EdgeFitInfo& e : res.report.edges) CHECK(e.r2 > 0.999);

    // evaluation of the tree agrees with its own fidelity claim
    double acc = 0.0;
    for (std::size_t s = 0; s < X.rows; ++s) {
        const double e = res.formula.eval(X.row(s)) - forward(m, X.row(s))[0];
        acc += e * e;
    }
    CHECK(acc / X.rows == doctest::Approx(res.report.fidelity_mse).epsilon(1e-12));
}

TEST_CASE("formula JSON tree has the documented structure") {
    KanModel m = new_kan({2, 1}, 2, 3, 3);
    Matrix X(12, 2);
    Rng rng(6);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    const ExtractionResult res = extract_formula(m, X);
    const std::string j = res.formula.to_json();
    CHECK(j.find("\"op\": \"sum\"") != std::string::npos);
    CHECK(j.find("\"op\": \"wrap\"") != std::string::npos);
    CHECK(j.find("\"op\": \"input\"") != std::string::npos);
    CHECK(j.find("\"params\"") != std::string::npos);
}

TEST_CASE("frozen transcription values of the built-in formulas at the origin") {
    // independently recomputed with 60-digit arithmetic before freezing:
    // Y1(0) = 1978.163894099941..., Y2(0) = 0.110000000000023...
    const std::vector<double> zero(5, 0.0);
    CHECK(std::fabs(eval_paper_formula(PaperTarget::Y1, zero) - 1978.163894099941) /
              1978.163894099941 <
          1e-9);
    CHECK(std::fabs(eval_paper_formula(PaperTarget::Y2, zero) - 0.11000000000002319) /
              0.11000000000002319 <
          1e-9);
}

TEST_CASE("frozen transcription values at probe points") {
    struct Probe {
        std::array<double, 5> x;
        double y1, y2;
    };
    // frozen from the same independent high-precision evaluation
    const Probe probes[] = {
        {{0.5, 0.5, 0.5, 0.5, 0.5}, 7.2285885891803394, 2.9504871067532203},
        {{1, 1, 1, 1, 1}, -0.43997180237107031, 0.11409297539731231},
        {{0.25, 0.75, 0.1, 0.9, 0.33}, 5.0478540082299839, 0.11412022990584539},
        {{0.9, 0.1, 0.8, 0.2, 0.7}, 18.615110114609614, 0.11015505117840102},
    };
    for (const Probe& p : probes) {
        CHECK(eval_paper_formula(PaperTarget::Y1, p.x) == doctest::Approx(p.y1).epsilon(1e-12));
        CHECK(eval_paper_formula(PaperTarget::Y2, p.x) == doctest::Approx(p.y2).epsilon(1e-12));
    }
}

TEST_CASE("Y2 saturation and range bound") {
    const std::vector<double> zero(5, 0.0);
    // tanh argument at the origin is ~16.3, deep in saturation
    CHECK(eval_paper_formula(PaperTarget::Y2, zero) ==
          doctest::Approx(1.7 - 1.59).epsilon(1e-6));
    Rng rng(8);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform();
        const double y2 = eval_paper_formula(PaperTarget::Y2, x);
        CHECK(y2 >= 1.7 - 1.59 - 1e-12);
        CHECK(y2 <= 1.7 + 1.59 + 1e-12);
    }
}

TEST_CASE("formula inputs are validated") {
    CHECK_THROWS_AS(eval_paper_formula(PaperTarget::Y1, std::vector<double>(3, 0.0)),
                    std::invalid_argument);
    // out-of-box input warns but still evaluates (total functions)
    const std::vector<double> outside = {2.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(std::isfinite(eval_paper_formula(PaperTarget::Y1, outside)));
}
