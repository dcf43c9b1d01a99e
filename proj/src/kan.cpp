#include "kanforge/kan.hpp"

#include <cmath>

#include "kanforge/rng.hpp"

namespace kf {

double base_fn(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return x * s;
}

double base_fn_derivative(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s + x * s * (1.0 - s);
}

double edge_eval(const KanEdge& edge, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("edge_eval: input is not finite");
    return edge.w_base * base_fn(x) + edge.w_spline * edge.spline.eval(x);
}

KanModel new_kan(const std::vector<int>& widths, int grid_interior, int degree,
                 std::uint64_t seed) {
    require(widths.size() >= 2, "new_kan: need at least two layer widths");
    for (int w : widths) require(w >= 1, "new_kan: widths must be >= 1");
    require(grid_interior >= 1, "new_kan: grid interior count must be >= 1");
    require(degree >= 1, "new_kan: spline degree must be >= 1");

    KanModel model;
    model.widths = widths;
    model.grid_interior = grid_interior;
    model.degree = degree;
    model.seed = seed;

    Rng rng(seed);
    model.layers.resize(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        // layer-0 edges see normalized inputs; deeper edges see sums of
        // widths[l-1] unit-scale edge outputs, so their domain widens to match
        const double reach = (l == 0) ? 1.0 : static_cast<double>(widths[l - 1]);
        const SplineGrid grid = SplineGrid::uniform(degree, grid_interior, -reach, reach);
        KanLayer& layer = model.layers[l];
        layer.in_dim = widths[l];
        layer.out_dim = widths[l + 1];
        layer.edges.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
        for (KanEdge& edge : layer.edges) {
            edge.spline.grid = grid;
            edge.spline.coeffs.resize(grid.basis_count());
            for (double& c : edge.spline.coeffs) c = rng.uniform(-0.1, 0.1);
            edge.w_base = 1.0;
            edge.w_spline = 1.0;
        }
    }
    return model;
}

namespace {

std::vector<double> forward_impl(const KanModel& model, std::span<const double> x,
                                 ForwardCapture* capture) {
    require(!model.widths.empty() && x.size() == static_cast<std::size_t>(model.widths[0]),
            "forward: input length does not match model input width");
    std::vector<double> cur(x.begin(), x.end());
    if (capture) {
        capture->node_values.clear();
        capture->edge_outputs.clear();
        capture->node_values.push_back(cur);
    }
    for (const KanLayer& layer : model.layers) {
        std::vector<double> next(layer.out_dim, 0.0);
        std::vector<double>* outs = nullptr;
        if (capture) {
            capture->edge_outputs.emplace_back(layer.edges.size(), 0.0);
            outs = &capture->edge_outputs.back();
        }
        for (int j = 0; j < layer.out_dim; ++j) {
            double acc = 0.0;
            for (int i = 0; i < layer.in_dim; ++i) {
                const double a = edge_eval(layer.edge(j, i), cur[i]);
                if (outs) (*outs)[static_cast<std::size_t>(j) * layer.in_dim + i] = a;
                acc += a;
            }
            next[j] = acc;
        }
        cur = std::move(next);
        if (capture) capture->node_values.push_back(cur);
    }
    for (double& v : cur) v = v * model.output_scale + model.output_offset;
    return cur;
}

}  // namespace

std::vector<double> forward(const KanModel& model, std::span<const double> x) {
    return forward_impl(model, x, nullptr);
}

std::vector<double> forward(const KanModel& model, std::span<const double> x,
                            ForwardCapture& capture) {
    return forward_impl(model, x, &capture);
}

std::vector<double> predict_raw(const KanModel& model, std::span<const double> raw) {
    require(!model.input_transform.empty(), "predict_raw: model has no input transform");
    std::vector<double> x(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        x[i] = model.input_transform.apply(static_cast<int>(i), raw[i]);
    return forward(model, x);
}

std::size_t param_count(const KanModel& model) {
    std::size_t n = 0;
    for (const KanLayer& layer : model.layers)
        n += layer.edges.size() * (layer.edges[0].spline.coeffs.size() + 2);
    return n;
}

std::vector<double> flatten_params(const KanModel& model) {
    std::vector<double> v;
    v.reserve(param_count(model));
    for (const KanLayer& layer : model.layers) {
        for (const KanEdge& edge : layer.edges) {
            v.insert(v.end(), edge.spline.coeffs.begin(), edge.spline.coeffs.end());
            v.push_back(edge.w_base);
            v.push_back(edge.w_spline);
        }
    }
    return v;
}

void unflatten_params(KanModel& model, std::span<const double> v) {
    require(v.size() == param_count(model),
            "unflatten_params: vector length does not match parameter count");
    std::size_t p = 0;
    for (KanLayer& layer : model.layers) {
        for (KanEdge& edge : layer.edges) {
            for (double& c : edge.spline.coeffs) c = v[p++];
            edge.w_base = v[p++];
            edge.w_spline = v[p++];
        }
    }
}

}  // namespace kf
