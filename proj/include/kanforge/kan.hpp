#pragma once

#include <cstdint>
#include <vector>

#include "kanforge/common.hpp"
#include "kanforge/spline.hpp"

namespace kf {

// residual base function b(x) = x * sigmoid(x) and its derivative
double base_fn(double x);
double base_fn_derivative(double x);

// One edge activation: phi(x) = w_base * b(x) + w_spline * spline(x).
struct KanEdge {
    SplineFunction spline;
    double w_base = 1.0;
    double w_spline = 1.0;
};

double edge_eval(const KanEdge& edge, double x);

struct KanLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<KanEdge> edges;  // row-major: edges[j * in_dim + i], j = output node

    KanEdge& edge(int j, int i) { return edges[static_cast<std::size_t>(j) * in_dim + i]; }
    const KanEdge& edge(int j, int i) const {
        return edges[static_cast<std::size_t>(j) * in_dim + i];
    }
};

// Per-feature affine map from raw feature units into the spline domain.
struct FeatureTransform {
    std::vector<double> scale;
    std::vector<double> offset;

    bool empty() const { return scale.empty(); }
    double apply(int feature, double raw) const { return raw * scale[feature] + offset[feature]; }
};

struct KanModel {
    std::vector<int> widths;
    int grid_interior = 2;
    int degree = 3;
    std::uint64_t seed = 0;
    FeatureTransform input_transform;  // identity when empty
    // fixed affine on the network output; training sets it to the target
    // mean/scale so spline coefficients stay O(1) while predictions and
    // losses remain in raw target units
    double output_scale = 1.0;
    double output_offset = 0.0;
    std::vector<KanLayer> layers;
};

// Deterministic construction: spline coefficients ~ U(-0.1, 0.1) from a
// SplitMix64 stream in flatten order, w_base = w_spline = 1.
KanModel new_kan(const std::vector<int>& widths, int grid_interior, int degree,
                 std::uint64_t seed);

// Captured intermediate values from one forward pass.
struct ForwardCapture {
    std::vector<std::vector<double>> node_values;   // per layer incl. input layer
    std::vector<std::vector<double>> edge_outputs;  // per layer, [j * in_dim + i]
};

std::vector<double> forward(const KanModel& model, std::span<const double> x);
std::vector<double> forward(const KanModel& model, std::span<const double> x,
                            ForwardCapture& capture);

// Applies the input transform, then forward. Requires a non-empty transform.
std::vector<double> predict_raw(const KanModel& model, std::span<const double> raw);

std::size_t param_count(const KanModel& model);

// Parameter vector layout: layers in order, edges row-major within a layer,
// per edge the spline coefficients followed by w_base then w_spline.
std::vector<double> flatten_params(const KanModel& model);
void unflatten_params(KanModel& model, std::span<const double> v);

// Mean over samples of |edge output|, same shape as the edge matrices.
struct ActivationStats {
    std::vector<std::vector<double>> mean_abs;  // per layer, [j * in_dim + i]
};

}  // namespace kf
