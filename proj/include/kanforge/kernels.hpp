#pragma once

#include "kanforge/common.hpp"
#include "kanforge/kan.hpp"

namespace kf {

// Sparsity regularizer settings shared by loss and gradient kernels.
struct RegConfig {
    double lambda_sparsity = 0.0;  // L1 on per-edge mean |activation|
    double lambda_entropy = 0.0;   // entropy of normalized activation magnitudes per layer
};

struct LossParts {
    double total = 0.0;
    double data_mse = 0.0;
    double reg = 0.0;
};

// Batch kernels. Exec::Serial is the plain reference loop; Exec::Parallel
// runs the per-sample work under OpenMP into per-sample slots and reduces in
// sample order, so both modes return identical values independent of the
// thread count.

// predictions for every row of X; Y is resized to rows x widths.back()
void forward_batch(const KanModel& model, const Matrix& X, Matrix& Y,
                   Exec exec = Exec::Parallel);

// per-edge mean |activation| over all rows of X
ActivationStats activation_stats(const KanModel& model, const Matrix& X,
                                 Exec exec = Exec::Parallel);

// node values per layer (including the input layer): result[l] is rows x widths[l]
std::vector<Matrix> node_values_batch(const KanModel& model, const Matrix& X,
                                      Exec exec = Exec::Parallel);

// total = data_mse + reg for a single-target batch (y has one entry per row)
LossParts loss_batch(const KanModel& model, const Matrix& X, std::span<const double> y,
                     const RegConfig& reg, Exec exec = Exec::Parallel);

// loss and its gradient in flatten_params layout
LossParts loss_grad_batch(const KanModel& model, const Matrix& X, std::span<const double> y,
                          const RegConfig& reg, std::vector<double>& grad,
                          Exec exec = Exec::Parallel);

}  // namespace kf
