#pragma once

#include <cstdint>
#include <vector>

#include "kanforge/common.hpp"

namespace kf {

// ---- multilayer perceptron -------------------------------------------------

// tanh hidden layers, identity output. Targets are standardized internally
// during training; predict() returns raw target units.
struct MlpModel {
    std::vector<int> sizes;                   // [in, h1, h2, h3, out]
    std::vector<Matrix> weights;              // weights[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]
    double target_mean = 0.0;
    double target_scale = 1.0;

    double predict(std::span<const double> x) const;
};

struct MlpConfig {
    std::vector<int> hidden = {64, 64, 64};
    int epochs = 2000;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

MlpModel make_mlp(int in_dim, const std::vector<int>& hidden, std::uint64_t seed);

// full-batch Adam with best-on-train checkpointing; deterministic given seed
MlpModel train_mlp(const Matrix& X, std::span<const double> y, std::uint64_t seed,
                   const MlpConfig& cfg = {});

// training loss (MSE on the standardized scale) and gradient in flatten order
// (per layer: weights row-major, then biases)
double mlp_loss_grad(const MlpModel& model, const Matrix& X, std::span<const double> y_std,
                     std::vector<double>& grad);
std::vector<double> mlp_flatten(const MlpModel& model);
void mlp_unflatten(MlpModel& model, std::span<const double> v);

// ---- random forest ---------------------------------------------------------

struct TreeNode {
    int feature = -1;         // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;       // leaf prediction
    int left = -1, right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int depth() const;  // number of splits on the longest path
};

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 10;
    bool bootstrap = true;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig cfg;
    std::uint64_t seed = 0;

    // exact arithmetic mean of the tree predictions, in tree order
    double predict(std::span<const double> x) const;
};

// greedy squared-error-reduction tree on the given sample indices
Tree train_tree(const Matrix& X, std::span<const double> y,
                std::span<const std::size_t> indices, int max_depth);

// per-tree seed = seed + tree index, so results are independent of scheduling
ForestModel train_forest(const Matrix& X, std::span<const double> y, std::uint64_t seed,
                         const ForestConfig& cfg = {}, Exec exec = Exec::Parallel);

}  // namespace kf
