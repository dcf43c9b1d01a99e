#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kanforge/common.hpp"
#include "kanforge/dataset.hpp"
#include "kanforge/kan.hpp"
#include "kanforge/kernels.hpp"
#include "kanforge/pruning.hpp"

namespace kf {

struct TrainConfig {
    int max_iters = 200;
    int lbfgs_history = 10;
    double grad_tol = 1e-7;
    double lambda_sparsity = 0.01;
    double lambda_entropy = 0.01;
    std::uint64_t seed = 0;
    Exec exec = Exec::Parallel;

    RegConfig reg() const { return {lambda_sparsity, lambda_entropy}; }
};

struct TraceRow {
    int iteration = 0;
    double train_loss = 0.0;  // total objective (data + reg)
    double reg = 0.0;
    double grad_norm = 0.0;
};

struct TrainTrace {
    std::vector<TraceRow> rows;

    void write_csv(const std::string& path) const;
    static TrainTrace read_csv(const std::string& path);
};

// fixes the model's output affine to the target mean/deviation so trainable
// parameters work on a standardized scale
void set_output_transform(KanModel& model, std::span<const double> y);

LossParts loss(const KanModel& model, const Matrix& X, std::span<const double> y,
               const TrainConfig& cfg);
std::vector<double> grad(const KanModel& model, const Matrix& X, std::span<const double> y,
                         const TrainConfig& cfg);

struct TrainResult {
    KanModel model;
    TrainTrace trace;
    int iterations = 0;
    double final_loss = 0.0;
    std::string stop_reason;
};

// Full-batch LBFGS over the flattened parameters.
TrainResult lbfgs_minimize(const KanModel& model, const Matrix& X, std::span<const double> y,
                           const TrainConfig& cfg);

struct ArchConfig {
    std::vector<int> widths;
    int grid_interior = 2;
    int degree = 3;
    std::uint64_t seed = 0;

    // pressure: widths 5,2,1 / grid 2 / k 3; flow rate: widths 5,6,1 / grid 4 / k 4
    static ArchConfig paper_default(Target target);
};

struct StageReport {
    std::string stage;  // sparse | pruned | refined
    std::vector<int> widths;
    double train_mse = 0.0;
    double test_mse = 0.0;
};

struct PipelineResult {
    KanModel model;
    TrainTrace stage1_trace;
    TrainTrace stage2_trace;
    PruneReport prune_report;
    std::vector<StageReport> stages;
};

// Three-stage pipeline: sparse training, node pruning, regularization-free
// refinement. Stage MSEs are reported on both split halves.
PipelineResult run_pipeline(const std::vector<PumpSample>& samples, Target target,
                            const ArchConfig& arch, const TrainConfig& stage1,
                            const PruneConfig& prune_cfg, const TrainConfig& stage2,
                            const SplitIndices& split);

}  // namespace kf
