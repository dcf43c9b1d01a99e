#include "kanforge/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kanforge/optimizer.hpp"

namespace kf {

void set_output_transform(KanModel& model, std::span<const double> y) {
    require(!y.empty(), "set_output_transform: empty target vector");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    model.output_offset = mean;
    model.output_scale = var > 0.0 ? std::sqrt(var) : 1.0;
}

LossParts loss(const KanModel& model, const Matrix& X, std::span<const double> y,
               const TrainConfig& cfg) {
    return loss_batch(model, X, y, cfg.reg(), cfg.exec);
}

std::vector<double> grad(const KanModel& model, const Matrix& X, std::span<const double> y,
                         const TrainConfig& cfg) {
    std::vector<double> g;
    loss_grad_batch(model, X, y, cfg.reg(), g, cfg.exec);
    return g;
}

void TrainTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "iteration,train_loss,reg,grad_norm\n";
    char buf[128];
    for (const TraceRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.iteration, r.train_loss,
                      r.reg, r.grad_norm);
        out << buf;
    }
}

TrainTrace TrainTrace::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trace file: " + path);
    TrainTrace trace;
    std::string line;
    if (!std::getline(in, line) || line.rfind("iteration,", 0) != 0)
        throw std::runtime_error("trace file missing header: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TraceRow r;
        if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &r.iteration, &r.train_loss, &r.reg,
                        &r.grad_norm) != 4)
            throw std::runtime_error("malformed trace row: " + line);
        trace.rows.push_back(r);
    }
    return trace;
}

TrainResult lbfgs_minimize(const KanModel& model, const Matrix& X, std::span<const double> y,
                           const TrainConfig& cfg) {
    require(cfg.max_iters >= 1 && cfg.lbfgs_history >= 1 && cfg.grad_tol > 0,
            "lbfgs_minimize: invalid training configuration");
    require(X.rows >= 1, "lbfgs_minimize: need at least one sample");

    KanModel work = model;
    LossParts last_parts;
    double last_total = std::nan("");
    lbfgs::Objective objective = [&](std::span<const double> params,
                                     std::span<double> grad_out) {
        unflatten_params(work, params);
        std::vector<double> g;
        last_parts = loss_grad_batch(work, X, y, cfg.reg(), g, cfg.exec);
        last_total = last_parts.total;
        for (std::size_t i = 0; i < g.size(); ++i) grad_out[i] = g[i];
        return last_parts.total;
    };

    TrainResult result;
    lbfgs::Options opts;
    opts.max_iters = cfg.max_iters;
    opts.history = cfg.lbfgs_history;
    opts.grad_tol = cfg.grad_tol;

    lbfgs::IterCallback record = [&](int iter, std::span<const double> x_now, double f,
                                     double gnorm) {
        double reg_val = last_parts.reg;
        if (f != last_total) {  // accepted point was not the last evaluation; recompute
            unflatten_params(work, x_now);
            reg_val = loss_batch(work, X, y, cfg.reg(), cfg.exec).reg;
        }
        result.trace.rows.push_back({iter, f, reg_val, gnorm});
    };

    lbfgs::Result opt = lbfgs::minimize(objective, flatten_params(model), opts, record);

    result.model = model;
    unflatten_params(result.model, opt.x);
    result.iterations = opt.iterations;
    result.final_loss = opt.f;
    result.stop_reason = opt.stop_reason;
    return result;
}

ArchConfig ArchConfig::paper_default(Target target) {
    if (target == Target::Pressure) return {{5, 2, 1}, 2, 3, 0};
    return {{5, 6, 1}, 4, 4, 0};
}

namespace {

double split_mse(const KanModel& model, const Matrix& X, std::span<const double> y, Exec exec) {
    Matrix Y;
    forward_batch(model, X, Y, exec);
    double acc = 0.0;
    for (std::size_t s = 0; s < X.rows; ++s) {
        const double e = Y(s, 0) - y[s];
        acc += e * e;
    }
    return acc / static_cast<double>(X.rows);
}

StageReport make_stage(const std::string& name, const KanModel& model,
                       const TrainingArrays& train, const TrainingArrays& test, Exec exec) {
    StageReport rep;
    rep.stage = name;
    rep.widths = model.widths;
    rep.train_mse = split_mse(model, train.X, train.y, exec);
    rep.test_mse = split_mse(model, test.X, test.y, exec);
    return rep;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<PumpSample>& samples, Target target,
                            const ArchConfig& arch, const TrainConfig& stage1,
                            const PruneConfig& prune_cfg, const TrainConfig& stage2,
                            const SplitIndices& split) {
    const TrainingArrays train = make_training_arrays(samples, split.train, target);
    const TrainingArrays test = make_training_arrays(samples, split.test, target);

    KanModel model = new_kan(arch.widths, arch.grid_interior, arch.degree, arch.seed);
    model.input_transform = Normalizer::paper_ranges().domain_transform();
    set_output_transform(model, train.y);

    PipelineResult result;

    TrainResult sparse = lbfgs_minimize(model, train.X, train.y, stage1);
    result.stage1_trace = sparse.trace;
    result.stages.push_back(make_stage("sparse", sparse.model, train, test, stage1.exec));

    PruneResult pruned = prune(sparse.model, train.X, prune_cfg, stage1.exec);
    result.prune_report = pruned.report;
    result.stages.push_back(make_stage("pruned", pruned.model, train, test, stage1.exec));

    TrainConfig refine_cfg = stage2;
    refine_cfg.lambda_sparsity = 0.0;  // refinement runs without regularization
    refine_cfg.lambda_entropy = 0.0;
    TrainResult refined = lbfgs_minimize(pruned.model, train.X, train.y, refine_cfg);
    result.stage2_trace = refined.trace;
    result.stages.push_back(make_stage("refined", refined.model, train, test, stage2.exec));

    result.model = refined.model;
    return result;
}

}  // namespace kf
