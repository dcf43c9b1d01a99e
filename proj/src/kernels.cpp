#include "kanforge/kernels.hpp"

#include <cmath>
#include <cstring>

namespace kf {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// per-sample intermediate values stored in sample-indexed slots
struct BatchCapture {
    std::vector<Matrix> node_values;   // node_values[l]: n x widths[l], l = 0..L
    std::vector<Matrix> edge_outputs;  // edge_outputs[l]: n x (out*in), l = 0..L-1
};

void forward_one(const KanModel& model, std::span<const double> x, std::size_t s,
                 BatchCapture* cap, double* y_out) {
    ForwardCapture local;
    std::vector<double> out = cap ? forward(model, x, local) : forward(model, x);
    if (cap) {
        for (std::size_t l = 0; l < local.node_values.size(); ++l)
            std::memcpy(cap->node_values[l].row(s).data(), local.node_values[l].data(),
                        local.node_values[l].size() * sizeof(double));
        for (std::size_t l = 0; l < local.edge_outputs.size(); ++l)
            std::memcpy(cap->edge_outputs[l].row(s).data(), local.edge_outputs[l].data(),
                        local.edge_outputs[l].size() * sizeof(double));
    }
    for (std::size_t j = 0; j < out.size(); ++j) y_out[j] = out[j];
}

void run_forward(const KanModel& model, const Matrix& X, Matrix& Y, BatchCapture* cap,
                 Exec exec) {
    require(X.rows > 0, "batch kernel: input matrix is empty");
    const auto n = X.rows;
    const auto out_dim = static_cast<std::size_t>(model.widths.back());
    Y = Matrix(n, out_dim);
    if (cap) {
        cap->node_values.clear();
        cap->edge_outputs.clear();
        for (int w : model.widths) cap->node_values.emplace_back(n, w);
        for (const KanLayer& layer : model.layers)
            cap->edge_outputs.emplace_back(n, layer.edges.size());
    }
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long s = 0; s < static_cast<long long>(n); ++s)
            forward_one(model, X.row(s), s, cap, Y.row(s).data());
    } else {
        for (std::size_t s = 0; s < n; ++s) forward_one(model, X.row(s), s, cap, Y.row(s).data());
    }
}

// mean |activation| per edge, reduced in sample order
ActivationStats stats_from_capture(const KanModel& model, const BatchCapture& cap) {
    ActivationStats st;
    const double n = static_cast<double>(cap.node_values[0].rows);
    st.mean_abs.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Matrix& outs = cap.edge_outputs[l];
        std::vector<double>& acc = st.mean_abs[l];
        acc.assign(outs.cols, 0.0);
        for (std::size_t s = 0; s < outs.rows; ++s)
            for (std::size_t e = 0; e < outs.cols; ++e) acc[e] += std::fabs(outs(s, e));
        for (double& v : acc) v /= n;
    }
    return st;
}

struct RegEval {
    double value = 0.0;                          // lambda-weighted regularizer
    std::vector<std::vector<double>> inj;        // d reg / d A_e per edge (lambda-weighted)
};

RegEval eval_regularizer(const ActivationStats& st, const RegConfig& reg) {
    RegEval ev;
    ev.inj.resize(st.mean_abs.size());
    double l1 = 0.0, entropy = 0.0;
    for (std::size_t l = 0; l < st.mean_abs.size(); ++l) {
        const std::vector<double>& A = st.mean_abs[l];
        std::vector<double>& inj = ev.inj[l];
        inj.assign(A.size(), 0.0);
        double S = 0.0;
        for (double a : A) {
            l1 += a;
            S += a;
        }
        double H = 0.0;
        if (S > 0.0) {
            for (double a : A) {
                if (a > 0.0) {
                    const double p = a / S;
                    H -= p * std::log(p);
                }
            }
        }
        entropy += H;
        for (std::size_t e = 0; e < A.size(); ++e) {
            double d_entropy = 0.0;
            if (S > 0.0 && A[e] > 0.0) d_entropy = (-std::log(A[e] / S) - H) / S;
            inj[e] = reg.lambda_sparsity + reg.lambda_entropy * d_entropy;
        }
    }
    ev.value = reg.lambda_sparsity * l1 + reg.lambda_entropy * entropy;
    return ev;
}

// reverse pass for one sample; adds nothing shared, writes into grad_row
void backward_one(const KanModel& model, const BatchCapture& cap, const RegEval& reg_ev,
                  std::size_t s, double d_output, const std::vector<std::size_t>& layer_offset,
                  double* grad_row) {
    const int L = static_cast<int>(model.layers.size());
    std::vector<double> d_out(1, d_output);
    const double inv_n = 1.0 / static_cast<double>(cap.node_values[0].rows);
    for (int l = L - 1; l >= 0; --l) {
        const KanLayer& layer = model.layers[l];
        const int coeff_count = static_cast<int>(layer.edges[0].spline.coeffs.size());
        const int stride = coeff_count + 2;
        std::vector<double> d_in(layer.in_dim, 0.0);
        for (int j = 0; j < layer.out_dim; ++j) {
            for (int i = 0; i < layer.in_dim; ++i) {
                const std::size_t e = static_cast<std::size_t>(j) * layer.in_dim + i;
                const KanEdge& edge = layer.edge(j, i);
                const double a = cap.edge_outputs[l](s, e);
                const double a_grad = d_out[j] + reg_ev.inj[l][e] * sign(a) * inv_n;

                const double u = cap.node_values[l](s, i);
                const bool inside = u >= edge.spline.grid.lo && u <= edge.spline.grid.hi;
                double w[17], dw[17];
                const int first = basis_window(edge.spline.grid, u, w);
                basis_window_derivative(edge.spline.grid, u, dw);
                double spline_val = 0.0, spline_der = 0.0;
                for (int t = 0; t <= edge.spline.grid.degree; ++t) {
                    spline_val += edge.spline.coeffs[first + t] * w[t];
                    spline_der += edge.spline.coeffs[first + t] * dw[t];
                }

                double* g = grad_row + layer_offset[l] + e * stride;
                for (int t = 0; t <= edge.spline.grid.degree; ++t)
                    g[first + t] += a_grad * edge.w_spline * w[t];
                g[coeff_count] += a_grad * base_fn(u);
                g[coeff_count + 1] += a_grad * spline_val;

                d_in[i] += a_grad * (edge.w_base * base_fn_derivative(u) +
                                     (inside ? edge.w_spline * spline_der : 0.0));
            }
        }
        d_out = std::move(d_in);
    }
}

std::vector<std::size_t> layer_offsets(const KanModel& model) {
    std::vector<std::size_t> off(model.layers.size(), 0);
    std::size_t acc = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        off[l] = acc;
        acc += model.layers[l].edges.size() * (model.layers[l].edges[0].spline.coeffs.size() + 2);
    }
    return off;
}

}  // namespace

void forward_batch(const KanModel& model, const Matrix& X, Matrix& Y, Exec exec) {
    run_forward(model, X, Y, nullptr, exec);
}

ActivationStats activation_stats(const KanModel& model, const Matrix& X, Exec exec) {
    BatchCapture cap;
    Matrix Y;
    run_forward(model, X, Y, &cap, exec);
    return stats_from_capture(model, cap);
}

std::vector<Matrix> node_values_batch(const KanModel& model, const Matrix& X, Exec exec) {
    BatchCapture cap;
    Matrix Y;
    run_forward(model, X, Y, &cap, exec);
    return std::move(cap.node_values);
}

LossParts loss_batch(const KanModel& model, const Matrix& X, std::span<const double> y,
                     const RegConfig& reg, Exec exec) {
    require(X.rows == y.size(), "loss: target length does not match sample count");
    require(model.widths.back() == 1, "loss: model must have a single output");
    const bool need_stats = reg.lambda_sparsity != 0.0 || reg.lambda_entropy != 0.0;
    BatchCapture cap;
    Matrix Y;
    run_forward(model, X, Y, need_stats ? &cap : nullptr, exec);

    LossParts parts;
    for (std::size_t s = 0; s < X.rows; ++s) {
        const double e = Y(s, 0) - y[s];
        parts.data_mse += e * e;
    }
    parts.data_mse /= static_cast<double>(X.rows);
    if (need_stats) {
        const ActivationStats st = stats_from_capture(model, cap);
        parts.reg = eval_regularizer(st, reg).value;
    }
    parts.total = parts.data_mse + parts.reg;
    return parts;
}

LossParts loss_grad_batch(const KanModel& model, const Matrix& X, std::span<const double> y,
                          const RegConfig& reg, std::vector<double>& grad, Exec exec) {
    require(X.rows == y.size(), "loss_grad: target length does not match sample count");
    require(model.widths.back() == 1, "loss_grad: model must have a single output");
    const auto n = X.rows;

    BatchCapture cap;
    Matrix Y;
    run_forward(model, X, Y, &cap, exec);

    const ActivationStats st = stats_from_capture(model, cap);
    const RegEval reg_ev = eval_regularizer(st, reg);
    const std::vector<std::size_t> offsets = layer_offsets(model);
    const std::size_t p = param_count(model);

    Matrix per_sample_grad(n, p);
    const double out_scale = model.output_scale;
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long s = 0; s < static_cast<long long>(n); ++s) {
            const double d_out = 2.0 * (Y(s, 0) - y[s]) * out_scale / static_cast<double>(n);
            backward_one(model, cap, reg_ev, s, d_out, offsets, per_sample_grad.row(s).data());
        }
    } else {
        for (std::size_t s = 0; s < n; ++s) {
            const double d_out = 2.0 * (Y(s, 0) - y[s]) * out_scale / static_cast<double>(n);
            backward_one(model, cap, reg_ev, s, d_out, offsets, per_sample_grad.row(s).data());
        }
    }

    grad.assign(p, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double* row = per_sample_grad.row(s).data();
        for (std::size_t i = 0; i < p; ++i) grad[i] += row[i];
    }

    LossParts parts;
    for (std::size_t s = 0; s < n; ++s) {
        const double e = Y(s, 0) - y[s];
        parts.data_mse += e * e;
    }
    parts.data_mse /= static_cast<double>(n);
    parts.reg = reg_ev.value;
    parts.total = parts.data_mse + parts.reg;
    return parts;
}

}  // namespace kf
