#include "kanforge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kanforge/rng.hpp"

namespace kf {

// ---- MLP -------------------------------------------------------------------

MlpModel make_mlp(int in_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    require(in_dim >= 1, "make_mlp: input dimension must be >= 1");
    MlpModel m;
    m.sizes.push_back(in_dim);
    for (int h : hidden) {
        require(h >= 1, "make_mlp: hidden widths must be >= 1");
        m.sizes.push_back(h);
    }
    m.sizes.push_back(1);

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        const int fan_in = m.sizes[l], fan_out = m.sizes[l + 1];
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix W(fan_out, fan_in);
        for (double& w : W.data) w = rng.uniform(-s, s);
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

namespace {

// network output on the standardized scale
double mlp_forward(const MlpModel& m, std::span<const double> x,
                   std::vector<std::vector<double>>* acts) {
    require(x.size() == static_cast<std::size_t>(m.sizes.front()),
            "mlp: input length does not match model");
    std::vector<double> cur(x.begin(), x.end());
    if (acts) {
        acts->clear();
        acts->push_back(cur);
    }
    const std::size_t L = m.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& W = m.weights[l];
        std::vector<double> next(W.rows, 0.0);
        for (std::size_t j = 0; j < W.rows; ++j) {
            double acc = m.biases[l][j];
            for (std::size_t i = 0; i < W.cols; ++i) acc += W(j, i) * cur[i];
            next[j] = (l + 1 < L) ? std::tanh(acc) : acc;
        }
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    return cur[0];
}

}  // namespace

double MlpModel::predict(std::span<const double> x) const {
    return mlp_forward(*this, x, nullptr) * target_scale + target_mean;
}

std::vector<double> mlp_flatten(const MlpModel& m) {
    std::vector<double> v;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        v.insert(v.end(), m.weights[l].data.begin(), m.weights[l].data.end());
        v.insert(v.end(), m.biases[l].begin(), m.biases[l].end());
    }
    return v;
}

void mlp_unflatten(MlpModel& m, std::span<const double> v) {
    std::size_t p = 0;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (double& w : m.weights[l].data) w = v[p++];
        for (double& b : m.biases[l]) b = v[p++];
    }
    require(p == v.size(), "mlp_unflatten: vector length mismatch");
}

double mlp_loss_grad(const MlpModel& model, const Matrix& X, std::span<const double> y_std,
                     std::vector<double>& grad) {
    require(X.rows == y_std.size() && X.rows > 0, "mlp_loss_grad: shape mismatch");
    const std::size_t L = model.weights.size();
    grad.assign(mlp_flatten(model).size(), 0.0);

    // per-layer offsets into the flat gradient
    std::vector<std::size_t> offset(L, 0);
    std::size_t acc_off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offset[l] = acc_off;
        acc_off += model.weights[l].data.size() + model.biases[l].size();
    }

    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    const double inv_n = 1.0 / static_cast<double>(X.rows);
    for (std::size_t s = 0; s < X.rows; ++s) {
        const double z = mlp_forward(model, X.row(s), &acts);
        const double e = z - y_std[s];
        loss += e * e;

        std::vector<double> delta(1, 2.0 * e * inv_n);
        for (std::size_t l = L; l-- > 0;) {
            const Matrix& W = model.weights[l];
            const std::vector<double>& input = acts[l];
            double* gw = grad.data() + offset[l];
            double* gb = gw + W.data.size();
            std::vector<double> delta_prev(W.cols, 0.0);
            for (std::size_t j = 0; j < W.rows; ++j) {
                for (std::size_t i = 0; i < W.cols; ++i) {
                    gw[j * W.cols + i] += delta[j] * input[i];
                    delta_prev[i] += delta[j] * W(j, i);
                }
                gb[j] += delta[j];
            }
            if (l > 0) {  // tanh backprop through the previous hidden activation
                for (std::size_t i = 0; i < W.cols; ++i) {
                    const double a = acts[l][i];
                    delta_prev[i] *= 1.0 - a * a;
                }
            }
            delta = std::move(delta_prev);
        }
    }
    return loss * inv_n;
}

MlpModel train_mlp(const Matrix& X, std::span<const double> y, std::uint64_t seed,
                   const MlpConfig& cfg) {
    require(X.rows == y.size() && X.rows > 0, "train_mlp: shape mismatch");

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;

    std::vector<double> y_std(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_std[i] = (y[i] - mean) / scale;

    MlpModel model = make_mlp(static_cast<int>(X.cols), cfg.hidden, seed);
    std::vector<double> x = mlp_flatten(model);
    std::vector<double> g, m(x.size(), 0.0), v(x.size(), 0.0);
    std::vector<double> best_x = x;
    double best_f = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        mlp_unflatten(model, x);
        const double f = mlp_loss_grad(model, X, y_std, g);
        if (!std::isfinite(f))
            throw std::runtime_error("train_mlp: loss diverged at epoch " +
                                     std::to_string(epoch));
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        const double bc1 = 1.0 - std::pow(cfg.beta1, epoch);
        const double bc2 = 1.0 - std::pow(cfg.beta2, epoch);
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            x[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
        }
    }
    mlp_unflatten(model, x);
    const double f_final = mlp_loss_grad(model, X, y_std, g);
    if (std::isfinite(f_final) && f_final < best_f) best_x = x;

    mlp_unflatten(model, best_x);
    model.target_mean = mean;
    model.target_scale = scale;
    return model;
}

// ---- random forest ----------------------------------------------------------

double Tree::predict(std::span<const double> x) const {
    int n = 0;
    while (nodes[n].feature >= 0)
        n = (x[nodes[n].feature] <= nodes[n].threshold) ? nodes[n].left : nodes[n].right;
    return nodes[n].value;
}

namespace {

int node_depth(const Tree& t, int n) {
    if (t.nodes[n].feature < 0) return 0;
    return 1 + std::max(node_depth(t, t.nodes[n].left), node_depth(t, t.nodes[n].right));
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;  // combined child SSE
};

SplitChoice best_split(const Matrix& X, std::span<const double> y,
                       const std::vector<std::size_t>& idx) {
    SplitChoice best;
    const std::size_t n = idx.size();
    std::vector<std::pair<double, double>> pairs(n);  // (feature value, target)
    for (std::size_t f = 0; f < X.cols; ++f) {
        for (std::size_t r = 0; r < n; ++r) pairs[r] = {X(idx[r], f), y[idx[r]]};
        std::sort(pairs.begin(), pairs.end());

        double sy_total = 0.0, syy_total = 0.0;
        for (const auto& [xv, yv] : pairs) {
            sy_total += yv;
            syy_total += yv * yv;
        }
        double sy_left = 0.0, syy_left = 0.0;
        for (std::size_t r = 0; r + 1 < n; ++r) {
            sy_left += pairs[r].second;
            syy_left += pairs[r].second * pairs[r].second;
            if (pairs[r].first == pairs[r + 1].first) continue;  // not a boundary
            const double n_left = static_cast<double>(r + 1);
            const double n_right = static_cast<double>(n - r - 1);
            const double sse_left = syy_left - sy_left * sy_left / n_left;
            const double sy_right = sy_total - sy_left;
            const double sse_right = (syy_total - syy_left) - sy_right * sy_right / n_right;
            const double sse = sse_left + sse_right;
            if (!best.found || sse < best.sse) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (pairs[r].first + pairs[r + 1].first);
                best.sse = sse;
            }
        }
    }
    return best;
}

int build_node(Tree& tree, const Matrix& X, std::span<const double> y,
               const std::vector<std::size_t>& idx, int depth, int max_depth) {
    double sy = 0.0, syy = 0.0;
    for (std::size_t r : idx) {
        sy += y[r];
        syy += y[r] * y[r];
    }
    const double n = static_cast<double>(idx.size());
    const double mean = sy / n;
    const double sse = syy - sy * sy / n;

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].value = mean;

    if (depth >= max_depth || idx.size() < 2 || sse <= 1e-12) return id;
    const SplitChoice split = best_split(X, y, idx);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : idx)
        (X(r, split.feature) <= split.threshold ? left : right).push_back(r);

    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    const int l = build_node(tree, X, y, left, depth + 1, max_depth);
    const int r = build_node(tree, X, y, right, depth + 1, max_depth);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

}  // namespace

int Tree::depth() const { return node_depth(*this, 0); }

Tree train_tree(const Matrix& X, std::span<const double> y,
                std::span<const std::size_t> indices, int max_depth) {
    require(!indices.empty(), "train_tree: empty index set");
    Tree tree;
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    build_node(tree, X, y, idx, 0, max_depth);
    return tree;
}

double ForestModel::predict(std::span<const double> x) const {
    double acc = 0.0;
    for (const Tree& t : trees) acc += t.predict(x);
    return acc / static_cast<double>(trees.size());
}

ForestModel train_forest(const Matrix& X, std::span<const double> y, std::uint64_t seed,
                         const ForestConfig& cfg, Exec exec) {
    require(X.rows == y.size(), "train_forest: shape mismatch");
    require(X.rows >= 2, "train_forest: need at least two samples");
    require(cfg.n_trees >= 1 && cfg.max_depth >= 0, "train_forest: invalid configuration");

    ForestModel forest;
    forest.cfg = cfg;
    forest.seed = seed;
    forest.trees.resize(cfg.n_trees);

    auto build_one = [&](int t) {
        Rng rng(seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> idx(X.rows);
        if (cfg.bootstrap) {
            for (std::size_t r = 0; r < X.rows; ++r) idx[r] = rng.index(X.rows);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        forest.trees[t] = train_tree(X, y, idx, cfg.max_depth);
    };

    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (int t = 0; t < cfg.n_trees; ++t) build_one(t);
    } else {
        for (int t = 0; t < cfg.n_trees; ++t) build_one(t);
    }
    return forest;
}

}  // namespace kf
