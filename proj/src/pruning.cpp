#include "kanforge/pruning.hpp"

#include <algorithm>
#include <sstream>

#include "kanforge/jsonio.hpp"
#include "kanforge/kernels.hpp"

namespace kf {

std::vector<std::vector<NodeScore>> node_scores(const KanModel& model, const Matrix& X,
                                                Exec exec) {
    const std::size_t hidden_layers = model.layers.size() - 1;
    std::vector<std::vector<NodeScore>> scores(hidden_layers);
    if (hidden_layers == 0) return scores;

    const ActivationStats st = activation_stats(model, X, exec);
    for (std::size_t h = 0; h < hidden_layers; ++h) {
        const KanLayer& in_layer = model.layers[h];       // edges into the hidden layer
        const KanLayer& out_layer = model.layers[h + 1];  // edges out of it
        scores[h].resize(in_layer.out_dim);
        for (int q = 0; q < in_layer.out_dim; ++q) {
            NodeScore sc;
            for (int i = 0; i < in_layer.in_dim; ++i)
                sc.incoming = std::max(
                    sc.incoming, st.mean_abs[h][static_cast<std::size_t>(q) * in_layer.in_dim + i]);
            for (int j = 0; j < out_layer.out_dim; ++j)
                sc.outgoing = std::max(
                    sc.outgoing,
                    st.mean_abs[h + 1][static_cast<std::size_t>(j) * out_layer.in_dim + q]);
            scores[h][q] = sc;
        }
    }
    return scores;
}

PruneResult prune(const KanModel& model, const Matrix& X, const PruneConfig& cfg, Exec exec) {
    require(cfg.theta > 0, "prune: theta must be positive");

    PruneResult result;
    result.report.theta = cfg.theta;
    result.report.scores = node_scores(model, X, exec);
    result.report.widths_before = model.widths;

    const std::size_t hidden_layers = result.report.scores.size();
    std::vector<std::vector<std::size_t>> kept_indices(hidden_layers);
    result.report.kept.resize(hidden_layers);
    for (std::size_t h = 0; h < hidden_layers; ++h) {
        const auto& sc = result.report.scores[h];
        auto& mask = result.report.kept[h];
        mask.assign(sc.size(), false);
        for (std::size_t q = 0; q < sc.size(); ++q)
            mask[q] = std::min(sc[q].incoming, sc[q].outgoing) >= cfg.theta;
        if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
            // keep the single best node rather than produce a zero-width layer
            std::size_t best = 0;
            for (std::size_t q = 1; q < sc.size(); ++q)
                if (std::min(sc[q].incoming, sc[q].outgoing) >
                    std::min(sc[best].incoming, sc[best].outgoing))
                    best = q;
            mask[best] = true;
        }
        for (std::size_t q = 0; q < mask.size(); ++q)
            if (mask[q]) kept_indices[h].push_back(q);
    }

    // node index maps per layer boundary (input and output keep everything)
    std::vector<std::vector<std::size_t>> layer_nodes(model.widths.size());
    for (std::size_t l = 0; l < model.widths.size(); ++l) {
        if (l == 0 || l + 1 == model.widths.size()) {
            layer_nodes[l].resize(model.widths[l]);
            for (std::size_t q = 0; q < layer_nodes[l].size(); ++q) layer_nodes[l][q] = q;
        } else {
            layer_nodes[l] = kept_indices[l - 1];
        }
    }

    KanModel out;
    out.grid_interior = model.grid_interior;
    out.degree = model.degree;
    out.seed = model.seed;
    out.input_transform = model.input_transform;
    out.output_scale = model.output_scale;
    out.output_offset = model.output_offset;
    out.widths.resize(model.widths.size());
    for (std::size_t l = 0; l < layer_nodes.size(); ++l)
        out.widths[l] = static_cast<int>(layer_nodes[l].size());

    out.layers.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        KanLayer& layer = out.layers[l];
        layer.in_dim = out.widths[l];
        layer.out_dim = out.widths[l + 1];
        layer.edges.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
        for (int j = 0; j < layer.out_dim; ++j)
            for (int i = 0; i < layer.in_dim; ++i)
                layer.edge(j, i) = model.layers[l].edge(static_cast<int>(layer_nodes[l + 1][j]),
                                                        static_cast<int>(layer_nodes[l][i]));
    }

    result.report.widths_after = out.widths;
    result.model = std::move(out);
    return result;
}

std::string PruneReport::to_json() const {
    std::ostringstream os;
    os << "{\n  \"theta\": " << json::num(theta) << ",\n  \"widths_before\": "
       << json::int_array(widths_before) << ",\n  \"widths_after\": "
       << json::int_array(widths_after) << ",\n  \"hidden_layers\": [";
    for (std::size_t h = 0; h < scores.size(); ++h) {
        if (h) os << ",";
        os << "\n    {\"nodes\": [";
        for (std::size_t q = 0; q < scores[h].size(); ++q) {
            if (q) os << ", ";
            os << "{\"incoming\": " << json::num(scores[h][q].incoming)
               << ", \"outgoing\": " << json::num(scores[h][q].outgoing)
               << ", \"kept\": " << (kept[h][q] ? "true" : "false") << "}";
        }
        os << "]}";
    }
    os << "\n  ]\n}\n";
    return os.str();
}

}  // namespace kf
