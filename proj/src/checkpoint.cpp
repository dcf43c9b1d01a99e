#include "kanforge/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kanforge/jsonio.hpp"

namespace kf {

namespace {

std::string metadata_block(const Metadata& meta) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < meta.size(); ++i) {
        if (i) os << ", ";
        os << json::str(meta[i].first) << ": " << json::str(meta[i].second);
    }
    os << "}";
    return os.str();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << body;
}

nlohmann::json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion)
        throw std::runtime_error("checkpoint schema mismatch: " + path);
    return j;
}

std::string transform_block(const KanModel& m) {
    return "{\"scale\": " + json::num_array(m.input_transform.scale) +
           ", \"offset\": " + json::num_array(m.input_transform.offset) +
           ", \"target_scale\": " + json::num(m.output_scale) +
           ", \"target_offset\": " + json::num(m.output_offset) + "}";
}

void transform_from(const nlohmann::json& j, KanModel& m) {
    m.input_transform.scale = j.at("scale").get<std::vector<double>>();
    m.input_transform.offset = j.at("offset").get<std::vector<double>>();
    m.output_scale = j.at("target_scale").get<double>();
    m.output_offset = j.at("target_offset").get<double>();
}

}  // namespace

void save_kan(const KanModel& model, const std::string& path, const Metadata& meta) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"schema_version\": " << kSchemaVersion << ",\n";
    os << "  \"kind\": \"kan\",\n";
    os << "  \"widths\": " << json::int_array(model.widths) << ",\n";
    os << "  \"grid_G\": " << model.grid_interior << ",\n";
    os << "  \"degree_k\": " << model.degree << ",\n";
    os << "  \"seed\": " << model.seed << ",\n";
    os << "  \"normalizer\": " << transform_block(model) << ",\n";
    os << "  \"layers\": [";
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        if (l) os << ",";
        const KanLayer& layer = model.layers[l];
        const SplineGrid& grid = layer.edges[0].spline.grid;
        os << "\n    {\"domain\": [" << json::num(grid.lo) << ", " << json::num(grid.hi)
           << "], \"edges\": [";
        for (std::size_t e = 0; e < layer.edges.size(); ++e) {
            if (e) os << ",";
            const KanEdge& edge = layer.edges[e];
            os << "\n      {\"coeffs\": " << json::num_array(edge.spline.coeffs)
               << ", \"w_base\": " << json::num(edge.w_base)
               << ", \"w_spline\": " << json::num(edge.w_spline) << "}";
        }
        os << "\n    ]}";
    }
    os << "\n  ],\n";
    os << "  \"metadata\": " << metadata_block(meta) << "\n";
    os << "}\n";
    write_file(path, os.str());
}

KanModel load_kan(const std::string& path) {
    const nlohmann::json j = read_file(path);
    if (j.at("kind").get<std::string>() != "kan")
        throw std::runtime_error("checkpoint is not a kan model: " + path);

    KanModel model;
    model.widths = j.at("widths").get<std::vector<int>>();
    model.grid_interior = j.at("grid_G").get<int>();
    model.degree = j.at("degree_k").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    transform_from(j.at("normalizer"), model);

    const auto& layers = j.at("layers");
    require(layers.size() + 1 == model.widths.size(), "checkpoint layers do not match widths");
    model.layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& dom = layers[l].at("domain");
        const SplineGrid grid = SplineGrid::uniform(model.degree, model.grid_interior,
                                                    dom.at(0).get<double>(),
                                                    dom.at(1).get<double>());
        KanLayer& layer = model.layers[l];
        layer.in_dim = model.widths[l];
        layer.out_dim = model.widths[l + 1];
        const auto& edges = layers[l].at("edges");
        require(edges.size() == static_cast<std::size_t>(layer.in_dim) * layer.out_dim,
                "checkpoint edge count does not match widths");
        layer.edges.resize(edges.size());
        for (std::size_t e = 0; e < edges.size(); ++e) {
            KanEdge& edge = layer.edges[e];
            edge.spline.grid = grid;
            edge.spline.coeffs = edges[e].at("coeffs").get<std::vector<double>>();
            require(edge.spline.coeffs.size() == static_cast<std::size_t>(grid.basis_count()),
                    "checkpoint coefficient count does not match grid");
            edge.w_base = edges[e].at("w_base").get<double>();
            edge.w_spline = edges[e].at("w_spline").get<double>();
        }
    }
    return model;
}

void save_mlp(const MlpModel& model, std::uint64_t seed, const std::string& path,
              const Metadata& meta) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"schema_version\": " << kSchemaVersion << ",\n";
    os << "  \"kind\": \"mlp\",\n";
    os << "  \"sizes\": " << json::int_array(model.sizes) << ",\n";
    os << "  \"seed\": " << seed << ",\n";
    os << "  \"target_mean\": " << json::num(model.target_mean) << ",\n";
    os << "  \"target_scale\": " << json::num(model.target_scale) << ",\n";
    os << "  \"layers\": [";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (l) os << ",";
        os << "\n    {\"weights\": " << json::num_array(model.weights[l].data)
           << ", \"biases\": " << json::num_array(model.biases[l]) << "}";
    }
    os << "\n  ],\n";
    os << "  \"metadata\": " << metadata_block(meta) << "\n";
    os << "}\n";
    write_file(path, os.str());
}

MlpModel load_mlp(const std::string& path) {
    const nlohmann::json j = read_file(path);
    if (j.at("kind").get<std::string>() != "mlp")
        throw std::runtime_error("checkpoint is not an mlp model: " + path);
    MlpModel m;
    m.sizes = j.at("sizes").get<std::vector<int>>();
    m.target_mean = j.at("target_mean").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    const auto& layers = j.at("layers");
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        Matrix W(m.sizes[l + 1], m.sizes[l]);
        W.data = layers.at(l).at("weights").get<std::vector<double>>();
        require(W.data.size() == W.rows * W.cols, "mlp checkpoint weight shape mismatch");
        m.weights.push_back(std::move(W));
        m.biases.push_back(layers.at(l).at("biases").get<std::vector<double>>());
    }
    return m;
}

void save_forest(const ForestModel& model, const std::string& path, const Metadata& meta) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"schema_version\": " << kSchemaVersion << ",\n";
    os << "  \"kind\": \"forest\",\n";
    os << "  \"n_trees\": " << model.cfg.n_trees << ",\n";
    os << "  \"max_depth\": " << model.cfg.max_depth << ",\n";
    os << "  \"seed\": " << model.seed << ",\n";
    os << "  \"trees\": [";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        if (t) os << ",";
        os << "\n    {\"nodes\": [";
        const Tree& tree = model.trees[t];
        for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
            if (n) os << ", ";
            const TreeNode& node = tree.nodes[n];
            os << "{\"feature\": " << node.feature << ", \"threshold\": "
               << json::num(node.threshold) << ", \"value\": " << json::num(node.value)
               << ", \"left\": " << node.left << ", \"right\": " << node.right << "}";
        }
        os << "]}";
    }
    os << "\n  ],\n";
    os << "  \"metadata\": " << metadata_block(meta) << "\n";
    os << "}\n";
    write_file(path, os.str());
}

ForestModel load_forest(const std::string& path) {
    const nlohmann::json j = read_file(path);
    if (j.at("kind").get<std::string>() != "forest")
        throw std::runtime_error("checkpoint is not a forest model: " + path);
    ForestModel m;
    m.cfg.n_trees = j.at("n_trees").get<int>();
    m.cfg.max_depth = j.at("max_depth").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode node;
            node.feature = jn.at("feature").get<int>();
            node.threshold = jn.at("threshold").get<double>();
            node.value = jn.at("value").get<double>();
            node.left = jn.at("left").get<int>();
            node.right = jn.at("right").get<int>();
            tree.nodes.push_back(node);
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

std::string checkpoint_kind(const std::string& path) {
    return read_file(path).at("kind").get<std::string>();
}

}  // namespace kf
