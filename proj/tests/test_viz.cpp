#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <vector>

#include "kanforge/checkpoint.hpp"
#include "kanforge/rng.hpp"
#include "kanforge/svg.hpp"

using namespace kf;
namespace fs = std::filesystem;

namespace {

// minimal XML well-formedness check: balanced tags, quoted attributes
bool xml_well_formed(const std::string& s) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    if (s.rfind("<?xml", 0) == 0) i = s.find("?>");
    if (i == std::string::npos) return false;
    while ((i = s.find('<', i)) != std::string::npos) {
        const std::size_t end = s.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = s.substr(i + 1, end - i - 1);
        if (tag.empty()) return false;
        if (tag[0] == '/') {
            if (stack.empty()) return false;
            if (stack.back() != tag.substr(1)) return false;
            stack.pop_back();
        } else if (tag.back() != '/' && tag[0] != '?' && tag[0] != '!') {
            const std::size_t sp = tag.find_first_of(" \t\n");
            stack.push_back(sp == std::string::npos ? tag : tag.substr(0, sp));
        }
        // count unescaped quotes inside the tag
        int quotes = 0;
        for (char c : tag)
            if (c == '"') ++quotes;
        if (quotes % 2 != 0) return false;
        i = end + 1;
    }
    return stack.empty();
}

int count_curves(const std::string& svg) {
    int n = 0;
    std::size_t pos = 0;
    while ((pos = svg.find("class=\"curve\"", pos)) != std::string::npos) {
        ++n;
        pos += 13;
    }
    return n;
}

}  // namespace

TEST_CASE("basis panel has basis_count curves and is well-formed XML") {
    const SplineGrid g = SplineGrid::uniform(3, 2, -1.0, 1.0);
    const std::string svg = plot_basis_functions(g);
    CHECK(xml_well_formed(svg));
    CHECK(count_curves(svg) == 5);  // G + k = 2 + 3
    CHECK(svg.find("viewBox") != std::string::npos);
    CHECK(svg.find("width=") != std::string::npos);
    CHECK(svg.find("height=") != std::string::npos);
}

TEST_CASE("layer plot emits one curve per edge") {
    const KanModel m = new_kan({5, 2, 1}, 2, 3, 0);
    const std::string svg0 = plot_layer_activations(m, 0);
    CHECK(xml_well_formed(svg0));
    CHECK(count_curves(svg0) == 10);
    const std::string svg1 = plot_layer_activations(m, 1);
    CHECK(count_curves(svg1) == 2);
    CHECK_THROWS_AS(plot_layer_activations(m, 5), std::invalid_argument);
}

TEST_CASE("zero network still renders valid flat curves") {
    KanModel m = new_kan({3, 1}, 2, 3, 0);
    unflatten_params(m, std::vector<double>(param_count(m), 0.0));
    const std::string svg = plot_layer_activations(m, 0);
    CHECK(xml_well_formed(svg));
    CHECK(count_curves(svg) == 3);
}

TEST_CASE("trace plot renders the three series") {
    TrainTrace t;
    for (int i = 1; i <= 20; ++i)
        t.rows.push_back({i, 1.0 / i, 0.01 / i, 0.5 / i});
    const std::string svg = plot_trace(t, "demo");
    CHECK(xml_well_formed(svg));
    CHECK(count_curves(svg) == 3);
    CHECK(svg.find("train_loss") != std::string::npos);
    CHECK(svg.find("grad_norm") != std::string::npos);
}

TEST_CASE("kan checkpoint round-trips bit-exactly") {
    KanModel m = new_kan({5, 3, 1}, 4, 3, 17);
    m.input_transform.scale = {1, 2, 3, 4, 5};
    m.input_transform.offset = {-1, 0, 1, 0.5, -0.5};
    m.output_scale = 321.5;
    m.output_offset = 77.25;
    const std::string path = (fs::temp_directory_path() / "kf_ckpt.json").string();
    save_kan(m, path, {{"note", "test"}});
    const KanModel back = load_kan(path);
    CHECK(back.widths == m.widths);
    CHECK(back.grid_interior == m.grid_interior);
    CHECK(back.degree == m.degree);
    CHECK(back.seed == m.seed);
    CHECK(back.output_scale == m.output_scale);
    CHECK(back.output_offset == m.output_offset);
    CHECK(back.input_transform.scale == m.input_transform.scale);
    const auto a = flatten_params(m), b = flatten_params(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    // hidden-layer domains survive the round trip
    CHECK(back.layers[1].edges[0].spline.grid.lo == m.layers[1].edges[0].spline.grid.lo);
    CHECK(checkpoint_kind(path) == "kan");
    fs::remove(path);
}

TEST_CASE("mlp and forest checkpoints round-trip") {
    const std::string path = (fs::temp_directory_path() / "kf_ckpt2.json").string();

    MlpModel mlp = make_mlp(5, {8, 8, 8}, 3);
    mlp.target_mean = 12.0;
    mlp.target_scale = 3.5;
    save_mlp(mlp, 3, path);
    const MlpModel mback = load_mlp(path);
    CHECK(mback.sizes == mlp.sizes);
    CHECK(mback.target_mean == mlp.target_mean);
    const auto a = mlp_flatten(mlp), b = mlp_flatten(mback);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    Matrix X(10, 2);
    Rng rng(4);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y(X.rows);
    for (std::size_t s = 0; s < X.rows; ++s) y[s] = X(s, 0);
    ForestConfig fc;
    fc.n_trees = 5;
    fc.max_depth = 3;
    const ForestModel f = train_forest(X, y, 2, fc);
    save_forest(f, path);
    const ForestModel fback = load_forest(path);
    REQUIRE(fback.trees.size() == f.trees.size());
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        CHECK(f.predict(x) == fback.predict(x));
    }
    CHECK(checkpoint_kind(path) == "forest");
    fs::remove(path);
}

TEST_CASE("schema mismatches are rejected") {
    const std::string path = (fs::temp_directory_path() / "kf_bad_ckpt.json").string();
    {
        std::ofstream out(path);
        out << "{\"schema_version\": 99, \"kind\": \"kan\"}";
    }
    CHECK_THROWS_AS(load_kan(path), std::runtime_error);
    {
        std::ofstream out(path);
        out << "{\"schema_version\": 1, \"kind\": \"mlp\", \"sizes\": [1,1], \"seed\": 0, "
               "\"target_mean\": 0, \"target_scale\": 1, \"layers\": []}";
    }
    CHECK_THROWS_AS(load_kan(path), std::runtime_error);  // wrong kind
    fs::remove(path);
}

TEST_CASE("checkpoint doubles are written with 17 significant digits") {
    KanModel m = new_kan({2, 1}, 2, 3, 0);
    m.layers[0].edges[0].w_base = 1.0 / 3.0;
    const std::string path = (fs::temp_directory_path() / "kf_digits.json").string();
    save_kan(m, path);
    std::ifstream in(path);
    const std::string body((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    CHECK(body.find("0.33333333333333331") != std::string::npos);
    fs::remove(path);
}
