// kanforge CLI: synthetic data generation, KAN pipeline (train/prune/refine/
// symbolify), baseline comparison, and SVG figure emission.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kanforge/baselines.hpp"
#include "kanforge/checkpoint.hpp"
#include "kanforge/dataset.hpp"
#include "kanforge/jsonio.hpp"
#include "kanforge/report.hpp"
#include "kanforge/svg.hpp"
#include "kanforge/symbolic.hpp"
#include "kanforge/training.hpp"

namespace fs = std::filesystem;
using namespace kf;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::vector<PumpSample> load_dataset(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("dataset file not found: " + path);
    return load_csv(path);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
    return out;
}

std::pair<double, double> parse_pair(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) {
        const double v = std::stod(s);
        return {v, v};
    }
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_indices(std::span<const std::size_t> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::string derive_path(const std::string& out, const std::string& suffix) {
    fs::path p(out);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
    std::size_t n = 98;
    std::string noise = "3.0,0.05";
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenArgs& a) {
    const auto [sigma_p, sigma_f] = parse_pair(a.noise);
    const auto samples = generate_synthetic(a.n, sigma_p, sigma_f, a.seed);
    std::vector<std::string> comments = {
        "seed=" + std::to_string(a.seed),
        "n=" + std::to_string(a.n),
        "noise=" + json::num(sigma_p) + "," + json::num(sigma_f),
    };
    write_csv(a.out, samples, comments);
    std::cout << "wrote " << samples.size() << " samples to " << a.out << "\n";
    return 0;
}

// ---- train / refine ----------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string target;
    std::string width;
    int grid = -1;
    int degree = -1;
    std::uint64_t seed = 0;
    std::string lambda = "0.01,0.01";
    int iters = 200;
    std::string out = "model.json";
    std::string trace;
    std::string checkpoint;  // refine only
};

int run_train_like(const TrainArgs& a, bool refine) {
    const Target target = parse_target(a.target);
    const auto samples = load_dataset(a.data);
    const SplitIndices idx = split(samples.size(), 0.9, a.seed);
    const TrainingArrays train = make_training_arrays(samples, idx.train, target);
    const TrainingArrays test = make_training_arrays(samples, idx.test, target);

    KanModel model;
    if (refine) {
        if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
        model = load_kan(a.checkpoint);
    } else {
        ArchConfig arch = ArchConfig::paper_default(target);
        if (!a.width.empty()) arch.widths = parse_int_list(a.width);
        if (a.grid > 0) arch.grid_interior = a.grid;
        if (a.degree > 0) arch.degree = a.degree;
        arch.seed = a.seed;
        model = new_kan(arch.widths, arch.grid_interior, arch.degree, arch.seed);
        model.input_transform = Normalizer::paper_ranges().domain_transform();
        set_output_transform(model, train.y);
    }

    TrainConfig cfg;
    cfg.max_iters = a.iters;
    cfg.seed = a.seed;
    const auto [ls, le] = parse_pair(a.lambda);
    cfg.lambda_sparsity = refine ? 0.0 : ls;
    cfg.lambda_entropy = refine ? 0.0 : le;

    const TrainResult result = lbfgs_minimize(model, train.X, train.y, cfg);

    Matrix Yp;
    forward_batch(result.model, test.X, Yp, cfg.exec);
    std::vector<double> pred(test.X.rows);
    for (std::size_t s = 0; s < test.X.rows; ++s) pred[s] = Yp(s, 0);
    const double test_mse = mse(pred, test.y);

    Metadata meta = {
        {"stage", refine ? "refined" : "sparse"},
        {"target", a.target},
        {"widths", join_ints(result.model.widths)},
        {"grid", std::to_string(result.model.grid_interior)},
        {"k", std::to_string(result.model.degree)},
        {"seed", std::to_string(a.seed)},
        {"lambda", json::num(cfg.lambda_sparsity) + "," + json::num(cfg.lambda_entropy)},
        {"iters", std::to_string(result.iterations)},
        {"stop_reason", result.stop_reason},
        {"data", a.data},
        {"train_loss", json::num(result.final_loss)},
        {"test_mse", json::num(test_mse)},
        {"timestamp", timestamp_now()},
    };
    save_kan(result.model, a.out, meta);
    const std::string trace_path =
        a.trace.empty() ? derive_path(a.out, ".trace.csv") : a.trace;
    result.trace.write_csv(trace_path);

    std::cout << (refine ? "refined" : "trained") << " " << target_name(target)
              << " model: train_loss=" << result.final_loss << " test_mse=" << test_mse
              << " iters=" << result.iterations << " (" << result.stop_reason << ")\n"
              << "checkpoint: " << a.out << "\ntrace: " << trace_path << "\n";
    return 0;
}

// ---- prune -------------------------------------------------------------------

struct PruneArgs {
    std::string checkpoint;
    std::string data;
    double theta = 0.01;
    std::uint64_t seed = 0;
    std::string out = "pruned.json";
    std::string report;
    std::string target = "pressure";
};

int run_prune(const PruneArgs& a) {
    if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
    const KanModel model = load_kan(a.checkpoint);
    const auto samples = load_dataset(a.data);
    const SplitIndices idx = split(samples.size(), 0.9, a.seed);
    const TrainingArrays train = make_training_arrays(samples, idx.train, parse_target(a.target));

    const PruneResult result = prune(model, train.X, PruneConfig{a.theta});

    Metadata meta = {
        {"stage", "pruned"},
        {"target", a.target},
        {"widths", join_ints(result.model.widths)},
        {"theta", json::num(a.theta)},
        {"seed", std::to_string(a.seed)},
        {"data", a.data},
        {"timestamp", timestamp_now()},
    };
    save_kan(result.model, a.out, meta);
    const std::string report_path =
        a.report.empty() ? derive_path(a.out, ".prune.json") : a.report;
    std::ofstream rep(report_path);
    rep << result.report.to_json();

    std::cout << "pruned widths " << join_ints(result.report.widths_before) << " -> "
              << join_ints(result.report.widths_after) << "\ncheckpoint: " << a.out
              << "\nreport: " << report_path << "\n";
    return 0;
}

// ---- symbolify -----------------------------------------------------------------

struct SymbolifyArgs {
    std::string checkpoint;
    std::string data;
    std::uint64_t seed = 0;
    std::string target = "pressure";
    std::string out = "formula";
};

int run_symbolify(const SymbolifyArgs& a) {
    if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
    const KanModel model = load_kan(a.checkpoint);
    const auto samples = load_dataset(a.data);
    const SplitIndices idx = split(samples.size(), 0.9, a.seed);
    const TrainingArrays train = make_training_arrays(samples, idx.train, parse_target(a.target));

    const ExtractionResult ext = extract_formula(model, train.X);

    std::ofstream txt(a.out + ".txt");
    txt << ext.formula.to_infix() << "\n";
    std::ofstream jsn(a.out + ".json");
    jsn << ext.formula.to_json() << "\n";
    std::ofstream r2(a.out + ".r2.csv");
    r2 << "layer,out_node,in_node,primitive,r2\n";
    for (const EdgeFitInfo& e : ext.report.edges)
        r2 << e.layer << "," << e.out_node << "," << e.in_node << ","
           << primitive_name(e.kind) << "," << json::num(e.r2) << "\n";

    std::cout << "formula: " << ext.formula.to_infix() << "\n"
              << "fidelity_mse=" << ext.report.fidelity_mse
              << (ext.report.low_fidelity ? " (low fidelity: some edge r2 < 0.5)" : "") << "\n"
              << "files: " << a.out << ".txt " << a.out << ".json " << a.out << ".r2.csv\n";
    return 0;
}

// ---- compare -------------------------------------------------------------------

struct CompareArgs {
    std::string data;
    std::uint64_t seed = 0;
    int iters = 200;
    std::string out;
};

int run_compare(const CompareArgs& a) {
    const auto samples = load_dataset(a.data);
    const SplitIndices idx = split(samples.size(), 0.9, a.seed);

    EvalReport report;
    report.metadata = {
        {"data", a.data},
        {"seed", std::to_string(a.seed)},
        {"split", "0.9"},
        {"test_indices", join_indices(idx.test)},
        {"timestamp", timestamp_now()},
    };

    for (const Target target : {Target::Pressure, Target::FlowRate}) {
        const TrainingArrays train = make_training_arrays(samples, idx.train, target);
        const TrainingArrays test = make_training_arrays(samples, idx.test, target);

        // KAN: full three-stage pipeline
        TrainConfig stage;
        stage.max_iters = a.iters;
        stage.seed = a.seed;
        const PipelineResult pipe = run_pipeline(samples, target, ArchConfig::paper_default(target),
                                                 stage, PruneConfig{}, stage, idx);
        report.rows.push_back({"KAN", target_name(target), pipe.stages.back().test_mse});

        // random forest on raw features (trees are scale-invariant)
        Matrix raw_train(idx.train.size(), kFeatureCount), raw_test(idx.test.size(), kFeatureCount);
        for (std::size_t r = 0; r < idx.train.size(); ++r) {
            const auto f = samples[idx.train[r]].features();
            for (int c = 0; c < kFeatureCount; ++c) raw_train(r, c) = f[c];
        }
        for (std::size_t r = 0; r < idx.test.size(); ++r) {
            const auto f = samples[idx.test[r]].features();
            for (int c = 0; c < kFeatureCount; ++c) raw_test(r, c) = f[c];
        }
        const ForestModel forest = train_forest(raw_train, train.y, a.seed);
        std::vector<double> pred(idx.test.size());
        for (std::size_t r = 0; r < idx.test.size(); ++r)
            pred[r] = forest.predict(raw_test.row(r));
        report.rows.push_back({"RandomForest", target_name(target), mse(pred, test.y)});

        // MLP on normalized features
        const MlpModel mlp = train_mlp(train.X, train.y, a.seed);
        for (std::size_t r = 0; r < idx.test.size(); ++r) pred[r] = mlp.predict(test.X.row(r));
        report.rows.push_back({"MLP", target_name(target), mse(pred, test.y)});
    }

    std::cout << report.to_table();
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        out << report.to_json();
        std::cout << "report: " << a.out << "\n";
    }
    return 0;
}

// ---- plots ----------------------------------------------------------------------

struct PlotSplinesArgs {
    std::string checkpoint;
    std::string out_dir = ".";
};

int run_plot_splines(const PlotSplinesArgs& a) {
    if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
    const KanModel model = load_kan(a.checkpoint);
    fs::create_directories(a.out_dir);

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const std::string path = a.out_dir + "/layer" + std::to_string(l) + ".svg";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write SVG file: " + path);
        out << plot_layer_activations(model, static_cast<int>(l));
        std::cout << path << "\n";
    }
    const std::string basis_path = a.out_dir + "/basis.svg";
    std::ofstream out(basis_path);
    if (!out) throw std::runtime_error("cannot write SVG file: " + basis_path);
    out << plot_basis_functions(SplineGrid::uniform(model.degree, model.grid_interior));
    std::cout << basis_path << "\n";
    return 0;
}

struct PlotTraceArgs {
    std::string trace;
    std::string out = "trace.svg";
};

int run_plot_trace(const PlotTraceArgs& a) {
    if (!fs::exists(a.trace)) throw UsageError("trace file not found: " + a.trace);
    const TrainTrace trace = TrainTrace::read_csv(a.trace);
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write SVG file: " + a.out);
    out << plot_trace(trace, "training trace");
    std::cout << a.out << "\n";
    return 0;
}

void add_seed_option(CLI::App* cmd, std::uint64_t& seed) {
    cmd->add_option("--seed", seed, "random seed")->envname("KANFORGE_SEED");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kanforge: spline-network surrogate models for flexible EHD pumps"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
    cmd_gen->add_option("--n", gen.n, "number of samples");
    cmd_gen->add_option("--noise", gen.noise, "per-target noise sigmas 'pressure,flow'");
    add_seed_option(cmd_gen, gen.seed);
    cmd_gen->add_option("--out", gen.out, "output CSV path")->required();

    TrainArgs train;
    CLI::App* cmd_train = app.add_subcommand("train", "stage-1 sparse training");
    cmd_train->add_option("--data", train.data, "dataset CSV")->required();
    cmd_train->add_option("--target", train.target, "pressure | flow_rate")->required();
    cmd_train->add_option("--width", train.width, "layer widths, e.g. 5,2,1");
    cmd_train->add_option("--grid", train.grid, "spline grid interval count");
    cmd_train->add_option("--k", train.degree, "spline degree");
    add_seed_option(cmd_train, train.seed);
    cmd_train->add_option("--lambda", train.lambda, "regularization 'sparsity,entropy'");
    cmd_train->add_option("--iters", train.iters, "max LBFGS iterations");
    cmd_train->add_option("--out", train.out, "checkpoint output path");
    cmd_train->add_option("--trace", train.trace, "trace CSV output path");

    TrainArgs refine;
    CLI::App* cmd_refine = app.add_subcommand("refine", "stage-3 refinement (no regularization)");
    cmd_refine->add_option("--checkpoint", refine.checkpoint, "input checkpoint")->required();
    cmd_refine->add_option("--data", refine.data, "dataset CSV")->required();
    cmd_refine->add_option("--target", refine.target, "pressure | flow_rate")->required();
    add_seed_option(cmd_refine, refine.seed);
    cmd_refine->add_option("--iters", refine.iters, "max LBFGS iterations");
    cmd_refine->add_option("--out", refine.out, "checkpoint output path");
    cmd_refine->add_option("--trace", refine.trace, "trace CSV output path");

    PruneArgs prune_args;
    CLI::App* cmd_prune = app.add_subcommand("prune", "stage-2 node pruning");
    cmd_prune->add_option("--checkpoint", prune_args.checkpoint, "input checkpoint")->required();
    cmd_prune->add_option("--data", prune_args.data, "dataset CSV")->required();
    cmd_prune->add_option("--target", prune_args.target, "pressure | flow_rate");
    cmd_prune->add_option("--theta", prune_args.theta, "node score threshold");
    add_seed_option(cmd_prune, prune_args.seed);
    cmd_prune->add_option("--out", prune_args.out, "checkpoint output path");
    cmd_prune->add_option("--report", prune_args.report, "prune report JSON path");

    SymbolifyArgs sym;
    CLI::App* cmd_sym = app.add_subcommand("symbolify", "extract a closed-form formula");
    cmd_sym->add_option("--checkpoint", sym.checkpoint, "input checkpoint")->required();
    cmd_sym->add_option("--data", sym.data, "dataset CSV")->required();
    cmd_sym->add_option("--target", sym.target, "pressure | flow_rate");
    add_seed_option(cmd_sym, sym.seed);
    cmd_sym->add_option("--out", sym.out, "output file prefix");

    CompareArgs cmp;
    CLI::App* cmd_cmp = app.add_subcommand("compare", "KAN vs RandomForest vs MLP table");
    cmd_cmp->add_option("--data", cmp.data, "dataset CSV")->required();
    add_seed_option(cmd_cmp, cmp.seed);
    cmd_cmp->add_option("--iters", cmp.iters, "max LBFGS iterations per stage");
    cmd_cmp->add_option("--out", cmp.out, "report JSON path");

    PlotSplinesArgs ps;
    CLI::App* cmd_ps = app.add_subcommand("plot-splines", "emit SVG activation/basis figures");
    cmd_ps->add_option("--checkpoint", ps.checkpoint, "input checkpoint")->required();
    cmd_ps->add_option("--out-dir", ps.out_dir, "output directory");

    PlotTraceArgs pt;
    CLI::App* cmd_pt = app.add_subcommand("plot-trace", "emit an SVG training trace");
    cmd_pt->add_option("--trace", pt.trace, "trace CSV from train/refine")->required();
    cmd_pt->add_option("--out", pt.out, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(cmd_gen)) return run_gen(gen);
        if (app.got_subcommand(cmd_train)) return run_train_like(train, false);
        if (app.got_subcommand(cmd_refine)) return run_train_like(refine, true);
        if (app.got_subcommand(cmd_prune)) return run_prune(prune_args);
        if (app.got_subcommand(cmd_sym)) return run_symbolify(sym);
        if (app.got_subcommand(cmd_cmp)) return run_compare(cmp);
        if (app.got_subcommand(cmd_ps)) return run_plot_splines(ps);
        if (app.got_subcommand(cmd_pt)) return run_plot_trace(pt);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CsvError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {  // bad flag values
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
