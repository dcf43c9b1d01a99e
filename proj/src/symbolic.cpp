#include "kanforge/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "kanforge/jsonio.hpp"
#include "kanforge/kernels.hpp"

namespace kf {

namespace {

double f_identity(double u) { return u; }
double f_square(double u) { return u * u; }
double f_cube(double u) { return u * u * u; }
double f_quartic(double u) { return (u * u) * (u * u); }
double f_tanh(double u) { return std::tanh(u); }
double f_sin(double u) { return std::sin(u); }
double f_exp(double u) { return std::exp(u); }
double f_neg_exp(double u) { return std::exp(-u); }
double f_log_shifted(double u) { return std::log1p(u); }

const double kInf = std::numeric_limits<double>::infinity();

// exp and its decaying mirror search positive scales only; with a signed
// scale they describe the same family and could never be told apart
const std::vector<Primitive> kLibrary = {
    {PrimitiveKind::Identity, "identity", f_identity, -kInf, kInf, false, 0},
    {PrimitiveKind::Square, "square", f_square, -kInf, kInf, false, 1},
    {PrimitiveKind::Cube, "cube", f_cube, -kInf, kInf, false, 2},
    {PrimitiveKind::Quartic, "quartic", f_quartic, -kInf, kInf, false, 3},
    {PrimitiveKind::Tanh, "tanh", f_tanh, -kInf, kInf, false, 4},
    {PrimitiveKind::Sin, "sin", f_sin, -kInf, kInf, false, 5},
    {PrimitiveKind::Exp, "exp", f_exp, -700.0, 700.0, true, 6},
    {PrimitiveKind::NegExpDecay, "neg_exp_decay", f_neg_exp, -700.0, 700.0, true, 7},
    {PrimitiveKind::LogShifted, "log_shifted", f_log_shifted, -1.0 + 1e-9, kInf, false, 8},
};

}  // namespace

const std::vector<Primitive>& primitive_library() { return kLibrary; }

const Primitive& primitive(PrimitiveKind kind) {
    for (const Primitive& p : kLibrary)
        if (p.kind == kind) return p;
    throw std::invalid_argument("unknown primitive kind");
}

const char* primitive_name(PrimitiveKind kind) { return primitive(kind).name; }

double AffineWrap::eval(double x) const { return c * primitive(kind).f(a * x + b) + d; }

namespace {

struct CandidateFit {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    double ssr = kInf;
    bool valid = false;
};

// closed-form least squares for (c, d) given fixed (a, b)
CandidateFit solve_cd(const Primitive& prim, double a, double b, std::span<const double> xs,
                      std::span<const double> ys) {
    CandidateFit fit;
    fit.a = a;
    fit.b = b;
    const std::size_t n = xs.size();
    double sf = 0.0, sff = 0.0, sy = 0.0, sfy = 0.0;
    std::vector<double> feat(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = a * xs[i] + b;
        if (u < prim.domain_lo || u > prim.domain_hi) return fit;  // outside admissible window
        const double f = prim.f(u);
        if (!std::isfinite(f)) return fit;
        feat[i] = f;
        sf += f;
        sff += f * f;
        sy += ys[i];
        sfy += f * ys[i];
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sff - sf * sf;
    if (std::fabs(det) <= 1e-12 * std::max(nn * sff, 1.0)) {
        fit.c = 0.0;
        fit.d = sy / nn;
    } else {
        fit.c = (nn * sfy - sf * sy) / det;
        fit.d = (sy - fit.c * sf) / nn;
    }
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = fit.c * feat[i] + fit.d - ys[i];
        ssr += e * e;
    }
    fit.ssr = ssr;
    fit.valid = std::isfinite(ssr);
    return fit;
}

void consider(CandidateFit& best, const CandidateFit& cand) {
    if (cand.valid && cand.ssr < best.ssr) best = cand;
}

}  // namespace

AffineFit fit_affine(const Primitive& prim, std::span<const double> xs,
                     std::span<const double> ys) {
    require(xs.size() == ys.size(), "fit_affine: xs and ys must have equal length");
    require(xs.size() >= 8, "fit_affine: need at least 8 sample pairs");

    const double n = static_cast<double>(ys.size());
    double ymean = 0.0;
    for (double y : ys) ymean += y;
    ymean /= n;
    double sst = 0.0;
    for (double y : ys) sst += (y - ymean) * (y - ymean);

    AffineFit out;
    // zero-variance targets (up to rounding of the mean): constant wrap
    if (sst <= 1e-24 * n * std::max(1.0, ymean * ymean)) {
        out.wrap = {prim.kind, 1.0, 0.0, 0.0, ymean};
        out.r2 = 1.0;
        return out;
    }

    // coarse grid: |a| log-spaced over [0.1, 10] x 41, b linear over [-5, 5] x 41
    CandidateFit best;
    for (int ia = 0; ia <= 40; ++ia) {
        const double mag = std::pow(10.0, -1.0 + 2.0 * ia / 40.0);
        for (int sgn = 0; sgn < (prim.positive_scale_only ? 1 : 2); ++sgn) {
            const double a = sgn ? -mag : mag;
            for (int ib = 0; ib <= 40; ++ib) {
                const double b = -5.0 + 10.0 * ib / 40.0;
                consider(best, solve_cd(prim, a, b, xs, ys));
            }
        }
    }
    if (!best.valid) {  // no admissible grid point: fall back to the constant fit
        out.wrap = {prim.kind, 1.0, 0.0, 0.0, ymean};
        out.r2 = 0.0;
        return out;
    }

    // three rounds of coordinate descent, shrinking local windows
    double ha = std::log(10.0) * 0.025;  // half of the log10 grid step
    double hb = 0.125;                   // half of the b grid step
    for (int round = 0; round < 3; ++round) {
        for (int t = -10; t <= 10; ++t) {
            const double a = best.a * std::exp(ha * t / 10.0);
            consider(best, solve_cd(prim, a, best.b, xs, ys));
        }
        for (int t = -10; t <= 10; ++t) {
            const double b = best.b + hb * t / 10.0;
            consider(best, solve_cd(prim, best.a, b, xs, ys));
        }
        ha /= 8.0;
        hb /= 8.0;
    }

    out.wrap = {prim.kind, best.a, best.b, best.c, best.d};
    out.r2 = 1.0 - best.ssr / sst;
    return out;
}

SnapResult snap_edge(const KanEdge& edge, std::span<const double> x_column) {
    require(!x_column.empty(), "snap_edge: empty input column");
    const auto [mn_it, mx_it] = std::minmax_element(x_column.begin(), x_column.end());
    const double mn = *mn_it, mx = *mx_it;

    const int kGridPoints = 201;
    std::vector<double> xs(kGridPoints), ys(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) {
        xs[i] = (mx > mn) ? mn + (mx - mn) * i / (kGridPoints - 1) : mn;
        ys[i] = edge_eval(edge, xs[i]);
    }

    struct Entry {
        AffineFit fit;
        int complexity;
    };
    std::vector<Entry> entries;
    entries.reserve(primitive_library().size());
    for (const Primitive& prim : primitive_library())
        entries.push_back({fit_affine(prim, xs, ys), prim.complexity});

    std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
        if (l.fit.r2 != r.fit.r2) return l.fit.r2 > r.fit.r2;
        return l.complexity < r.complexity;
    });

    SnapResult result;
    result.best = entries.front().fit.wrap;
    result.best_r2 = entries.front().fit.r2;
    for (const Entry& e : entries) result.ranking.emplace_back(e.fit.wrap.kind, e.fit.r2);
    return result;
}

namespace {

std::unique_ptr<FormulaNode> clone_node(const FormulaNode& n) {
    auto out = std::make_unique<FormulaNode>();
    out->op = n.op;
    out->input_index = n.input_index;
    out->wrap = n.wrap;
    for (const auto& c : n.children) out->children.push_back(clone_node(*c));
    return out;
}

double eval_node(const FormulaNode& n, std::span<const double> x) {
    switch (n.op) {
        case FormulaNode::Op::Input:
            return x[n.input_index];
        case FormulaNode::Op::Sum: {
            double acc = 0.0;
            for (const auto& c : n.children) acc += eval_node(*c, x);
            return acc;
        }
        case FormulaNode::Op::Wrap:
            return n.wrap.eval(eval_node(*n.children[0], x));
    }
    return 0.0;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool is_simple_token(const std::string& s) {
    return s.find(' ') == std::string::npos && s.find('+') == std::string::npos &&
           (s.empty() || s[0] != '-');
}

std::string render_infix(const FormulaNode& n);

std::string render_wrap(const AffineWrap& w, const FormulaNode& child) {
    if (w.c == 0.0) return fmt_short(w.d);

    std::string inner = render_infix(child);
    if (!is_simple_token(inner)) inner = "(" + inner + ")";

    std::string arg;
    if (w.a == 1.0) arg = inner;
    else arg = fmt_short(w.a) + "*" + inner;
    if (w.b != 0.0) arg += (w.b > 0 ? " + " : " - ") + fmt_short(std::fabs(w.b));

    std::string body;
    switch (w.kind) {
        case PrimitiveKind::Identity: body = "(" + arg + ")"; break;
        case PrimitiveKind::Square: body = "(" + arg + ")^2"; break;
        case PrimitiveKind::Cube: body = "(" + arg + ")^3"; break;
        case PrimitiveKind::Quartic: body = "(" + arg + ")^4"; break;
        case PrimitiveKind::Tanh: body = "tanh(" + arg + ")"; break;
        case PrimitiveKind::Sin: body = "sin(" + arg + ")"; break;
        case PrimitiveKind::Exp: body = "exp(" + arg + ")"; break;
        case PrimitiveKind::NegExpDecay: body = "exp(-(" + arg + "))"; break;
        case PrimitiveKind::LogShifted: body = "log(1 + " + arg + ")"; break;
    }

    std::string term = (w.c == 1.0) ? body : fmt_short(w.c) + "*" + body;
    if (w.d != 0.0) term += (w.d > 0 ? " + " : " - ") + fmt_short(std::fabs(w.d));
    return term;
}

std::string render_infix(const FormulaNode& n) {
    switch (n.op) {
        case FormulaNode::Op::Input:
            return "x" + std::to_string(n.input_index + 1);
        case FormulaNode::Op::Sum: {
            std::vector<std::string> terms;
            for (const auto& c : n.children) {
                std::string t = render_infix(*c);
                if (t != "0") terms.push_back(std::move(t));
            }
            if (terms.empty()) return "0";
            std::string out = terms[0];
            for (std::size_t i = 1; i < terms.size(); ++i) out += " + " + terms[i];
            return out;
        }
        case FormulaNode::Op::Wrap:
            return render_wrap(n.wrap, *n.children[0]);
    }
    return "0";
}

std::string json_node(const FormulaNode& n) {
    std::ostringstream os;
    switch (n.op) {
        case FormulaNode::Op::Input:
            os << "{\"op\": \"input\", \"index\": " << n.input_index << "}";
            break;
        case FormulaNode::Op::Sum: {
            os << "{\"op\": \"sum\", \"children\": [";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) os << ", ";
                os << json_node(*n.children[i]);
            }
            os << "]}";
            break;
        }
        case FormulaNode::Op::Wrap:
            os << "{\"op\": \"wrap\", \"primitive\": \"" << primitive_name(n.wrap.kind)
               << "\", \"params\": {\"a\": " << json::num(n.wrap.a)
               << ", \"b\": " << json::num(n.wrap.b) << ", \"c\": " << json::num(n.wrap.c)
               << ", \"d\": " << json::num(n.wrap.d) << "}, \"children\": ["
               << json_node(*n.children[0]) << "]}";
            break;
    }
    return os.str();
}

}  // namespace

double SymbolicFormula::eval(std::span<const double> x) const { return eval_node(*root, x); }

std::string SymbolicFormula::to_infix() const { return render_infix(*root); }

std::string SymbolicFormula::to_json() const { return json_node(*root); }

ExtractionResult extract_formula(const KanModel& model, const Matrix& X, Exec exec) {
    require(X.rows >= 1, "extract_formula: empty sample matrix");
    require(model.widths.back() == 1, "extract_formula: model must have a single output");

    const std::vector<Matrix> nodes = node_values_batch(model, X, exec);

    // per-layer snap results, edges row-major; snapping is independent per edge
    std::vector<std::vector<SnapResult>> snaps(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const KanLayer& layer = model.layers[l];
        snaps[l].resize(layer.edges.size());
        std::vector<double> column(X.rows);
#pragma omp parallel for schedule(static) firstprivate(column)
        for (long long e = 0; e < static_cast<long long>(layer.edges.size()); ++e) {
            const int i = static_cast<int>(e % layer.in_dim);
            for (std::size_t s = 0; s < X.rows; ++s) column[s] = nodes[l](s, i);
            snaps[l][e] = snap_edge(layer.edges[e], column);
        }
    }

    // assemble the tree bottom-up
    std::vector<std::unique_ptr<FormulaNode>> current;
    for (int i = 0; i < model.widths[0]; ++i) {
        auto leaf = std::make_unique<FormulaNode>();
        leaf->op = FormulaNode::Op::Input;
        leaf->input_index = i;
        current.push_back(std::move(leaf));
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const KanLayer& layer = model.layers[l];
        std::vector<std::unique_ptr<FormulaNode>> next;
        for (int j = 0; j < layer.out_dim; ++j) {
            auto sum = std::make_unique<FormulaNode>();
            sum->op = FormulaNode::Op::Sum;
            for (int i = 0; i < layer.in_dim; ++i) {
                auto wrap = std::make_unique<FormulaNode>();
                wrap->op = FormulaNode::Op::Wrap;
                wrap->wrap = snaps[l][static_cast<std::size_t>(j) * layer.in_dim + i].best;
                wrap->children.push_back(clone_node(*current[i]));
                sum->children.push_back(std::move(wrap));
            }
            next.push_back(std::move(sum));
        }
        current = std::move(next);
    }

    ExtractionResult result;
    if (model.output_scale != 1.0 || model.output_offset != 0.0) {
        auto top = std::make_unique<FormulaNode>();
        top->op = FormulaNode::Op::Wrap;
        top->wrap = {PrimitiveKind::Identity, 1.0, 0.0, model.output_scale, model.output_offset};
        top->children.push_back(std::move(current[0]));
        result.formula.root = std::move(top);
    } else {
        result.formula.root = std::move(current[0]);
    }

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const KanLayer& layer = model.layers[l];
        for (int j = 0; j < layer.out_dim; ++j)
            for (int i = 0; i < layer.in_dim; ++i) {
                const SnapResult& sn = snaps[l][static_cast<std::size_t>(j) * layer.in_dim + i];
                result.report.edges.push_back(
                    {static_cast<int>(l), j, i, sn.best.kind, sn.best_r2});
                if (sn.best_r2 < 0.5) result.report.low_fidelity = true;
            }
    }

    Matrix Y;
    forward_batch(model, X, Y, exec);
    double acc = 0.0;
    for (std::size_t s = 0; s < X.rows; ++s) {
        const double e = result.formula.eval(X.row(s)) - Y(s, 0);
        acc += e * e;
    }
    result.report.fidelity_mse = acc / static_cast<double>(X.rows);
    return result;
}

double eval_paper_formula(PaperTarget which, std::span<const double> x_unit) {
    require(x_unit.size() == 5, "eval_paper_formula: expected a 5-vector");
    for (double v : x_unit) {
        if (v < -1e-12 || v > 1.0 + 1e-12) {
            std::fprintf(stderr,
                         "warning: formula input outside the [0,1] box; evaluating anyway\n");
            break;
        }
    }
    const double x1 = x_unit[0], x2 = x_unit[1], x3 = x_unit[2], x4 = x_unit[3], x5 = x_unit[4];
    if (which == PaperTarget::Y1) {
        const double e = -0.01 * std::pow(1.0 - 0.8 * x2, 3) +
                         4.3 * std::pow(1.0 - 0.75 * x4, 4) - 0.06 * std::exp(3.03 * x1) +
                         3.18 * std::tanh(0.18 * x3 - 0.55) + 2.43 * std::exp(-2.57 * x5);
        return 12.46 * std::exp(e) - 1.87;
    }
    const double u = 22.4 * std::pow(0.9 - x4, 4) - 3.33 * std::sin(6.2 * x3 - 2.35) + 0.08 -
                     2.11 * std::exp(-1.72 * x5) + 2.13 * std::exp(-0.24 * x2) -
                     0.89 * std::exp(-1.4 * x1);
    return 1.7 - 1.59 * std::tanh(u);
}

}  // namespace kf
