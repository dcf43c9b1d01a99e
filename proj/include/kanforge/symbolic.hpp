#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "kanforge/common.hpp"
#include "kanforge/kan.hpp"

namespace kf {

enum class PrimitiveKind {
    Identity,
    Square,
    Cube,
    Quartic,
    Tanh,
    Sin,
    Exp,
    NegExpDecay,
    LogShifted,
};

// A univariate closed form with the admissible input window and the
// complexity rank used for deterministic tie-breaking.
struct Primitive {
    PrimitiveKind kind;
    const char* name;
    double (*f)(double);
    double domain_lo;
    double domain_hi;
    bool positive_scale_only;  // search a > 0 only (oriented exponentials)
    int complexity;
};

const std::vector<Primitive>& primitive_library();
const Primitive& primitive(PrimitiveKind kind);

// x -> c * f(a*x + b) + d
struct AffineWrap {
    PrimitiveKind kind = PrimitiveKind::Identity;
    double a = 1.0, b = 0.0, c = 1.0, d = 0.0;

    double eval(double x) const;
};

struct AffineFit {
    AffineWrap wrap;
    double r2 = 0.0;
};

// Grid search over (a, b) with closed-form least squares for (c, d), then
// three rounds of coordinate-descent refinement. Zero-variance targets return
// the constant wrap with r2 = 1.
AffineFit fit_affine(const Primitive& prim, std::span<const double> xs,
                     std::span<const double> ys);

struct SnapResult {
    AffineWrap best;
    double best_r2 = 0.0;
    std::vector<std::pair<PrimitiveKind, double>> ranking;  // r2 descending
};

// Fits every library primitive to the edge response over the observed input
// range and ranks them.
SnapResult snap_edge(const KanEdge& edge, std::span<const double> x_column);

// Expression tree: nested sums of affine-wrapped primitives mirroring the
// network layers. Leaves are input variables x1..x5.
struct FormulaNode {
    enum class Op { Input, Sum, Wrap } op = Op::Sum;
    int input_index = -1;                             // Op::Input
    AffineWrap wrap;                                  // Op::Wrap
    std::vector<std::unique_ptr<FormulaNode>> children;
};

struct SymbolicFormula {
    std::unique_ptr<FormulaNode> root;

    double eval(std::span<const double> x) const;
    std::string to_infix() const;
    std::string to_json() const;  // {op, children, params} tree
};

struct EdgeFitInfo {
    int layer = 0, out_node = 0, in_node = 0;
    PrimitiveKind kind = PrimitiveKind::Identity;
    double r2 = 0.0;
};

struct ExtractionReport {
    std::vector<EdgeFitInfo> edges;
    double fidelity_mse = 0.0;  // formula vs network forward over X
    bool low_fidelity = false;  // some edge fit has r2 < 0.5
};

struct ExtractionResult {
    SymbolicFormula formula;
    ExtractionReport report;
};

// Replaces every edge with its best wrap; inputs to hidden edges are the
// captured node values over X.
ExtractionResult extract_formula(const KanModel& model, const Matrix& X,
                                 Exec exec = Exec::Parallel);

// Built-in closed-form targets on [0,1]-normalized features. Inputs outside
// the unit box are still evaluated (the forms are total) after a warning on
// stderr.
enum class PaperTarget { Y1, Y2 };
double eval_paper_formula(PaperTarget which, std::span<const double> x_unit);

const char* primitive_name(PrimitiveKind kind);

}  // namespace kf
