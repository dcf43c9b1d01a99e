#pragma once

#include <string>
#include <vector>

#include "kanforge/common.hpp"
#include "kanforge/kan.hpp"

namespace kf {

struct PruneConfig {
    double theta = 0.01;  // node score threshold
};

struct NodeScore {
    double incoming = 0.0;  // max over incoming edges of mean |activation|
    double outgoing = 0.0;  // max over outgoing edges of mean |activation|
};

// Scores for every hidden node, indexed [hidden_layer][node] where
// hidden_layer 0 is the first layer after the input.
std::vector<std::vector<NodeScore>> node_scores(const KanModel& model, const Matrix& X,
                                                Exec exec = Exec::Parallel);

struct PruneReport {
    double theta = 0.0;
    std::vector<std::vector<NodeScore>> scores;
    std::vector<std::vector<bool>> kept;
    std::vector<int> widths_before;
    std::vector<int> widths_after;

    std::string to_json() const;
};

struct PruneResult {
    KanModel model;
    PruneReport report;
};

// Keeps a hidden node iff min(incoming, outgoing) >= theta; surviving edges
// are copied verbatim. Input and output nodes are never pruned. If a layer
// would lose every node, its single best-scoring node is kept.
PruneResult prune(const KanModel& model, const Matrix& X, const PruneConfig& cfg,
                  Exec exec = Exec::Parallel);

}  // namespace kf
