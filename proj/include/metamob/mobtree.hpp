#pragma once

#include "metamob/tree.hpp"

#include <optional>

namespace metamob {

struct SplitPoint {
    double cutpoint = 0.0;       // left boundary value, rule x <= cutpoint
    double total_objective = 0.0; // RSS(left) + RSS(right)
};

/// Exhaustive scan over distinct-value boundaries of x_star. A split is
/// admissible when both children have >= minsize observations and both
/// treatment arms. Ties broken by smaller cutpoint. nullopt when no
/// admissible split exists.
std::optional<SplitPoint> best_split_point(
    const Eigen::Ref<const VectorXd>& y_adj,
    const Eigen::Ref<const VectorXi>& trt,
    const Eigen::Ref<const VectorXd>& x_star, int minsize);

/// MOB recursion: fit the node model on y - offset, test instability per
/// covariate, Bonferroni-select the splitting variable, split at the
/// objective-minimizing cutpoint, recurse. An all-zero offset gives plain
/// MOB; the iterated mixed-effects variants pass the current random-effect
/// offset.
Tree grow_tree(const IpdDataset& data, const Eigen::Ref<const VectorXd>& offset,
               const TreeControls& controls);

} // namespace metamob
