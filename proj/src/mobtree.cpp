#include "metamob/mobtree.hpp"

#include "metamob/fluctest.hpp"
#include "metamob/linmod.hpp"

#include <algorithm>
#include <numeric>

namespace metamob {

namespace {

// Per-arm running sums for O(1) RSS updates during the boundary scan.
struct ArmStats {
    double sum0 = 0.0, sumsq0 = 0.0;
    double sum1 = 0.0, sumsq1 = 0.0;
    long n0 = 0, n1 = 0;

    void add(double y, int t) {
        if (t == 1) { sum1 += y; sumsq1 += y * y; ++n1; }
        else { sum0 += y; sumsq0 += y * y; ++n0; }
    }
    void remove(double y, int t) {
        if (t == 1) { sum1 -= y; sumsq1 -= y * y; --n1; }
        else { sum0 -= y; sumsq0 -= y * y; --n0; }
    }
    long n() const { return n0 + n1; }
    bool both_arms() const { return n0 > 0 && n1 > 0; }
    double rss() const {
        double out = 0.0;
        if (n0 > 0) out += std::max(0.0, sumsq0 - sum0 * sum0 / static_cast<double>(n0));
        if (n1 > 0) out += std::max(0.0, sumsq1 - sum1 * sum1 / static_cast<double>(n1));
        return out;
    }
};

struct Grower {
    const IpdDataset& data;
    VectorXd y_adj;
    const TreeControls& controls;
    Tree tree;
    int next_terminal_id = 1;

    int grow(const std::vector<int>& idx, int depth) {
        const auto n = static_cast<Eigen::Index>(idx.size());
        VectorXd y_node(n);
        VectorXi trt_node(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y_node[i] = y_adj[idx[static_cast<size_t>(i)]];
            trt_node[i] = data.trt[idx[static_cast<size_t>(i)]];
        }
        const NodeFit fit = fit_node(y_node, trt_node);

        const bool can_split =
            n >= 2 * controls.minsize &&
            (!controls.max_depth || depth < *controls.max_depth);
        std::optional<int> selected;
        if (can_split) {
            const double trim = std::min(
                0.45, std::max(controls.trim, static_cast<double>(controls.minsize) /
                                                  static_cast<double>(n)));
            MatrixXd covs(n, data.p());
            for (Eigen::Index i = 0; i < n; ++i)
                covs.row(i) = data.X.row(idx[static_cast<size_t>(i)]);
            const InstabilityResult inst =
                test_instability(fit.scores, covs, trim, controls.alpha);
            selected = inst.selected;
        }

        std::optional<SplitPoint> split;
        VectorXd x_star;
        if (selected) {
            x_star.resize(n);
            for (Eigen::Index i = 0; i < n; ++i)
                x_star[i] = data.X(idx[static_cast<size_t>(i)], *selected);
            split = best_split_point(y_node, trt_node, x_star, controls.minsize);
        }

        const int me = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (!split) {
            Tree::Node& nd = tree.nodes[static_cast<size_t>(me)];
            nd.is_terminal = true;
            nd.node_id = next_terminal_id++;
            nd.effects.gamma = fit.gamma_hat;
            nd.effects.theta = fit.theta_hat;
            nd.n_obs = static_cast<int>(n);
            return me;
        }

        std::vector<int> left_idx, right_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (x_star[i] <= split->cutpoint)
                left_idx.push_back(idx[static_cast<size_t>(i)]);
            else
                right_idx.push_back(idx[static_cast<size_t>(i)]);
        }
        {
            Tree::Node& nd = tree.nodes[static_cast<size_t>(me)];
            nd.is_terminal = false;
            nd.split_var = *selected;
            nd.cutpoint = split->cutpoint;
        }
        const int l = grow(left_idx, depth + 1);
        tree.nodes[static_cast<size_t>(me)].left = l;
        const int r = grow(right_idx, depth + 1);
        tree.nodes[static_cast<size_t>(me)].right = r;
        return me;
    }
};

} // namespace

std::optional<SplitPoint> best_split_point(
    const Eigen::Ref<const VectorXd>& y_adj,
    const Eigen::Ref<const VectorXi>& trt,
    const Eigen::Ref<const VectorXd>& x_star, int minsize) {
    const Eigen::Index n = y_adj.size();
    if (trt.size() != n || x_star.size() != n)
        throw std::invalid_argument("best_split_point: dimension mismatch");

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return x_star[a] < x_star[b]; });

    ArmStats left, right;
    for (Eigen::Index i = 0; i < n; ++i) right.add(y_adj[i], trt[i]);

    std::optional<SplitPoint> best;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int idx = order[static_cast<size_t>(i)];
        left.add(y_adj[idx], trt[idx]);
        right.remove(y_adj[idx], trt[idx]);
        if (i + 1 < n && x_star[order[static_cast<size_t>(i + 1)]] == x_star[idx])
            continue; // not a distinct-value boundary
        if (i + 1 == n) break;
        if (left.n() < minsize || right.n() < minsize) continue;
        if (!left.both_arms() || !right.both_arms()) continue;
        const double obj = left.rss() + right.rss();
        if (!best || obj < best->total_objective)
            best = SplitPoint{x_star[idx], obj};
    }
    return best;
}

Tree grow_tree(const IpdDataset& data, const Eigen::Ref<const VectorXd>& offset,
               const TreeControls& controls) {
    if (offset.size() != data.n())
        throw std::invalid_argument("grow_tree: offset length mismatch");
    Grower g{data, data.y - offset, controls, {}, 1};
    std::vector<int> all(static_cast<size_t>(data.n()));
    std::iota(all.begin(), all.end(), 0);
    g.grow(all, 0);
    return std::move(g.tree);
}

} // namespace metamob
