#pragma once

#include "metamob/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace metamob {

/// Binary partition. Internal nodes route by "x[split_var] <= cutpoint goes
/// left"; terminals carry the fitted subgroup effects. Terminal ids are
/// assigned 1..J in left-to-right depth-first order.
struct Tree {
    struct Node {
        bool is_terminal = true;
        // internal
        int split_var = -1;      // covariate column index
        double cutpoint = 0.0;
        int left = -1, right = -1; // arena indices
        // terminal
        int node_id = 0;         // 1..J
        NodeEffects effects;
        int n_obs = 0;
    };

    std::vector<Node> nodes;     // nodes[0] is the root

    int n_terminals() const;
    int root() const { return 0; }

    /// Terminal node id (1..J) reached by descending with the <= rule.
    int predict_node(const Eigen::Ref<const Eigen::RowVectorXd>& x_row) const;

    /// Terminal ids for every row of the dataset.
    VectorXi assign(const IpdDataset& data) const;

    /// Arena index of the terminal with the given node id.
    int terminal_index(int node_id) const;

    /// Structural equality: same topology, split variables and cutpoints.
    bool same_structure(const Tree& other) const;

    static Tree single_terminal(const NodeEffects& eff, int n_obs);
};

nlohmann::json tree_to_json(const Tree& tree,
                            const std::vector<std::string>& covariate_names);
Tree tree_from_json(const nlohmann::json& doc,
                    const std::vector<std::string>& covariate_names);

} // namespace metamob
