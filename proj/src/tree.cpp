#include "metamob/tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace metamob {

int Tree::n_terminals() const {
    int j = 0;
    for (const auto& nd : nodes) j += nd.is_terminal ? 1 : 0;
    return j;
}

int Tree::predict_node(const Eigen::Ref<const Eigen::RowVectorXd>& x_row) const {
    if (nodes.empty()) throw std::invalid_argument("predict_node: empty tree");
    int idx = 0;
    while (!nodes[static_cast<size_t>(idx)].is_terminal) {
        const Node& nd = nodes[static_cast<size_t>(idx)];
        if (nd.split_var < 0 || nd.split_var >= x_row.size())
            throw std::invalid_argument("predict_node: covariate index out of range");
        idx = (x_row[nd.split_var] <= nd.cutpoint) ? nd.left : nd.right;
    }
    return nodes[static_cast<size_t>(idx)].node_id;
}

VectorXi Tree::assign(const IpdDataset& data) const {
    VectorXi out(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i)
        out[i] = predict_node(data.X.row(i));
    return out;
}

int Tree::terminal_index(int node_id) const {
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].is_terminal && nodes[i].node_id == node_id)
            return static_cast<int>(i);
    throw std::invalid_argument("terminal_index: no such terminal");
}

bool Tree::same_structure(const Tree& other) const {
    if (nodes.size() != other.nodes.size()) return false;
    for (size_t i = 0; i < nodes.size(); ++i) {
        const Node& a = nodes[i];
        const Node& b = other.nodes[i];
        if (a.is_terminal != b.is_terminal) return false;
        if (!a.is_terminal) {
            if (a.split_var != b.split_var || a.cutpoint != b.cutpoint ||
                a.left != b.left || a.right != b.right)
                return false;
        }
    }
    return true;
}

Tree Tree::single_terminal(const NodeEffects& eff, int n_obs) {
    Tree t;
    Node nd;
    nd.is_terminal = true;
    nd.node_id = 1;
    nd.effects = eff;
    nd.n_obs = n_obs;
    t.nodes.push_back(nd);
    return t;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, int idx,
                            const std::vector<std::string>& names) {
    const Tree::Node& nd = tree.nodes[static_cast<size_t>(idx)];
    nlohmann::json j;
    if (nd.is_terminal) {
        j["node"] = nd.node_id;
        j["gamma"] = nd.effects.gamma;
        if (!nd.effects.gamma_by_trial.empty())
            j["gamma_by_trial"] = nd.effects.gamma_by_trial;
        j["theta"] = nd.effects.theta;
        j["n"] = nd.n_obs;
    } else {
        j["split_var"] = names.at(static_cast<size_t>(nd.split_var));
        j["cutpoint"] = nd.cutpoint;
        j["left"] = node_to_json(tree, nd.left, names);
        j["right"] = node_to_json(tree, nd.right, names);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree,
                   const std::vector<std::string>& names) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("split_var")) {
        const std::string var = j.at("split_var").get<std::string>();
        const auto it = std::find(names.begin(), names.end(), var);
        if (it == names.end())
            throw std::invalid_argument("tree_from_json: unknown covariate " + var);
        tree.nodes[static_cast<size_t>(idx)].is_terminal = false;
        tree.nodes[static_cast<size_t>(idx)].split_var =
            static_cast<int>(it - names.begin());
        tree.nodes[static_cast<size_t>(idx)].cutpoint = j.at("cutpoint").get<double>();
        const int l = node_from_json(j.at("left"), tree, names);
        tree.nodes[static_cast<size_t>(idx)].left = l;
        const int r = node_from_json(j.at("right"), tree, names);
        tree.nodes[static_cast<size_t>(idx)].right = r;
    } else {
        Tree::Node& nd = tree.nodes[static_cast<size_t>(idx)];
        nd.is_terminal = true;
        nd.node_id = j.at("node").get<int>();
        nd.effects.gamma = j.at("gamma").get<double>();
        if (j.contains("gamma_by_trial"))
            nd.effects.gamma_by_trial =
                j.at("gamma_by_trial").get<std::vector<double>>();
        nd.effects.theta = j.at("theta").get<double>();
        nd.n_obs = j.at("n").get<int>();
    }
    return idx;
}

} // namespace

nlohmann::json tree_to_json(const Tree& tree,
                            const std::vector<std::string>& covariate_names) {
    return node_to_json(tree, tree.root(), covariate_names);
}

Tree tree_from_json(const nlohmann::json& doc,
                    const std::vector<std::string>& covariate_names) {
    Tree t;
    node_from_json(doc, t, covariate_names);
    return t;
}

} // namespace metamob
