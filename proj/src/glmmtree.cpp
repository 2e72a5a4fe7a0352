#include "metamob/glmmtree.hpp"

#include <cmath>

namespace metamob {

namespace {

// Writes the mixed-model fixed effects into the tree's terminals.
void decorate_tree(Tree& tree, const LmmFit& lmm) {
    for (auto& nd : tree.nodes) {
        if (!nd.is_terminal) continue;
        const auto j = static_cast<size_t>(nd.node_id - 1);
        if (j < lmm.fixed.size()) nd.effects = lmm.fixed[j];
    }
}

LmmFit ols_node_fit(const IpdDataset& data, const Tree& tree) {
    const VectorXi assignment = tree.assign(data);
    const ModelSpec spec{ModelVariant::M0};
    LmmProblem prob{data.y, design_vectors(data, assignment, spec), spec};
    return fit_lmm(prob);
}

// Tree-step offset: z_i' b-hat, plus (M3) the trial main effects of the
// stratified intercepts. Each trial's effect delta_k is the cell-weighted
// mean of gamma_jk - gamma_j across nodes: a pure trial-level baseline
// shift. Subtracting the raw per-cell deviations instead would encode the
// previous node structure into the adjusted response and let spurious
// splits reproduce themselves.
VectorXd tree_offset(const IpdDataset& data, const ModelSpec& spec,
                     const DesignMatrices& design, const LmmFit& lmm,
                     const Eigen::Ref<const VectorXi>& assignment) {
    VectorXd offset = random_offset(design, lmm.re);
    if (spec.has_stratified_intercepts()) {
        const int K = design.n_trials;
        VectorXd delta = VectorXd::Zero(K);
        VectorXd count = VectorXd::Zero(K);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const auto j = static_cast<size_t>(assignment[i] - 1);
            const auto k = static_cast<size_t>(data.trial[i] - 1);
            const NodeEffects& eff = lmm.fixed[j];
            delta[static_cast<Eigen::Index>(k)] +=
                eff.gamma_by_trial[k] - eff.gamma;
            count[static_cast<Eigen::Index>(k)] += 1.0;
        }
        for (int k = 0; k < K; ++k)
            if (count[k] > 0.0) delta[k] /= count[k];
        for (Eigen::Index i = 0; i < data.n(); ++i)
            offset[i] += delta[data.trial[i] - 1];
    }
    return offset;
}

} // namespace

GlmmTreeFit fit_glmm_tree(const IpdDataset& data, const ModelSpec& spec,
                          const GlmmTreeControls& controls) {
    data.validate();
    GlmmTreeFit out;
    out.spec = spec;

    if (spec.variant == ModelVariant::M0) {
        out.tree = grow_tree(data, VectorXd::Zero(data.n()), controls.tree);
        out.lmm = ols_node_fit(data, out.tree);
        decorate_tree(out.tree, out.lmm);
        out.n_iter = 0;
        out.converged = true;
        out.loglik_trace.push_back(out.lmm.loglik);
        return out;
    }

    VectorXd offset = VectorXd::Zero(data.n());
    Tree prev_tree;
    bool have_prev = false;
    double prev_ll = 0.0;

    for (int r = 1; r <= controls.max_iter; ++r) {
        Tree tree = grow_tree(data, offset, controls.tree);
        const VectorXi assignment = tree.assign(data);
        LmmProblem prob{data.y, design_vectors(data, assignment, spec), spec};
        LmmFit lmm;
        try {
            lmm = fit_lmm(prob);
        } catch (const UnidentifiableError& e) {
            out.warnings.emplace_back(e.what());
            out.converged = false;
            out.n_iter = r;
            if (!have_prev) { // no usable iterate; fall back to OLS terminals
                out.tree = std::move(tree);
                out.lmm = ols_node_fit(data, out.tree);
                decorate_tree(out.tree, out.lmm);
            }
            return out;
        }
        for (const auto& wmsg : lmm.warnings) out.warnings.push_back(wmsg);

        out.tree = tree;
        out.lmm = lmm;
        out.n_iter = r;
        out.loglik_trace.push_back(lmm.loglik);

        const bool ll_converged =
            r > 1 && std::abs(lmm.loglik - prev_ll) <= controls.abstol;
        const bool tree_converged = have_prev && tree.same_structure(prev_tree);
        if (ll_converged || tree_converged) {
            out.converged = true;
            decorate_tree(out.tree, out.lmm);
            return out;
        }
        prev_ll = lmm.loglik;
        prev_tree = std::move(tree);
        have_prev = true;
        offset = tree_offset(data, spec, prob.design, lmm, assignment);
    }

    out.converged = false;
    out.warnings.emplace_back("max_iter exceeded without convergence");
    decorate_tree(out.tree, out.lmm);
    return out;
}

SubjectEffects estimate_subject_effects(const GlmmTreeFit& fit,
                                        const IpdDataset& newdata) {
    SubjectEffects out;
    out.assignment = fit.tree.assign(newdata);
    const int J = fit.tree.n_terminals();

    std::vector<int> counts(static_cast<size_t>(J), 0);
    for (Eigen::Index i = 0; i < newdata.n(); ++i)
        ++counts[static_cast<size_t>(out.assignment[i] - 1)];
    for (int j = 0; j < J; ++j) {
        if (counts[static_cast<size_t>(j)] == 0) {
            out.ok = false;
            out.exclusion_reason = "subgroup absent in test data";
            return out;
        }
    }

    LmmProblem prob{newdata.y, design_vectors(newdata, out.assignment, fit.spec),
                    fit.spec};
    LmmFit refit;
    try {
        refit = fit_lmm(prob);
    } catch (const UnidentifiableError&) {
        out.ok = false;
        out.exclusion_reason = "test refit unidentifiable";
        return out;
    }
    out.refit_warned = !refit.warnings.empty() || !refit.converged;

    out.theta.resize(newdata.n());
    for (Eigen::Index i = 0; i < newdata.n(); ++i)
        out.theta[i] =
            refit.fixed[static_cast<size_t>(out.assignment[i] - 1)].theta;
    return out;
}

} // namespace metamob
