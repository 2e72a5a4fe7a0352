#pragma once

#include "metamob/lmm.hpp"
#include "metamob/mobtree.hpp"

namespace metamob {

struct GlmmTreeFit {
    Tree tree;
    LmmFit lmm;
    int n_iter = 0;
    bool converged = true;
    std::vector<double> loglik_trace;
    std::vector<std::string> warnings;
    ModelSpec spec;
};

struct GlmmTreeControls {
    TreeControls tree;
    double abstol = 0.001;
    int max_iter = 100;
};

/// Alternates tree growing (current random-effect part as offset) and
/// REML mixed-model fitting on the tree's node assignment until the ML
/// log-likelihood changes by <= abstol or consecutive trees are
/// identical. M0 degenerates to a single grow_tree with per-node OLS fits.
///
/// The offset passed to the tree step is z_i' b-hat; for M3 the per-trial
/// deviations of the stratified intercepts around their node mean are
/// subtracted as well, so the tree step never sees between-trial baseline
/// shifts already explained by the mixed model.
GlmmTreeFit fit_glmm_tree(const IpdDataset& data, const ModelSpec& spec,
                          const GlmmTreeControls& controls);

struct SubjectEffects {
    VectorXd theta;               // per-subject estimated treatment effect
    VectorXi assignment;          // terminal id per subject
    bool ok = true;
    std::string exclusion_reason; // set when !ok
    bool refit_warned = false;
};

/// Routes test subjects through the fitted tree, refits the spec's model
/// on the test data with that assignment, and returns theta-hat of each
/// subject's terminal (fixed-effect part only). Not-ok when a fitted
/// terminal receives no test subjects.
SubjectEffects estimate_subject_effects(const GlmmTreeFit& fit,
                                        const IpdDataset& newdata);

} // namespace metamob
