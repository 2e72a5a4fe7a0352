#pragma once

#include "metamob/glmmtree.hpp"
#include "metamob/simgen.hpp"

#include <string>

namespace metamob {

struct ReplicationScore {
    bool discovered = false; // tree has > 1 terminal
    int n_subgroups = 1;
    bool accurate = false;
    std::optional<double> effect_corr;
    bool excluded = false;      // excluded from accuracy/correlation summaries
    std::string exclusion_reason;
    bool corr_excluded = false; // correlation-specific exclusion
    std::string corr_exclusion_reason;
    int n_iter = 0;
    bool converged = true;
    bool warned = false;
};

/// True iff the fitted tree positionally matches the generating tree:
/// 4 terminals, root split on X2, left child on X1, right child on X5,
/// cutpoints within 30+-5, 17+-5, 63+-5.
bool tree_accuracy(const Tree& fitted);

/// Per-subject reference effect: the weighted mean of the true effects
/// within the subject's estimated subgroup, weights = true-subgroup
/// membership counts. Returns the Pearson correlation of estimated and
/// reference effects across test subjects, or nullopt with a reason.
std::optional<double> effect_correlation(const GlmmTreeFit& fit,
                                         const IpdDataset& test,
                                         const TruthLabels& truth,
                                         std::string* reason = nullptr);

struct ScenarioAggregate {
    ScenarioConfig config;
    ModelSpec spec;
    int reps = 0;
    int included = 0; // reps - excluded
    int excluded = 0;
    double discovery_rate = 0.0; // FDR under the Null scenario
    double discovery_se = 0.0;   // binomial Monte Carlo SE
    double mean_subgroups = 0.0;
    double accuracy_rate = 0.0;
    double mean_effect_corr = 0.0;
    int corr_n = 0;
    int corr_excluded = 0;
    double warning_rate = 0.0;
    double convergence_rate = 0.0;
    double frac_within_3_iters = 0.0;
    std::vector<std::string> warning_kinds;
    double wall_seconds = 0.0;
    std::vector<ReplicationScore> per_rep;
};

struct RunOptions {
    int workers = 0; // 0 = all hardware threads, 1 = serial reference path
    bool with_test_data = true;
    int test_n = 0;  // 0 = same as training N
};

/// Fits `spec` on `reps` generated train/test pairs of the cell and
/// aggregates the scores. Deterministic given (config.seed, cell), whatever
/// the worker count.
ScenarioAggregate run_scenario(const ScenarioConfig& config,
                               const ModelSpec& spec,
                               const GlmmTreeControls& controls, int reps,
                               const RunOptions& opts = {});

} // namespace metamob
