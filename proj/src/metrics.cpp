#include "metamob/metrics.hpp"

#include <chrono>
#include <cmath>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace metamob {

bool tree_accuracy(const Tree& fitted) {
    if (fitted.n_terminals() != 4) return false;
    const auto& nodes = fitted.nodes;
    const Tree::Node& root = nodes[0];
    if (root.is_terminal) return false;
    auto matches = [](const Tree::Node& nd, int var, double center) {
        return !nd.is_terminal && nd.split_var == var &&
               std::abs(nd.cutpoint - center) <= 5.0;
    };
    if (!matches(root, 1, 30.0)) return false;
    const Tree::Node& left = nodes[static_cast<size_t>(root.left)];
    const Tree::Node& right = nodes[static_cast<size_t>(root.right)];
    if (!matches(left, 0, 17.0) || !matches(right, 4, 63.0)) return false;
    return nodes[static_cast<size_t>(left.left)].is_terminal &&
           nodes[static_cast<size_t>(left.right)].is_terminal &&
           nodes[static_cast<size_t>(right.left)].is_terminal &&
           nodes[static_cast<size_t>(right.right)].is_terminal;
}

std::optional<double> effect_correlation(const GlmmTreeFit& fit,
                                         const IpdDataset& test,
                                         const TruthLabels& truth,
                                         std::string* reason) {
    auto fail = [&](const char* why) -> std::optional<double> {
        if (reason) *reason = why;
        return std::nullopt;
    };
    if (fit.tree.n_terminals() < 2)
        return fail("single terminal: correlation undefined");

    const SubjectEffects est = estimate_subject_effects(fit, test);
    if (!est.ok) return fail(est.exclusion_reason.c_str());
    if (est.refit_warned) return fail("test refit convergence warning");

    // reference effect per estimated subgroup: weighted mean of the true
    // subgroup effects, weights = true-membership counts in that subgroup
    const int J = fit.tree.n_terminals();
    std::vector<double> wsum(static_cast<size_t>(J), 0.0);
    std::vector<double> vsum(static_cast<size_t>(J), 0.0);
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const auto g = static_cast<size_t>(est.assignment[i] - 1);
        wsum[g] += 1.0;
        vsum[g] += truth.true_theta[i];
    }
    VectorXd ref(test.n());
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const auto g = static_cast<size_t>(est.assignment[i] - 1);
        ref[i] = vsum[g] / wsum[g];
    }

    const double mx = est.theta.mean();
    const double my = ref.mean();
    const VectorXd dx = est.theta.array() - mx;
    const VectorXd dy = ref.array() - my;
    const double sx = dx.squaredNorm();
    const double sy = dy.squaredNorm();
    if (sx <= 0.0 || sy <= 0.0) return fail("degenerate effect variance");
    return dx.dot(dy) / std::sqrt(sx * sy);
}

ScenarioAggregate run_scenario(const ScenarioConfig& config,
                               const ModelSpec& spec,
                               const GlmmTreeControls& controls, int reps,
                               const RunOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioAggregate agg;
    agg.config = config;
    agg.spec = spec;
    agg.reps = reps;
    agg.per_rep.resize(static_cast<size_t>(reps));

    const std::uint64_t cell = config.seed;
#ifdef _OPENMP
    const int nthreads = opts.workers > 0 ? opts.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
    for (int rep = 0; rep < reps; ++rep) {
        ScenarioConfig train_cfg = config;
        train_cfg.seed = derive_seed(config.seed, cell, 2 * static_cast<std::uint64_t>(rep));
        const GeneratedData train = gen_dataset(train_cfg);

        ReplicationScore score;
        const GlmmTreeFit fit = fit_glmm_tree(train.data, spec, controls);
        score.n_iter = fit.n_iter;
        score.converged = fit.converged;
        score.warned = !fit.warnings.empty() || !fit.converged;
        score.n_subgroups = fit.tree.n_terminals();
        score.discovered = score.n_subgroups > 1;
        score.accurate = tree_accuracy(fit.tree);
        if (score.warned) {
            score.excluded = true;
            score.exclusion_reason = fit.warnings.empty()
                                         ? "convergence failure"
                                         : fit.warnings.front();
        }

        if (opts.with_test_data && !score.excluded) {
            ScenarioConfig test_cfg = config;
            test_cfg.seed =
                derive_seed(config.seed, cell, 2 * static_cast<std::uint64_t>(rep) + 1);
            if (opts.test_n > 0) test_cfg.N_total = opts.test_n;
            const GeneratedData test = gen_dataset(test_cfg);
            std::string why;
            score.effect_corr =
                effect_correlation(fit, test.data, test.truth, &why);
            if (!score.effect_corr) {
                score.corr_excluded = true;
                score.corr_exclusion_reason = why;
            }
        } else if (score.excluded) {
            score.corr_excluded = true;
            score.corr_exclusion_reason = score.exclusion_reason;
        }
        agg.per_rep[static_cast<size_t>(rep)] = std::move(score);
    }

    // deterministic reduction, independent of completion order
    int n_disc = 0, n_acc = 0, n_warn = 0, n_conv = 0, n_fast = 0;
    double sub_sum = 0.0, corr_sum = 0.0;
    std::set<std::string> kinds;
    for (const auto& s : agg.per_rep) {
        if (s.excluded) {
            ++agg.excluded;
            kinds.insert(s.exclusion_reason.substr(0, s.exclusion_reason.find(':')));
        } else {
            ++agg.included;
            n_disc += s.discovered ? 1 : 0;
            n_acc += s.accurate ? 1 : 0;
            sub_sum += s.n_subgroups;
        }
        n_warn += s.warned ? 1 : 0;
        n_conv += s.converged ? 1 : 0;
        n_fast += (s.converged && s.n_iter <= 3) ? 1 : 0;
        if (s.effect_corr) {
            corr_sum += *s.effect_corr;
            ++agg.corr_n;
        } else if (s.corr_excluded) {
            ++agg.corr_excluded;
        }
    }
    const double inc = std::max(1, agg.included);
    agg.discovery_rate = n_disc / inc;
    agg.discovery_se = std::sqrt(agg.discovery_rate * (1.0 - agg.discovery_rate) / inc);
    agg.accuracy_rate = n_acc / inc;
    agg.mean_subgroups = sub_sum / inc;
    agg.mean_effect_corr = agg.corr_n > 0 ? corr_sum / agg.corr_n : 0.0;
    agg.warning_rate = static_cast<double>(n_warn) / reps;
    agg.convergence_rate = static_cast<double>(n_conv) / reps;
    agg.frac_within_3_iters = static_cast<double>(n_fast) / reps;
    agg.warning_kinds.assign(kinds.begin(), kinds.end());
    agg.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return agg;
}

} // namespace metamob
