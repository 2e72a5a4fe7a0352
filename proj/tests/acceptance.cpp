// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Statistical criteria run 500 replications per cell.
#include "metamob/cli_config.hpp"
#include "metamob/fluctest.hpp"
#include "metamob/linmod.hpp"
#include "metamob/lmm.hpp"
#include "metamob/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <random>
#include <set>
#include <vector>

using namespace metamob;

namespace {

constexpr int kReps = 500;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct IterStats {
    int fits = 0;
    int converged = 0;
    int fast = 0; // converged within <= 3 iterations

    void absorb(const ScenarioAggregate& agg, const ModelSpec& spec) {
        if (spec.variant == ModelVariant::M0) return;
        for (const auto& s : agg.per_rep) {
            ++fits;
            converged += s.converged ? 1 : 0;
            fast += (s.converged && s.n_iter <= 3) ? 1 : 0;
        }
    }
};

IterStats g_iter;
std::vector<ScenarioAggregate> g_cells; // criterion 9 re-examines these

ScenarioAggregate run_cell(const ScenarioConfig& cfg, ModelVariant v,
                           bool with_test = false) {
    RunOptions opts;
    opts.with_test_data = with_test;
    const ModelSpec spec{v};
    ScenarioAggregate agg =
        run_scenario(cfg, spec, GlmmTreeControls{}, kReps, opts);
    g_iter.absorb(agg, spec);
    g_cells.push_back(agg);
    return agg;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// ---- criterion 8 oracles -------------------------------------------------

std::optional<SplitPoint> brute_force_split(const VectorXd& y,
                                            const VectorXi& trt,
                                            const VectorXd& x, int minsize) {
    std::set<double> values(x.data(), x.data() + x.size());
    std::optional<SplitPoint> best;
    for (double cut : values) {
        std::vector<int> l, r;
        for (int i = 0; i < x.size(); ++i) (x[i] <= cut ? l : r).push_back(i);
        if (static_cast<int>(l.size()) < minsize ||
            static_cast<int>(r.size()) < minsize)
            continue;
        auto rss_of = [&](const std::vector<int>& idx) -> std::optional<double> {
            VectorXd ys(static_cast<Eigen::Index>(idx.size()));
            VectorXi ts(static_cast<Eigen::Index>(idx.size()));
            for (size_t i = 0; i < idx.size(); ++i) {
                ys[static_cast<Eigen::Index>(i)] = y[idx[i]];
                ts[static_cast<Eigen::Index>(i)] = trt[idx[i]];
            }
            try {
                return fit_node(ys, ts).rss;
            } catch (const DegenerateNodeError&) {
                return std::nullopt;
            }
        };
        const auto lrss = rss_of(l);
        const auto rrss = rss_of(r);
        if (!lrss || !rrss) continue;
        const double obj = *lrss + *rrss;
        if (!best || obj < best->total_objective - 1e-12)
            best = SplitPoint{cut, obj};
    }
    return best;
}

bool oracle_split_scan() {
    std::mt19937_64 rng(801);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> size_dist(20, 40);
    for (int t = 0; t < 200; ++t) {
        const int n = size_dist(rng);
        VectorXd y(n), x(n);
        VectorXi trt(n);
        for (int i = 0; i < n; ++i) {
            y[i] = gauss(rng);
            x[i] = std::round(gauss(rng) * 3.0);
            trt[i] = rng() % 2;
        }
        const auto fast = best_split_point(y, trt, x, 5);
        const auto slow = brute_force_split(y, trt, x, 5);
        if (fast.has_value() != slow.has_value()) return false;
        if (fast &&
            std::abs(fast->total_objective - slow->total_objective) >
                1e-9 * std::max(1.0, slow->total_objective))
            return false;
    }
    return true;
}

bool oracle_anova_reml() {
    std::mt19937_64 rng(802);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 50; ++t) {
        const int K = 4 + static_cast<int>(rng() % 8);
        const int m = 10 + static_cast<int>(rng() % 30);
        IpdDataset d;
        const int n = K * m;
        d.y.resize(n);
        d.trt = VectorXi::Zero(n);
        d.trial.resize(n);
        d.X = MatrixXd::Zero(n, 1);
        d.covariate_names = {"X1"};
        int i = 0;
        for (int k = 0; k < K; ++k) {
            const double b0 = 2.0 * gauss(rng);
            for (int j = 0; j < m; ++j, ++i) {
                d.trial[i] = k + 1;
                d.y[i] = 5.0 + b0 + gauss(rng);
            }
        }
        const ModelSpec spec{ModelVariant::M1};
        const VectorXi assign = VectorXi::Ones(n);
        const LmmFit fit =
            fit_lmm(LmmProblem{d.y, design_vectors(d, assign, spec), spec});

        const double grand = d.y.mean();
        double ssb = 0.0, ssw = 0.0;
        for (int k = 0; k < K; ++k) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                if (d.trial[j] == k + 1) s += d.y[j];
            const double mk = s / m;
            ssb += m * (mk - grand) * (mk - grand);
            for (int j = 0; j < n; ++j)
                if (d.trial[j] == k + 1) ssw += (d.y[j] - mk) * (d.y[j] - mk);
        }
        const double msw = ssw / (n - K);
        const double msb = ssb / (K - 1);
        const double tau_oracle = std::max(0.0, (msb - msw) / m);
        const double scale = std::max(1.0, tau_oracle);
        if (std::abs(fit.vc.tau0_sq - tau_oracle) > 1e-6 * scale) return false;
        if (std::abs(fit.vc.sigma_sq - msw) > 1e-6 * std::max(1.0, msw))
            return false;
    }
    return true;
}

bool oracle_suplm_uniform(double* ks_out) {
    std::mt19937_64 rng(803);
    std::normal_distribution<double> gauss;
    const int draws = 10000, n = 200;
    std::vector<double> pvals;
    pvals.reserve(draws);
    for (int t = 0; t < draws; ++t) {
        VectorXd y(n), z(n);
        VectorXi trt(n);
        for (int i = 0; i < n; ++i) {
            y[i] = gauss(rng);
            z[i] = gauss(rng);
            trt[i] = rng() % 2;
        }
        const NodeFit fit = fit_node(y, trt);
        pvals.push_back(suplm_test(fit.scores, z, 0.1).p_value);
    }
    std::sort(pvals.begin(), pvals.end());
    double ks = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double u = pvals[static_cast<size_t>(i)];
        ks = std::max(ks, std::abs(u - (i + 1.0) / draws));
        ks = std::max(ks, std::abs(u - static_cast<double>(i) / draws));
    }
    *ks_out = ks;
    return ks < 0.02;
}

bool trees_bitwise_equal(const Tree& a, const Tree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& na = a.nodes[i];
        const auto& nb = b.nodes[i];
        if (na.is_terminal != nb.is_terminal) return false;
        if (na.is_terminal) {
            if (na.node_id != nb.node_id || na.n_obs != nb.n_obs) return false;
            if (na.effects.gamma != nb.effects.gamma) return false;
            if (na.effects.theta != nb.effects.theta) return false;
        } else {
            if (na.split_var != nb.split_var) return false;
            if (na.cutpoint != nb.cutpoint) return false;
            if (na.left != nb.left || na.right != nb.right) return false;
        }
    }
    return true;
}

bool oracle_offset_equivalence() {
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 100; ++t) {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::SimA;
        cfg.K = 5;
        cfg.N_total = 400;
        cfg.seed = 900 + static_cast<std::uint64_t>(t);
        IpdDataset d = gen_dataset(cfg).data;
        std::mt19937_64 rng(cfg.seed);
        VectorXd offset(d.n());
        for (Eigen::Index i = 0; i < d.n(); ++i) offset[i] = 3.0 * gauss(rng);
        const Tree with = grow_tree(d, offset, TreeControls{});
        IpdDataset shifted = d;
        shifted.y -= offset;
        const Tree plain =
            grow_tree(shifted, VectorXd::Zero(d.n()), TreeControls{});
        if (!trees_bitwise_equal(with, plain)) return false;
    }
    return true;
}

bool oracle_m0_identity() {
    for (std::uint64_t seed = 950; seed < 960; ++seed) {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::SimA;
        cfg.K = 5;
        cfg.N_total = 600;
        cfg.seed = seed;
        const IpdDataset d = gen_dataset(cfg).data;
        const GlmmTreeFit fit =
            fit_glmm_tree(d, ModelSpec{ModelVariant::M0}, GlmmTreeControls{});
        const Tree plain = grow_tree(d, VectorXd::Zero(d.n()), TreeControls{});
        if (!fit.tree.same_structure(plain)) return false;
        if (fit.n_iter != 0 || !fit.converged) return false;
        for (size_t i = 0; i < plain.nodes.size(); ++i) {
            const auto& np = plain.nodes[i];
            const auto& nf = fit.tree.nodes[i];
            if (np.is_terminal != nf.is_terminal) return false;
            if (!np.is_terminal) {
                if (np.cutpoint != nf.cutpoint || np.split_var != nf.split_var)
                    return false;
            } else if (np.n_obs != nf.n_obs) {
                return false;
            }
        }
    }
    return true;
}

ScenarioConfig cell(Scenario s, int K, int N, double tau0, double tau1,
                    CorrTarget corr, std::uint64_t seed,
                    double tau_gamma = 5.0) {
    ScenarioConfig cfg;
    cfg.scenario = s;
    cfg.K = K;
    cfg.N_total = N;
    cfg.tau0 = tau0;
    cfg.tau1 = tau1;
    cfg.corr_target = corr;
    cfg.tau_gamma = tau_gamma;
    cfg.seed = seed;
    return cfg;
}

} // namespace

int main() {
    // 1. Null-model FDR control for all four methods
    {
        const ScenarioConfig cfg =
            cell(Scenario::Null, 5, 500, 0.0, 0.0, CorrTarget::None, 101);
        std::string detail = "null FDR (limit 0.075):";
        bool pass = true;
        for (ModelVariant v : {ModelVariant::M0, ModelVariant::M1,
                               ModelVariant::M2, ModelVariant::M3}) {
            const ScenarioAggregate agg = run_cell(cfg, v);
            pass = pass && agg.discovery_rate <= 0.075;
            detail += std::string(" ") + ModelSpec{v}.name() + "=" +
                      fmt(agg.discovery_rate);
        }
        report(1, pass, detail);
    }

    // 2. Naive MOB inflates FDR under correlated baseline heterogeneity
    {
        const ScenarioConfig cfg = cell(Scenario::Null, 10, 1000, 10.0, 0.0,
                                        CorrTarget::B0WithNonsplitter, 102);
        const ScenarioAggregate mob = run_cell(cfg, ModelVariant::M0);
        const ScenarioAggregate si = run_cell(cfg, ModelVariant::M3);
        const bool pass = mob.discovery_rate >= si.discovery_rate + 0.05 &&
                          si.discovery_rate <= 0.08;
        report(2, pass,
               "tau0=10 corr FDR: mob=" + fmt(mob.discovery_rate) +
                   " metamob-si=" + fmt(si.discovery_rate) +
                   " (need gap >= 0.05, si <= 0.08)");
    }

    // 3. MOB-RI inflates FDR under correlated treatment heterogeneity
    {
        const ScenarioConfig cfg = cell(Scenario::Null, 10, 1000, 0.0, 10.0,
                                        CorrTarget::B1WithNonsplitter, 103);
        const ScenarioAggregate ri = run_cell(cfg, ModelVariant::M1);
        const ScenarioAggregate si = run_cell(cfg, ModelVariant::M3);
        const bool pass = ri.discovery_rate >= si.discovery_rate + 0.05;
        report(3, pass,
               "tau1=10 corr FDR: mob-ri=" + fmt(ri.discovery_rate) +
                   " metamob-si=" + fmt(si.discovery_rate) +
                   " (need gap >= 0.05)");
    }

    // 4. Homogeneous Sim A: all methods accurate, rates close, monotone in N
    {
        std::string detail = "sim A accuracy:";
        bool pass = true;
        std::vector<double> acc1000;
        for (ModelVariant v : {ModelVariant::M0, ModelVariant::M1,
                               ModelVariant::M2, ModelVariant::M3}) {
            const ScenarioAggregate big = run_cell(
                cell(Scenario::SimA, 5, 1000, 0.0, 0.0, CorrTarget::None, 104),
                v);
            const ScenarioAggregate small = run_cell(
                cell(Scenario::SimA, 5, 200, 0.0, 0.0, CorrTarget::None, 104),
                v);
            acc1000.push_back(big.accuracy_rate);
            pass = pass && big.accuracy_rate >= 0.6 &&
                   big.accuracy_rate > small.accuracy_rate;
            detail += std::string(" ") + ModelSpec{v}.name() + "=" +
                      fmt(big.accuracy_rate) + "/" + fmt(small.accuracy_rate);
        }
        const auto [lo, hi] = std::minmax_element(acc1000.begin(), acc1000.end());
        pass = pass && (*hi - *lo) <= 0.1;
        detail += " spread=" + fmt(*hi - *lo);
        report(4, pass, detail + " (need >= 0.6, spread <= 0.1, N1000 > N200)");
    }

    // 5. Sim B with correlated slope heterogeneity: metamob-si on top
    {
        const ScenarioConfig cfg = cell(Scenario::SimB, 10, 1000, 0.0, 5.0,
                                        CorrTarget::B1WithSplitter, 105, 5.0);
        std::string detail = "sim B accuracy:";
        double best_other = -1.0, si_acc = -1.0;
        for (ModelVariant v : {ModelVariant::M0, ModelVariant::M1,
                               ModelVariant::M2, ModelVariant::M3}) {
            const ScenarioAggregate agg = run_cell(cfg, v);
            if (v == ModelVariant::M3) si_acc = agg.accuracy_rate;
            else best_other = std::max(best_other, agg.accuracy_rate);
            detail += std::string(" ") + ModelSpec{v}.name() + "=" +
                      fmt(agg.accuracy_rate);
        }
        report(5, si_acc > best_other,
               detail + " (need metamob-si strictly greatest)");
    }

    // 6. Effect correlation on held-out data
    {
        const ScenarioConfig flat =
            cell(Scenario::SimA, 10, 1000, 5.0, 0.0, CorrTarget::None, 106);
        const ScenarioConfig het =
            cell(Scenario::SimA, 10, 1000, 5.0, 10.0, CorrTarget::None, 107);
        const ScenarioAggregate ri0 = run_cell(flat, ModelVariant::M2, true);
        const ScenarioAggregate si0 = run_cell(flat, ModelVariant::M3, true);
        const ScenarioAggregate mob1 = run_cell(het, ModelVariant::M0, true);
        const ScenarioAggregate ri1 = run_cell(het, ModelVariant::M2, true);
        const ScenarioAggregate si1 = run_cell(het, ModelVariant::M3, true);
        const bool pass = ri0.mean_effect_corr >= 0.9 &&
                          si0.mean_effect_corr >= 0.9 &&
                          ri1.mean_effect_corr >= 0.9 &&
                          si1.mean_effect_corr >= 0.9 &&
                          mob1.mean_effect_corr <= si1.mean_effect_corr - 0.05;
        report(6, pass,
               "effect corr tau1=0: ri=" + fmt(ri0.mean_effect_corr) + " si=" +
                   fmt(si0.mean_effect_corr) + "; tau1=10: mob=" +
                   fmt(mob1.mean_effect_corr) + " ri=" +
                   fmt(ri1.mean_effect_corr) + " si=" +
                   fmt(si1.mean_effect_corr) +
                   " (need metamob >= 0.9, mob <= si - 0.05)");
    }

    // 7. Iteration behavior across all mixed-model fits above
    {
        const double conv = static_cast<double>(g_iter.converged) / g_iter.fits;
        const double fast = static_cast<double>(g_iter.fast) / g_iter.fits;
        report(7, conv >= 0.99 && fast >= 0.90,
               "mixed-model fits=" + std::to_string(g_iter.fits) +
                   " converged=" + fmt(conv) + " within-3-iters=" + fmt(fast) +
                   " (need >= 0.99 and >= 0.90)");
    }

    // 8. Deterministic oracle equivalences
    {
        double ks = 1.0;
        const bool a = oracle_split_scan();
        const bool b = oracle_anova_reml();
        const bool c = oracle_suplm_uniform(&ks);
        const bool d = oracle_offset_equivalence();
        const bool e = oracle_m0_identity();
        report(8, a && b && c && d && e,
               std::string("oracles: split-scan=") + (a ? "ok" : "FAIL") +
                   " anova-reml=" + (b ? "ok" : "FAIL") + " suplm-KS=" +
                   fmt(ks) + (c ? "" : " FAIL") + " offset-bitwise=" +
                   (d ? "ok" : "FAIL") + " m0-identity=" + (e ? "ok" : "FAIL"));
    }

    // 9. Warning bookkeeping: typed, excluded from metrics, rare
    {
        bool pass = true;
        double worst = 0.0;
        for (const auto& agg : g_cells) {
            worst = std::max(worst, agg.warning_rate);
            pass = pass && agg.warning_rate < 0.05;
            pass = pass && agg.included + agg.excluded == agg.reps;
            int excluded_warned = 0;
            for (const auto& s : agg.per_rep) {
                if (s.warned && !s.excluded) pass = false; // must be excluded
                excluded_warned += (s.warned && s.excluded) ? 1 : 0;
                if (s.excluded && s.exclusion_reason.empty()) pass = false;
            }
            if (excluded_warned > 0 && agg.warning_kinds.empty()) pass = false;
        }
        report(9, pass,
               "warning bookkeeping over " + std::to_string(g_cells.size()) +
                   " cells, worst rate=" + fmt(worst) +
                   " (need < 0.05, typed, excluded)");
    }

    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
