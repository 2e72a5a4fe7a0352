#pragma once

#include "metamob/types.hpp"

#include <optional>

namespace metamob {

struct SupLmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool uninformative = false; // singular empirical score covariance
};

/// Score-based parameter instability (supLM) test of the 2-dim score
/// process ordered by z. Observations with equal z are pooled; the
/// cumulative process is evaluated at distinct-z boundaries whose
/// fraction t lies in [trim, 1-trim]. A singular empirical score
/// covariance yields p_value = 1.
SupLmResult suplm_test(const Eigen::Ref<const MatrixXd>& scores,
                       const Eigen::Ref<const VectorXd>& z, double trim);

/// Null p-value of the supLM statistic for a 2-dim process computed from
/// n observations with the given trimming fraction, via the precomputed
/// Monte Carlo quantile tables (interpolated in trim and 1/n).
double suplm_pvalue(double statistic, double trim, Eigen::Index n);

struct InstabilityResult {
    std::vector<double> statistics;
    std::vector<double> p_values;
    std::optional<int> selected; // covariate index
    double adjusted_alpha = 0.0;
};

/// Bonferroni selection: the argmin p-value covariate if min p <= alpha/p,
/// ties broken by lowest index.
std::optional<int> select_split_variable(const std::vector<double>& p_values,
                                         double alpha);

/// Runs the supLM test for every covariate column and applies the
/// Bonferroni rule.
InstabilityResult test_instability(const Eigen::Ref<const MatrixXd>& scores,
                                   const Eigen::Ref<const MatrixXd>& covariates,
                                   double trim, double alpha);

} // namespace metamob
