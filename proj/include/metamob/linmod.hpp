#pragma once

#include "metamob/types.hpp"

namespace metamob {

/// OLS fit of the two-parameter node model y = gamma + theta*trt + eps.
/// scores holds per-observation score contributions (residual,
/// residual*trt); the common 1/sigma^2 factor is dropped because the
/// fluctuation statistic normalizes by the empirical score covariance.
struct NodeFit {
    double gamma_hat = 0.0;
    double theta_hat = 0.0;
    double sigma_hat_sq = 0.0; // ML variant, rss/n
    double rss = 0.0;
    Eigen::Index n = 0;
    MatrixXd scores; // n x 2
};

struct DegenerateNodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Throws DegenerateNodeError when one treatment arm is absent (theta is
/// not estimable; the tree layer must forbid such splits).
NodeFit fit_node(const Eigen::Ref<const VectorXd>& y_adj,
                 const Eigen::Ref<const VectorXi>& trt);

/// Split-comparison objective: the residual sum of squares (monotone in
/// the Gaussian negative log-likelihood).
inline double objective(const NodeFit& fit) { return fit.rss; }

} // namespace metamob
