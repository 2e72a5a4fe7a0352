#include "metamob/linmod.hpp"

namespace metamob {

NodeFit fit_node(const Eigen::Ref<const VectorXd>& y_adj,
                 const Eigen::Ref<const VectorXi>& trt) {
    const Eigen::Index n = y_adj.size();
    if (n < 2 || trt.size() != n)
        throw std::invalid_argument("fit_node: need >= 2 observations");

    double sum0 = 0.0, sum1 = 0.0;
    Eigen::Index n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (trt[i] == 1) { sum1 += y_adj[i]; ++n1; }
        else { sum0 += y_adj[i]; ++n0; }
    }
    if (n0 == 0 || n1 == 0)
        throw DegenerateNodeError("fit_node: degenerate node (single treatment arm)");

    NodeFit fit;
    fit.n = n;
    fit.gamma_hat = sum0 / static_cast<double>(n0);
    fit.theta_hat = sum1 / static_cast<double>(n1) - fit.gamma_hat;
    fit.scores.resize(n, 2);
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = fit.gamma_hat + fit.theta_hat * trt[i];
        const double r = y_adj[i] - mu;
        rss += r * r;
        fit.scores(i, 0) = r;
        fit.scores(i, 1) = r * trt[i];
    }
    fit.rss = rss;
    fit.sigma_hat_sq = rss / static_cast<double>(n);
    return fit;
}

} // namespace metamob
