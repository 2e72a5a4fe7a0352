#include "metamob/fluctest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metamob {

#include "suplm_table.inc"

namespace {

// 1 - F(stat) from one (grid, trim) quantile row, with log-linear tail
// extrapolation beyond the last tabulated quantile.
double pvalue_from_row(const float* q, double stat) {
    const int np = kSuplmNumProbs;
    if (stat <= q[0]) {
        const double f = q[0] > 0.0 ? stat / q[0] / (np + 1) : 0.0;
        return 1.0 - f;
    }
    if (stat >= q[np - 1]) {
        // anchor the tail on the p = 0.01 and p = 0.0005 quantiles
        const double p_hi = 1.0 / (np + 1);                 // at q[np-1]
        const int i_lo = np - 20;                            // p = 0.01
        const double p_lo = static_cast<double>(np - i_lo) / (np + 1);
        const double slope =
            (std::log(p_hi) - std::log(p_lo)) / (q[np - 1] - q[i_lo]);
        return std::min(p_hi, std::exp(std::log(p_hi) + slope * (stat - q[np - 1])));
    }
    const float* it = std::upper_bound(q, q + np, static_cast<float>(stat));
    int i = static_cast<int>(it - q); // q[i-1] <= stat < q[i]
    const double lo = q[i - 1], hi = q[i];
    const double frac = hi > lo ? (stat - lo) / (hi - lo) : 0.0;
    const double f = (i + frac) / (np + 1);
    return 1.0 - f;
}

double pvalue_at_grid(int gi, double trim, double stat) {
    trim = std::clamp(trim, kSuplmTrims[0], kSuplmTrims[kSuplmNumTrims - 1]);
    int ti = 0;
    while (ti + 1 < kSuplmNumTrims - 1 && kSuplmTrims[ti + 1] <= trim) ++ti;
    const double t0 = kSuplmTrims[ti], t1 = kSuplmTrims[ti + 1];
    const double w = (trim - t0) / (t1 - t0);
    const double p0 = pvalue_from_row(kSuplmQuantiles[gi][ti], stat);
    const double p1 = pvalue_from_row(kSuplmQuantiles[gi][ti + 1], stat);
    return (1.0 - w) * p0 + w * p1;
}

} // namespace

double suplm_pvalue(double statistic, double trim, Eigen::Index n) {
    if (!(statistic > 0.0)) return 1.0;
    const double m = std::clamp(static_cast<double>(n), kSuplmGrids[0],
                                kSuplmGrids[kSuplmNumGrids - 1]);
    int gi = 0;
    while (gi + 1 < kSuplmNumGrids - 1 && kSuplmGrids[gi + 1] <= m) ++gi;
    const double inv0 = 1.0 / kSuplmGrids[gi], inv1 = 1.0 / kSuplmGrids[gi + 1];
    const double w = (1.0 / m - inv0) / (inv1 - inv0);
    const double p0 = pvalue_at_grid(gi, trim, statistic);
    const double p1 = pvalue_at_grid(gi + 1, trim, statistic);
    return std::clamp((1.0 - w) * p0 + w * p1, 0.0, 1.0);
}

SupLmResult suplm_test(const Eigen::Ref<const MatrixXd>& scores,
                       const Eigen::Ref<const VectorXd>& z, double trim) {
    const Eigen::Index n = scores.rows();
    if (scores.cols() != 2 || z.size() != n)
        throw std::invalid_argument("suplm_test: dimension mismatch");
    if (!(trim > 0.0 && trim < 0.5))
        throw std::invalid_argument("suplm_test: trim must be in (0, 0.5)");

    SupLmResult res;

    // Empirical outer-product score covariance and its inverse square root.
    Eigen::Matrix2d J = scores.transpose() * scores / static_cast<double>(n);
    const double det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    const double scale = std::max(J(0, 0), J(1, 1));
    if (!(det > 1e-12 * scale * scale) || !(scale > 0.0)) {
        res.uninformative = true;
        return res;
    }
    // Cholesky of J^{-1}: whiten via L with L L' = J^{-1}.
    Eigen::Matrix2d Jinv;
    Jinv << J(1, 1) / det, -J(0, 1) / det, -J(1, 0) / det, J(0, 0) / det;
    Eigen::LLT<Eigen::Matrix2d> llt(Jinv);
    if (llt.info() != Eigen::Success) {
        res.uninformative = true;
        return res;
    }
    const Eigen::Matrix2d L = llt.matrixL();

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return z[a] < z[b]; });

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    double s0 = 0.0, s1 = 0.0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int idx = order[static_cast<size_t>(i)];
        // w = L' * psi so that ||cumsum(w)||^2 = S' J^{-1} S
        const double w0 = scores(idx, 0) * L(0, 0) + scores(idx, 1) * L(1, 0);
        const double w1 = scores(idx, 1) * L(1, 1);
        s0 += w0 * inv_sqrt_n;
        s1 += w1 * inv_sqrt_n;
        // pooled ties: only evaluate at boundaries between distinct z values
        if (i + 1 < n && z[order[static_cast<size_t>(i + 1)]] == z[idx]) continue;
        const double t = static_cast<double>(i + 1) / static_cast<double>(n);
        if (t < trim || t > 1.0 - trim) continue;
        const double val = (s0 * s0 + s1 * s1) / (t * (1.0 - t));
        best = std::max(best, val);
    }
    res.statistic = best;
    res.p_value = suplm_pvalue(best, trim, n);
    return res;
}

std::optional<int> select_split_variable(const std::vector<double>& p_values,
                                         double alpha) {
    if (p_values.empty()) return std::nullopt;
    int best = 0;
    for (int j = 1; j < static_cast<int>(p_values.size()); ++j)
        if (p_values[static_cast<size_t>(j)] < p_values[static_cast<size_t>(best)])
            best = j;
    const double adjusted = alpha / static_cast<double>(p_values.size());
    if (p_values[static_cast<size_t>(best)] <= adjusted) return best;
    return std::nullopt;
}

InstabilityResult test_instability(const Eigen::Ref<const MatrixXd>& scores,
                                   const Eigen::Ref<const MatrixXd>& covariates,
                                   double trim, double alpha) {
    const int p = static_cast<int>(covariates.cols());
    InstabilityResult out;
    out.statistics.resize(static_cast<size_t>(p));
    out.p_values.resize(static_cast<size_t>(p));
    out.adjusted_alpha = alpha / static_cast<double>(p);
    for (int j = 0; j < p; ++j) {
        const SupLmResult r = suplm_test(scores, covariates.col(j), trim);
        out.statistics[static_cast<size_t>(j)] = r.statistic;
        out.p_values[static_cast<size_t>(j)] = r.p_value;
    }
    out.selected = select_split_variable(out.p_values, alpha);
    return out;
}

} // namespace metamob
