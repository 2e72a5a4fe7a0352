#include "metamob/design.hpp"

namespace metamob {

DesignMatrices design_vectors(const IpdDataset& data,
                              const Eigen::Ref<const VectorXi>& assignment,
                              const ModelSpec& spec) {
    const Eigen::Index N = data.n();
    if (assignment.size() != N)
        throw std::invalid_argument("design_vectors: assignment length mismatch");
    const int K = data.n_trials();
    const int J = assignment.size() ? assignment.maxCoeff() : 0;
    if (J < 1 || assignment.minCoeff() < 1)
        throw std::invalid_argument("design_vectors: node ids must be 1..J");

    DesignMatrices d;
    d.n_nodes = J;
    d.n_trials = K;
    d.z_has_intercept = spec.has_random_intercept();
    d.z_has_slope = spec.has_random_slope();

    const bool strat = spec.has_stratified_intercepts();
    d.intercept_cols = strat ? J * K : J;
    const int q = d.intercept_cols + J;
    const int r = (d.z_has_intercept ? K : 0) + (d.z_has_slope ? K : 0);

    d.X_fixed = MatrixXd::Zero(N, q);
    d.Z = MatrixXd::Zero(N, r);

    for (Eigen::Index i = 0; i < N; ++i) {
        const int j = assignment[i] - 1;
        const int k = data.trial[i] - 1;
        const int icol = strat ? j * K + k : j;
        d.X_fixed(i, icol) = 1.0;
        if (data.trt[i] == 1) d.X_fixed(i, d.intercept_cols + j) = 1.0;
        int zc = 0;
        if (d.z_has_intercept) {
            d.Z(i, k) = 1.0;
            zc = K;
        }
        if (d.z_has_slope && data.trt[i] == 1) d.Z(i, zc + k) = 1.0;
    }
    return d;
}

} // namespace metamob
