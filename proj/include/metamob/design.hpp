#pragma once

#include "metamob/types.hpp"

namespace metamob {

/// Fixed and random design matrices for a given node assignment.
///
/// Fixed part (columns of X_fixed):
///   M0/M1/M2: per-node intercept (J cols) then per-node treatment (J cols).
///   M3:       per-node-per-trial intercept (J*K cols, node-major) then
///             per-node treatment (J cols).
/// Random part (columns of Z):
///   intercept block (K cols, present for M1/M2) then trial-x-treatment
///   block (K cols, present for M2/M3). A subject in the active arm of
///   trial k has 1 at intercept column k and slope column k; a control
///   subject only at the intercept column.
struct DesignMatrices {
    MatrixXd X_fixed;
    MatrixXd Z;
    int n_nodes = 0;
    int n_trials = 0;
    int intercept_cols = 0;   // leading columns of X_fixed
    bool z_has_intercept = false;
    bool z_has_slope = false;

    int z_slope_offset() const { return z_has_intercept ? n_trials : 0; }
};

DesignMatrices design_vectors(const IpdDataset& data,
                              const Eigen::Ref<const VectorXi>& assignment,
                              const ModelSpec& spec);

} // namespace metamob
