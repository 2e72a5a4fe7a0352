#pragma once

#include "metamob/design.hpp"
#include "metamob/types.hpp"

namespace metamob {

struct LmmProblem {
    VectorXd response;
    DesignMatrices design;
    ModelSpec spec;
};

struct UnidentifiableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// REML fit of the Gaussian mixed model y = X*beta + Z b + eps with
/// independent random intercept/slope blocks, b0 ~ N(0, tau0^2 I_K),
/// b1 ~ N(0, tau1^2 I_K). The variance ratios lambda_m = tau_m^2/sigma^2
/// are profiled: for fixed lambda the fixed effects and sigma^2 have
/// closed-form GLS solutions. Boundary estimates (tau^2 = 0) are allowed.
/// Throws UnidentifiableError on rank-deficient fixed effects.
LmmFit fit_lmm(const LmmProblem& problem);

/// Posterior modes of the random effects at plugged-in variance
/// components (mixed-model equations); zero vectors for absent parts.
RandomEffects blups(const LmmProblem& problem, const VarianceComponents& vc,
                    const Eigen::Ref<const VectorXd>& beta);

/// Random-effect offset z_i' b for every observation.
VectorXd random_offset(const DesignMatrices& design, const RandomEffects& re);

} // namespace metamob
