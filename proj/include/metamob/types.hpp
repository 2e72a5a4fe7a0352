#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace metamob {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Which model governs the node models and the global random-effect part.
///  M0: per-subgroup (gamma_j, theta_j), no random effects
///  M1: + random trial intercept b0k
///  M2: + random trial intercept b0k and random treatment slope b1k
///  M3: stratified fixed per-trial intercepts gamma_jk + random slope b1k
enum class ModelVariant { M0, M1, M2, M3 };

struct ModelSpec {
    ModelVariant variant = ModelVariant::M0;

    bool has_random_intercept() const {
        return variant == ModelVariant::M1 || variant == ModelVariant::M2;
    }
    bool has_random_slope() const {
        return variant == ModelVariant::M2 || variant == ModelVariant::M3;
    }
    bool has_stratified_intercepts() const {
        return variant == ModelVariant::M3;
    }
    const char* name() const {
        switch (variant) {
            case ModelVariant::M0: return "mob";
            case ModelVariant::M1: return "mob-ri";
            case ModelVariant::M2: return "metamob-ri";
            case ModelVariant::M3: return "metamob-si";
        }
        return "?";
    }
};

/// Pooled subject-level data from K randomized trials.
/// trial ids are 1..K; trt is 0 (control) or 1 (experimental).
struct IpdDataset {
    VectorXd y;
    VectorXi trt;
    VectorXi trial;
    MatrixXd X;
    std::vector<std::string> covariate_names;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index p() const { return X.cols(); }
    int n_trials() const { return trial.size() ? trial.maxCoeff() : 0; }

    // Throws std::invalid_argument on any broken invariant.
    void validate() const;
};

struct VarianceComponents {
    double tau0_sq = 0.0;  // between-trial baseline variance
    double tau1_sq = 0.0;  // between-trial treatment-effect variance
    double sigma_sq = 1.0; // residual variance
};

/// Trial-level BLUPs; zero vectors for components absent under the spec.
struct RandomEffects {
    VectorXd b0;
    VectorXd b1;

    static RandomEffects zeros(int K) {
        return RandomEffects{VectorXd::Zero(K), VectorXd::Zero(K)};
    }
};

/// Fixed effects for one terminal node.
struct NodeEffects {
    double gamma = 0.0;              // subgroup intercept (mean over trials for M3)
    std::vector<double> gamma_by_trial; // length K for M3, empty otherwise
    double theta = 0.0;              // subgroup treatment effect
};

struct LmmFit {
    std::vector<NodeEffects> fixed;  // one block per terminal node, in node-id order
    VarianceComponents vc;
    RandomEffects re;
    double loglik = 0.0;       // ML log-likelihood at the estimates
    double reml_loglik = 0.0;
    bool converged = true;
    std::vector<std::string> warnings;
};

struct TreeControls {
    double alpha = 0.05;
    int minsize = 20;
    std::optional<int> max_depth;
    double trim = 0.1;
};

inline void IpdDataset::validate() const {
    const auto N = y.size();
    if (N < 1) throw std::invalid_argument("dataset: empty");
    if (trt.size() != N || trial.size() != N || X.rows() != N)
        throw std::invalid_argument("dataset: column lengths differ");
    if (static_cast<Eigen::Index>(covariate_names.size()) != X.cols())
        throw std::invalid_argument("dataset: covariate name count mismatch");
    const int K = n_trials();
    if (K < 1) throw std::invalid_argument("dataset: no trials");
    std::vector<char> seen(static_cast<size_t>(K), 0);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (trt[i] != 0 && trt[i] != 1)
            throw std::invalid_argument("dataset: trt must be 0/1");
        if (trial[i] < 1 || trial[i] > K)
            throw std::invalid_argument("dataset: trial id out of range");
        seen[static_cast<size_t>(trial[i] - 1)] = 1;
        if (!std::isfinite(y[i]))
            throw std::invalid_argument("dataset: non-finite outcome");
    }
    for (int k = 0; k < K; ++k)
        if (!seen[static_cast<size_t>(k)])
            throw std::invalid_argument("dataset: trial id gap");
}

} // namespace metamob
