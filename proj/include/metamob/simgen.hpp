#pragma once

#include "metamob/tree.hpp"
#include "metamob/types.hpp"

#include <cstdint>
#include <random>

namespace metamob {

enum class Scenario { Null, SimA, SimB };

enum class CorrTarget {
    None,
    B0WithSplitter,
    B0WithNonsplitter,
    B1WithSplitter,
    B1WithNonsplitter,
};

/// One cell of the simulation grid. Trials get N_total/K subjects each
/// (rounded down). The Null scenario has no subgroup structure, so only
/// non-splitter correlation targets are allowed there.
struct ScenarioConfig {
    Scenario scenario = Scenario::Null;
    int K = 5;
    int N_total = 500;
    double tau0 = 0.0;
    double tau1 = 0.0;
    CorrTarget corr_target = CorrTarget::None;
    double tau_gamma = 5.0; // SimB only: sd of the trial-specific intercepts
    std::uint64_t seed = 1;

    int splitter_covariate = 1;    // X2: default correlation target among splitters
    int nonsplitter_covariate = 9; // X10: default non-splitter target

    void validate() const;
};

struct TruthLabels {
    VectorXi true_node;   // 1..4 for SimA/SimB, constant 1 for Null
    VectorXd true_theta;  // -5/0/0/5 by true node, 0 for Null
    VectorXd b0, b1;      // length K generator draws
    MatrixXd gamma_jk;    // 4 x K, SimB only (otherwise 0 x 0)
};

inline constexpr int kNumCovariates = 15;
inline constexpr double kCovariateRho = 0.3;
inline constexpr double kCovariateVar = 100.0;
inline constexpr double kResidualSd = 5.0;
inline constexpr double kCorrTargetR = 0.42;

/// The generating tree (splits X2<=30, X1<=17, X5<=63; effects -5/0/0/5).
Tree reference_tree();

/// Means of the four generating subgroups: 17.5, 30, 30, 42.5.
double reference_gamma(int node_id);
/// SimB intercept distribution means: 17.5, 30, 17.5, 42.5.
double simb_gamma_mean(int node_id);
double reference_theta(int node_id);

/// Equicorrelated Gaussian covariates: unit correlation 0.3 scaled to
/// variance 100; means 10/30/-40/70 for X1/X2/X4/X5, the rest drawn once
/// per dataset from the discrete uniform on [-70, 70]. rho is a test hook.
MatrixXd gen_covariates(int n, std::mt19937_64& rng,
                        double rho = kCovariateRho);

/// Mean contribution f(x, t) and the true subgroup of one subject.
struct TrueF {
    double value = 0.0;
    int node = 1;
};
TrueF true_f(const Eigen::Ref<const Eigen::RowVectorXd>& x_row, int trt,
             Scenario scenario, const TruthLabels& draws, int trial);

struct GeneratedData {
    IpdDataset data;
    TruthLabels truth;
};

GeneratedData gen_dataset(const ScenarioConfig& config);

/// Stream seed for replication `rep` of grid cell `cell` (stable under
/// any parallel schedule).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell,
                          std::uint64_t rep);

} // namespace metamob
