#include "metamob/simgen.hpp"

#include <cmath>

namespace metamob {

void ScenarioConfig::validate() const {
    if (K < 1) throw std::invalid_argument("scenario: K must be >= 1");
    if (N_total < K) throw std::invalid_argument("scenario: N_total < K");
    if (tau0 < 0 || tau1 < 0 || tau_gamma < 0)
        throw std::invalid_argument("scenario: negative heterogeneity sd");
    if (scenario == Scenario::Null &&
        (corr_target == CorrTarget::B0WithSplitter ||
         corr_target == CorrTarget::B1WithSplitter))
        throw std::invalid_argument(
            "scenario: Null model has no splitting variables to correlate with");
}

Tree reference_tree() {
    Tree t;
    t.nodes.resize(7);
    auto internal = [&](int idx, int var, double cut, int l, int r) {
        t.nodes[static_cast<size_t>(idx)].is_terminal = false;
        t.nodes[static_cast<size_t>(idx)].split_var = var;
        t.nodes[static_cast<size_t>(idx)].cutpoint = cut;
        t.nodes[static_cast<size_t>(idx)].left = l;
        t.nodes[static_cast<size_t>(idx)].right = r;
    };
    auto terminal = [&](int idx, int id) {
        t.nodes[static_cast<size_t>(idx)].is_terminal = true;
        t.nodes[static_cast<size_t>(idx)].node_id = id;
        t.nodes[static_cast<size_t>(idx)].effects.gamma = reference_gamma(id);
        t.nodes[static_cast<size_t>(idx)].effects.theta = reference_theta(id);
    };
    internal(0, 1, 30.0, 1, 4); // X2 <= 30
    internal(1, 0, 17.0, 2, 3); // X1 <= 17
    terminal(2, 1);
    terminal(3, 2);
    internal(4, 4, 63.0, 5, 6); // X5 <= 63
    terminal(5, 3);
    terminal(6, 4);
    return t;
}

double reference_gamma(int node_id) {
    switch (node_id) {
        case 1: return 17.5;
        case 2: return 30.0;
        case 3: return 30.0;
        case 4: return 42.5;
    }
    throw std::invalid_argument("reference_gamma: node id out of range");
}

double simb_gamma_mean(int node_id) {
    switch (node_id) {
        case 1: return 17.5;
        case 2: return 30.0;
        case 3: return 17.5;
        case 4: return 42.5;
    }
    throw std::invalid_argument("simb_gamma_mean: node id out of range");
}

double reference_theta(int node_id) {
    switch (node_id) {
        case 1: return -5.0;
        case 2: return 0.0;
        case 3: return 0.0;
        case 4: return 5.0;
    }
    throw std::invalid_argument("reference_theta: node id out of range");
}

MatrixXd gen_covariates(int n, std::mt19937_64& rng, double rho) {
    constexpr int p = kNumCovariates;
    // means: fixed for X1, X2, X4, X5; discrete uniform [-70, 70] otherwise
    Eigen::RowVectorXd mu(p);
    std::uniform_int_distribution<int> unif(-70, 70);
    for (int j = 0; j < p; ++j) mu[j] = unif(rng);
    mu[0] = 10.0;
    mu[1] = 30.0;
    mu[3] = -40.0;
    mu[4] = 70.0;

    // Cholesky of the equicorrelation matrix, scaled to variance 100
    MatrixXd corr = MatrixXd::Constant(p, p, rho);
    corr.diagonal().setOnes();
    const MatrixXd L =
        (kCovariateVar * corr).llt().matrixL();

    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd z(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = gauss(rng);
    return (z * L.transpose()).rowwise() + mu;
}

TrueF true_f(const Eigen::Ref<const Eigen::RowVectorXd>& x_row, int trt,
             Scenario scenario, const TruthLabels& draws, int trial) {
    if (scenario == Scenario::Null) return TrueF{0.0, 1};
    static const Tree ref = reference_tree();
    const int node = ref.predict_node(x_row);
    const double gamma = scenario == Scenario::SimA
                             ? reference_gamma(node)
                             : draws.gamma_jk(node - 1, trial - 1);
    return TrueF{gamma + reference_theta(node) * trt, node};
}

GeneratedData gen_dataset(const ScenarioConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int per_trial = config.N_total / config.K;
    const int N = per_trial * config.K;
    const int K = config.K;

    GeneratedData out;
    out.data.X = gen_covariates(N, rng);
    out.data.covariate_names.resize(kNumCovariates);
    for (int j = 0; j < kNumCovariates; ++j)
        out.data.covariate_names[static_cast<size_t>(j)] =
            "X" + std::to_string(j + 1);

    out.data.trt.resize(N);
    out.data.trial.resize(N);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < N; ++i) {
        out.data.trt[i] = coin(rng) ? 1 : 0;
        out.data.trial[i] = i / per_trial + 1;
    }

    out.truth.b0.resize(K);
    out.truth.b1.resize(K);
    for (int k = 0; k < K; ++k) {
        out.truth.b0[k] = config.tau0 * gauss(rng);
        out.truth.b1[k] = config.tau1 * gauss(rng);
    }
    if (config.scenario == Scenario::SimB) {
        out.truth.gamma_jk.resize(4, K);
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < K; ++k)
                out.truth.gamma_jk(j, k) =
                    simb_gamma_mean(j + 1) + config.tau_gamma * gauss(rng);
    }

    // Correlation construction: X_target += c * b_{k(i)} with
    // c = r*sigma_X / (tau*sqrt(1-r^2)), hitting corr(X, b) = r in
    // population. Skipped when the relevant tau is 0.
    if (config.corr_target != CorrTarget::None) {
        const bool uses_b0 = config.corr_target == CorrTarget::B0WithSplitter ||
                             config.corr_target == CorrTarget::B0WithNonsplitter;
        const bool splitter = config.corr_target == CorrTarget::B0WithSplitter ||
                              config.corr_target == CorrTarget::B1WithSplitter;
        const double tau = uses_b0 ? config.tau0 : config.tau1;
        const int col = splitter ? config.splitter_covariate
                                 : config.nonsplitter_covariate;
        if (tau > 0.0) {
            const double sigma_x = std::sqrt(kCovariateVar);
            const double c = kCorrTargetR * sigma_x /
                             (tau * std::sqrt(1.0 - kCorrTargetR * kCorrTargetR));
            const VectorXd& b = uses_b0 ? out.truth.b0 : out.truth.b1;
            for (int i = 0; i < N; ++i)
                out.data.X(i, col) += c * b[out.data.trial[i] - 1];
        }
    }

    out.data.y.resize(N);
    out.truth.true_node.resize(N);
    out.truth.true_theta.resize(N);
    for (int i = 0; i < N; ++i) {
        const TrueF f = true_f(out.data.X.row(i), out.data.trt[i],
                               config.scenario, out.truth, out.data.trial[i]);
        const int k = out.data.trial[i] - 1;
        out.data.y[i] = f.value + out.truth.b0[k] +
                        out.truth.b1[k] * out.data.trt[i] +
                        kResidualSd * gauss(rng);
        out.truth.true_node[i] = f.node;
        out.truth.true_theta[i] =
            config.scenario == Scenario::Null ? 0.0 : reference_theta(f.node);
    }
    out.data.validate();
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell,
                          std::uint64_t rep) {
    // splitmix64 over the packed stream id
    std::uint64_t x = base ^ (cell * 0x9E3779B97F4A7C15ULL) ^
                      (rep * 0xBF58476D1CE4E5B9ULL);
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace metamob
