#include "metamob/lmm.hpp"

#include <cmath>
#include <numbers>

namespace metamob {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

// Sufficient statistics with zero-support fixed-effect columns dropped.
struct Workspace {
    MatrixXd XtX, ZtX, ZtZ;
    VectorXd Xty, Zty;
    double yty = 0.0;
    Eigen::Index N = 0;
    int q = 0; // kept fixed-effect columns
    int r = 0;
    std::vector<int> kept; // kept column -> original column
    VectorXd lambda_scale; // per Z column: 0 -> lambda0, 1 -> lambda1
};

struct Profile {
    double criterion = 0.0; // REML deviance up to a constant
    VectorXd beta;
    double rvr = 0.0;      // r' V^-1 r
    double logdet_a = 0.0;
    double logdet_xvx = 0.0;
    bool ok = false;
};

Workspace make_workspace(const LmmProblem& p) {
    Workspace w;
    const MatrixXd& X = p.design.X_fixed;
    const MatrixXd& Z = p.design.Z;
    w.N = p.response.size();
    for (int j = 0; j < X.cols(); ++j)
        if (X.col(j).cwiseAbs().sum() > 0.0) w.kept.push_back(j);
    w.q = static_cast<int>(w.kept.size());
    w.r = static_cast<int>(Z.cols());
    MatrixXd Xk(w.N, w.q);
    for (int j = 0; j < w.q; ++j) Xk.col(j) = X.col(w.kept[static_cast<size_t>(j)]);
    w.XtX = Xk.transpose() * Xk;
    w.Xty = Xk.transpose() * p.response;
    w.ZtX = Z.transpose() * Xk;
    w.ZtZ = Z.transpose() * Z;
    w.Zty = Z.transpose() * p.response;
    w.yty = p.response.squaredNorm();
    w.lambda_scale = VectorXd::Zero(w.r);
    const int K = p.design.n_trials;
    if (p.design.z_has_intercept)
        for (int k = 0; k < K; ++k) w.lambda_scale[k] = 0;
    if (p.design.z_has_slope)
        for (int k = 0; k < K; ++k) w.lambda_scale[p.design.z_slope_offset() + k] = 1;
    return w;
}

// Profiled REML criterion at fixed variance ratios (lambda0, lambda1).
Profile profile_at(const Workspace& w, double lambda0, double lambda1) {
    Profile out;
    VectorXd ds(w.r);
    for (int c = 0; c < w.r; ++c)
        ds[c] = std::sqrt(w.lambda_scale[c] == 0 ? lambda0 : lambda1);

    MatrixXd XtVX = w.XtX;
    VectorXd XtVy = w.Xty;
    double ytVy = w.yty;
    if (w.r > 0) {
        MatrixXd A = ds.asDiagonal() * w.ZtZ * ds.asDiagonal();
        A.diagonal().array() += 1.0;
        Eigen::LLT<MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) return out;
        out.logdet_a =
            2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const MatrixXd W = ds.asDiagonal() * w.ZtX;       // r x q
        const VectorXd u = ds.asDiagonal() * w.Zty;       // r
        const MatrixXd AiW = llt.solve(W);
        const VectorXd Aiu = llt.solve(u);
        XtVX -= W.transpose() * AiW;
        XtVy -= W.transpose() * Aiu;
        ytVy -= u.dot(Aiu);
    }

    Eigen::LLT<MatrixXd> xllt(XtVX);
    if (xllt.info() != Eigen::Success) return out;
    out.logdet_xvx = 2.0 * xllt.matrixLLT().diagonal().array().log().sum();
    out.beta = xllt.solve(XtVy);
    out.rvr = std::max(ytVy - out.beta.dot(XtVy), 1e-300);
    const double dof = static_cast<double>(w.N - w.q);
    out.criterion = out.logdet_a + out.logdet_xvx + dof * std::log(out.rvr);
    out.ok = true;
    return out;
}

double criterion_1d(const Workspace& w, int dim, double lam, double other) {
    const double l0 = dim == 0 ? lam : other;
    const double l1 = dim == 0 ? other : lam;
    const Profile pr = profile_at(w, l0, l1);
    return pr.ok ? pr.criterion : 1e300;
}

// Golden-section minimum over lambda >= 0 (log-scale bracket around the
// best coarse-grid point, boundary 0 compared explicitly).
double minimize_1d(const Workspace& w, int dim, double other, bool* ok) {
    constexpr double kLogLo = -16.0, kLogHi = 9.5;
    constexpr int kCoarse = 40;
    double best_u = kLogLo;
    double best_f = 1e300;
    for (int i = 0; i <= kCoarse; ++i) {
        const double u = kLogLo + (kLogHi - kLogLo) * i / kCoarse;
        const double f = criterion_1d(w, dim, std::exp(u), other);
        if (f < best_f) { best_f = f; best_u = u; }
    }
    const double f0 = criterion_1d(w, dim, 0.0, other);

    const double step = (kLogHi - kLogLo) / kCoarse;
    double a = best_u - step, b = best_u + step;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = criterion_1d(w, dim, std::exp(c), other);
    double fd = criterion_1d(w, dim, std::exp(d), other);
    int evals = 0;
    while (std::exp(b) - std::exp(a) >
               1e-8 * std::max(1.0, std::exp(a)) &&
           evals < 200) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = criterion_1d(w, dim, std::exp(c), other);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = criterion_1d(w, dim, std::exp(d), other);
        }
        ++evals;
    }
    *ok = evals < 200;
    const double u = (fc < fd) ? c : d;
    const double fu = std::min(fc, fd);
    if (f0 <= fu && f0 <= best_f) return 0.0;
    return std::exp(u);
}

} // namespace

LmmFit fit_lmm(const LmmProblem& problem) {
    const Workspace w = make_workspace(problem);
    if (w.N <= w.q)
        throw UnidentifiableError("fit_lmm: no residual degrees of freedom");

    const bool ri = problem.design.z_has_intercept;
    const bool rs = problem.design.z_has_slope;

    double lambda0 = 0.0, lambda1 = 0.0;
    bool converged = true;
    std::vector<std::string> warnings;

    if (ri && rs) {
        bool ok0 = true, ok1 = true;
        // cyclic coordinate descent, each sweep a full 1-d search
        double prev0 = -1.0, prev1 = -1.0;
        int sweep = 0;
        for (; sweep < 60; ++sweep) {
            lambda0 = minimize_1d(w, 0, lambda1, &ok0);
            lambda1 = minimize_1d(w, 1, lambda0, &ok1);
            const double d0 = std::abs(lambda0 - prev0);
            const double d1 = std::abs(lambda1 - prev1);
            // looser than the 1-d search tolerance, so the terminal
            // jitter of the inner golden sections cannot stall the sweep
            if (d0 <= 1e-6 * std::max(1.0, lambda0) &&
                d1 <= 1e-6 * std::max(1.0, lambda1))
                break;
            prev0 = lambda0;
            prev1 = lambda1;
        }
        if (sweep == 60 || !ok0 || !ok1) {
            converged = false;
            warnings.emplace_back("convergence failure: variance-ratio search");
        }
    } else if (ri || rs) {
        bool ok = true;
        const int dim = ri ? 0 : 1;
        const double lam = minimize_1d(w, dim, 0.0, &ok);
        if (ri) lambda0 = lam; else lambda1 = lam;
        if (!ok) {
            converged = false;
            warnings.emplace_back("convergence failure: variance-ratio search");
        }
    }

    const Profile pr = profile_at(w, lambda0, lambda1);
    if (!pr.ok)
        throw UnidentifiableError("fit_lmm: unidentifiable fixed effects");

    // loose-gradient diagnostic on the REML deviance, reported as a warning
    for (int dim = 0; dim < 2; ++dim) {
        const double lam = dim == 0 ? lambda0 : lambda1;
        const bool active = dim == 0 ? ri : rs;
        if (!active || lam <= 1e-10) continue;
        const double h = 1e-4;
        const double other = dim == 0 ? lambda1 : lambda0;
        const double fp = criterion_1d(w, dim, lam * std::exp(h), other);
        const double fm = criterion_1d(w, dim, lam * std::exp(-h), other);
        const double grad = (fp - fm) / (2.0 * h);
        if (std::abs(grad) > 0.01)
            warnings.emplace_back("loose gradient: scaled deviance gradient " +
                                  std::to_string(grad));
    }

    LmmFit fit;
    fit.converged = converged;
    fit.warnings = std::move(warnings);
    const double dof = static_cast<double>(w.N - w.q);
    const double sigma_sq = pr.rvr / dof;
    fit.vc.sigma_sq = sigma_sq;
    fit.vc.tau0_sq = ri ? lambda0 * sigma_sq : 0.0;
    fit.vc.tau1_sq = rs ? lambda1 * sigma_sq : 0.0;
    fit.reml_loglik = -0.5 * (pr.logdet_a + pr.logdet_xvx +
                              dof * (kLogTwoPi + std::log(sigma_sq) + 1.0));
    const double sigma_sq_ml = pr.rvr / static_cast<double>(w.N);
    fit.loglik = -0.5 * (pr.logdet_a +
                         static_cast<double>(w.N) *
                             (kLogTwoPi + std::log(sigma_sq_ml) + 1.0));

    // expand kept coefficients back to the full design layout
    VectorXd beta_full = VectorXd::Zero(problem.design.X_fixed.cols());
    for (int j = 0; j < w.q; ++j)
        beta_full[w.kept[static_cast<size_t>(j)]] = pr.beta[j];

    fit.re = blups(problem, fit.vc, beta_full);

    const int J = problem.design.n_nodes;
    const int K = problem.design.n_trials;
    const bool strat = problem.spec.has_stratified_intercepts();
    fit.fixed.resize(static_cast<size_t>(J));
    // per-cell support counts for the stratified layout
    std::vector<double> cell_n;
    if (strat) {
        cell_n.assign(static_cast<size_t>(J * K), 0.0);
        for (int c = 0; c < J * K; ++c)
            cell_n[static_cast<size_t>(c)] =
                problem.design.X_fixed.col(c).sum();
    }
    for (int j = 0; j < J; ++j) {
        NodeEffects& eff = fit.fixed[static_cast<size_t>(j)];
        eff.theta = beta_full[problem.design.intercept_cols + j];
        if (!strat) {
            eff.gamma = beta_full[j];
        } else {
            eff.gamma_by_trial.resize(static_cast<size_t>(K));
            double wsum = 0.0, vsum = 0.0;
            for (int k = 0; k < K; ++k) {
                const double nk = cell_n[static_cast<size_t>(j * K + k)];
                const double g = beta_full[j * K + k];
                eff.gamma_by_trial[static_cast<size_t>(k)] = g;
                wsum += nk;
                vsum += nk * g;
            }
            eff.gamma = wsum > 0.0 ? vsum / wsum : 0.0;
            // cells with no data inherit the node-level mean intercept
            for (int k = 0; k < K; ++k)
                if (cell_n[static_cast<size_t>(j * K + k)] == 0.0)
                    eff.gamma_by_trial[static_cast<size_t>(k)] = eff.gamma;
        }
    }
    return fit;
}

RandomEffects blups(const LmmProblem& problem, const VarianceComponents& vc,
                    const Eigen::Ref<const VectorXd>& beta) {
    const int K = problem.design.n_trials;
    RandomEffects re = RandomEffects::zeros(K);
    const int r = static_cast<int>(problem.design.Z.cols());
    if (r == 0 || vc.sigma_sq <= 0.0) return re;

    const double lambda0 = vc.tau0_sq / vc.sigma_sq;
    const double lambda1 = vc.tau1_sq / vc.sigma_sq;
    VectorXd ds(r);
    for (int c = 0; c < r; ++c) {
        const bool slope =
            problem.design.z_has_slope && c >= problem.design.z_slope_offset();
        ds[c] = std::sqrt(slope ? lambda1 : lambda0);
    }
    const MatrixXd& Z = problem.design.Z;
    const VectorXd resid = problem.response - problem.design.X_fixed * beta;
    const VectorXd v = Z.transpose() * resid;
    MatrixXd A = ds.asDiagonal() * (Z.transpose() * Z) * ds.asDiagonal();
    A.diagonal().array() += 1.0;
    const VectorXd b = ds.asDiagonal() *
                       VectorXd(A.llt().solve(VectorXd(ds.asDiagonal() * v)));
    int zc = 0;
    if (problem.design.z_has_intercept) {
        re.b0 = b.segment(0, K);
        zc = K;
    }
    if (problem.design.z_has_slope) re.b1 = b.segment(zc, K);
    return re;
}

VectorXd random_offset(const DesignMatrices& design, const RandomEffects& re) {
    const Eigen::Index N = design.Z.rows();
    if (design.Z.cols() == 0) return VectorXd::Zero(N);
    VectorXd b(design.Z.cols());
    int zc = 0;
    if (design.z_has_intercept) {
        b.segment(0, design.n_trials) = re.b0;
        zc = design.n_trials;
    }
    if (design.z_has_slope) b.segment(zc, design.n_trials) = re.b1;
    return design.Z * b;
}

} // namespace metamob
