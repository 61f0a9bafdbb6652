#include "bval/estimators.hpp"

#include <cmath>

#include "bval/error.hpp"
#include "bval/numerics.hpp"

namespace bval {

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::PW: return "PW";
        case Kind::PT: return "PT";
        case Kind::ST: return "ST";
    }
    return "?";
}

Kind kind_from_string(const std::string& name) {
    if (name == "PW" || name == "pw") return Kind::PW;
    if (name == "PT" || name == "pt") return Kind::PT;
    if (name == "ST" || name == "st") return Kind::ST;
    throw DomainError("unknown estimator kind '" + name + "'");
}

void EstimatorPair::validate() const {
    if (!std::isfinite(tau0_hat) || !std::isfinite(tau1_hat))
        throw DomainError("estimates must be finite");
    if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) throw DomainError("sigma0_sq must be positive");
    if (!(sigma1_sq > 0.0) || !std::isfinite(sigma1_sq)) throw DomainError("sigma1_sq must be positive");
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1, 1]");
}

double EstimatorPair::sigma0() const { return std::sqrt(sigma0_sq); }
double EstimatorPair::sigma() const { return std::sqrt(sigma0_sq + sigma1_sq); }
double EstimatorPair::pw_scale() const { return sigma0() / std::sqrt(1.0 + gamma()); }

namespace {

void require_independent(const EstimatorPair& pair) {
    pair.validate();
    if (pair.rho != 0.0)
        throw PreconditionError("correlated pair: decorrelate before combining (rho != 0)");
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

}  // namespace

double point_pw(const EstimatorPair& pair) {
    require_independent(pair);
    const double g = pair.gamma();
    return pair.tau0_hat + g / (1.0 + g) * (pair.tau1_hat - pair.tau0_hat);
}

double point_pt(const EstimatorPair& pair, double alpha) {
    require_alpha(alpha);
    const double diff = pair.tau1_hat - pair.tau0_hat;
    const double cut = pair.sigma() * upper_quantile(alpha / 2.0);
    return std::fabs(diff) <= cut ? point_pw(pair) : (require_independent(pair), pair.tau0_hat);
}

double point_st(const EstimatorPair& pair, double alpha) {
    require_alpha(alpha);
    require_independent(pair);
    const double diff = pair.tau1_hat - pair.tau0_hat;
    const double cut = pair.sigma() * upper_quantile(alpha / 2.0);
    if (std::fabs(diff) <= cut) return point_pw(pair);
    const double g = pair.gamma();
    return pair.tau0_hat + g / (1.0 + g) * std::copysign(cut, diff);
}

double point_estimate(Kind kind, const EstimatorPair& pair, double alpha) {
    switch (kind) {
        case Kind::PW: return point_pw(pair);
        case Kind::PT: return point_pt(pair, alpha);
        case Kind::ST: return point_st(pair, alpha);
    }
    throw DomainError("unknown estimator kind");
}

ShrinkageFn builtin_shrinkage(ShrinkageKind kind, double q) {
    switch (kind) {
        case ShrinkageKind::SqrtRatio:
            return [q](double r) { return r <= q ? 1.0 : std::sqrt(q / r); };
        case ShrinkageKind::Ratio:
            return [q](double r) { return r <= q ? 1.0 : q / r; };
        case ShrinkageKind::Custom:
            break;
    }
    throw DomainError("no built-in shrinkage for a custom kind");
}

double MultiProblem::h(double r) const { return r <= q ? 1.0 : h_star(r); }

void MultiProblem::validate() const {
    const int d = dim();
    if (d < 1) throw DimensionError("multivariate problem needs d >= 1");
    if (tau1_hat.size() != d) throw DimensionError("tau1_hat has the wrong length");
    auto square = [d](const Eigen::MatrixXd& m) { return m.rows() == d && m.cols() == d; };
    if (!square(Sigma0) || !square(Sigma1)) throw DimensionError("covariance matrices must be d x d");
    if (Sigma_scale.size() != 0 && !square(Sigma_scale)) throw DimensionError("Sigma_scale must be d x d");
    if (!tau0_hat.allFinite() || !tau1_hat.allFinite()) throw DomainError("estimates must be finite");
    linalg::require_spd(Sigma0, "Sigma0");
    linalg::require_spd(Sigma1, "Sigma1");
    linalg::require_spd(scale(), "Sigma_scale");
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("threshold q must be a finite nonnegative number");
    if (!h_star) throw DomainError("shrinkage function h_star is missing");
    // h*(q) = 1 and nonincreasing, checked on a sample of [q, 100 q + 100].
    if (std::fabs(h_star(q) - 1.0) > 1e-9) throw DomainError("h_star(q) must equal 1");
    double prev = 1.0;
    for (int i = 1; i <= 64; ++i) {
        const double r = q + (100.0 * q + 100.0) * (i / 64.0) * (i / 64.0);
        const double v = h_star(r);
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("h_star must map into [0, 1]");
        if (v > prev + 1e-12) throw DomainError("h_star must be nonincreasing");
        prev = v;
    }
}

double default_threshold(int d, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    return noncentral_chisq_quantile(1.0 - alpha, d, 0.0);
}

Eigen::VectorXd point_multivariate(Kind kind, const MultiProblem& problem) {
    problem.validate();
    const Eigen::MatrixXd p0 = linalg::spd_inverse(problem.Sigma0);
    const Eigen::MatrixXd p1 = linalg::spd_inverse(problem.Sigma1);
    const Eigen::MatrixXd w = linalg::spd_inverse(p0 + p1);
    const Eigen::VectorXd diff = problem.tau1_hat - problem.tau0_hat;
    const Eigen::VectorXd step = w * (p1 * diff);
    if (kind == Kind::PW) return problem.tau0_hat + step;
    const Eigen::VectorXd z = linalg::sym_inv_sqrt(problem.Sigma0 + problem.Sigma1) * diff;
    const double r = z.squaredNorm();
    if (kind == Kind::PT) return r <= problem.q ? Eigen::VectorXd(problem.tau0_hat + step) : problem.tau0_hat;
    return problem.tau0_hat + problem.h(r) * step;
}

void FusionProblem::validate() const {
    if (biased.empty()) throw DimensionError("fusion problem needs at least one biased source");
    if (!std::isfinite(tau0_hat)) throw DomainError("tau0_hat must be finite");
    if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) throw DomainError("sigma0_sq must be positive");
    for (const auto& src : biased) {
        if (!std::isfinite(src.tau_hat)) throw DomainError("biased estimates must be finite");
        if (!(src.sigma_sq > 0.0) || !std::isfinite(src.sigma_sq))
            throw DomainError("biased variances must be positive");
    }
}

std::vector<double> FusionProblem::gammas() const {
    std::vector<double> g;
    g.reserve(biased.size());
    for (const auto& src : biased) g.push_back(sigma0_sq / src.sigma_sq);
    return g;
}

double FusionProblem::gamma_l1() const {
    double s = 0.0;
    for (const auto& src : biased) s += sigma0_sq / src.sigma_sq;
    return s;
}

double FusionProblem::sigma0() const { return std::sqrt(sigma0_sq); }

double FusionProblem::pw_scale() const { return sigma0() / std::sqrt(1.0 + gamma_l1()); }

double FusionProblem::threshold(std::size_t j, double alpha) const {
    const double g = sigma0_sq / biased.at(j).sigma_sq;
    return std::sqrt(1.0 + 1.0 / g) * sigma0() * upper_quantile(alpha / 2.0);
}

double point_fusion(Kind kind, const FusionProblem& problem, double alpha) {
    problem.validate();
    if (kind != Kind::PW && !(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const double denom = 1.0 + problem.gamma_l1();
    double shift = 0.0;
    for (std::size_t j = 0; j < problem.size(); ++j) {
        const double w = (problem.sigma0_sq / problem.biased[j].sigma_sq) / denom;
        const double diff = problem.biased[j].tau_hat - problem.tau0_hat;
        if (kind == Kind::PW) {
            shift += w * diff;
            continue;
        }
        const double cut = problem.threshold(j, alpha);
        if (std::fabs(diff) <= cut)
            shift += w * diff;
        else if (kind == Kind::ST)
            shift += w * std::copysign(cut, diff);
    }
    return problem.tau0_hat + shift;
}

namespace linalg {

namespace {

Eigen::MatrixXd spectral(const Eigen::MatrixXd& m, double power) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw LinearAlgebraError("eigendecomposition failed");
    const double floor = 1e-12 * std::max(m.trace(), 0.0);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    if (ev.minCoeff() <= 0.0) throw LinearAlgebraError("matrix is not positive definite");
    ev = ev.array().pow(power);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) { return spectral(m, 0.5); }
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m) { return spectral(m, -0.5); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw LinearAlgebraError("matrix is singular or not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

void require_spd(const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite()) throw LinearAlgebraError(std::string(name) + " has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw LinearAlgebraError(std::string(name) + " is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw LinearAlgebraError(std::string(name) + " is not positive definite");
}

}  // namespace linalg

}  // namespace bval
