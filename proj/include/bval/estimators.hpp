#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bval {

enum class Kind { PW, PT, ST };

const char* to_string(Kind kind);
Kind kind_from_string(const std::string& name);

// Unbiased tau0_hat ~ N(tau, sigma0_sq) and biased tau1_hat ~ N(tau + Delta, sigma1_sq).
struct EstimatorPair {
    double tau0_hat = 0.0;
    double tau1_hat = 0.0;
    double sigma0_sq = 1.0;
    double sigma1_sq = 1.0;
    double rho = 0.0;

    void validate() const;
    double gamma() const { return sigma0_sq / sigma1_sq; }
    double sigma0() const;
    // Standard deviation of tau1_hat - tau0_hat in the independent case.
    double sigma() const;
    // Standard deviation of the precision-weighted estimator, sigma0 / sqrt(1 + gamma).
    double pw_scale() const;
};

double point_pw(const EstimatorPair& pair);
double point_pt(const EstimatorPair& pair, double alpha);
double point_st(const EstimatorPair& pair, double alpha);
double point_estimate(Kind kind, const EstimatorPair& pair, double alpha);

// Shrinkage h*_q on [q, inf): nonincreasing, h*(q) = 1.
enum class ShrinkageKind { SqrtRatio, Ratio, Custom };
using ShrinkageFn = std::function<double(double)>;
ShrinkageFn builtin_shrinkage(ShrinkageKind kind, double q);

struct MultiProblem {
    Eigen::VectorXd tau0_hat;
    Eigen::VectorXd tau1_hat;
    Eigen::MatrixXd Sigma0;
    Eigen::MatrixXd Sigma1;
    Eigen::MatrixXd Sigma_scale;  // empty means Sigma0
    double q = 0.0;
    ShrinkageFn h_star;

    int dim() const { return static_cast<int>(tau0_hat.size()); }
    const Eigen::MatrixXd& scale() const { return Sigma_scale.size() == 0 ? Sigma0 : Sigma_scale; }
    // Full shrinkage h_q(r): 1 on [0, q], h_star beyond.
    double h(double r) const;
    void validate() const;
};

// Default pretest threshold: the (1 - alpha) chi-squared quantile with d dof.
double default_threshold(int d, double alpha);

Eigen::VectorXd point_multivariate(Kind kind, const MultiProblem& problem);

struct BiasedSource {
    double tau_hat = 0.0;
    double sigma_sq = 1.0;
};

struct FusionProblem {
    double tau0_hat = 0.0;
    double sigma0_sq = 1.0;
    std::vector<BiasedSource> biased;

    void validate() const;
    std::size_t size() const { return biased.size(); }
    std::vector<double> gammas() const;
    double gamma_l1() const;
    double sigma0() const;
    double pw_scale() const;
    // Pretest cutoff on |tau_j_hat - tau0_hat|: sqrt(1 + 1/gamma_j) sigma0 c_{alpha/2}.
    double threshold(std::size_t j, double alpha) const;
};

double point_fusion(Kind kind, const FusionProblem& problem, double alpha);

namespace linalg {

// Symmetric square root and inverse square root through an eigendecomposition
// with eigenvalues floored at 1e-12 * trace.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m);
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m);
void require_spd(const Eigen::MatrixXd& m, const char* name);

}  // namespace linalg

}  // namespace bval
