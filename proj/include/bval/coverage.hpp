#pragma once

// Coverage probabilities of the fixed-length intervals and ellipsoidal regions
// as functions of the standardized half-length and the relative bias.

#include <vector>

#include <Eigen/Dense>

#include "bval/estimators.hpp"

namespace bval {

enum class Side { TwoSided, Lower };

const char* to_string(Side side);
Side side_from_string(const std::string& name);

// Univariate coverage at half-length L (units of sigma0 / sqrt(1 + gamma)) and
// relative bias t = Delta / sigma0.
double coverage_pw(double L, double t, double gamma);
double coverage_pt(double L, double t, double gamma, double alpha);
double coverage_st(double L, double t, double gamma, double alpha);

// P(tau_hat - tau <= L * scale), the coverage of the lower bound tau_hat - L * scale.
double coverage_one_sided(Kind kind, double L, double t, double gamma, double alpha);

double coverage_univariate(Kind kind, Side side, double L, double t, double gamma, double alpha);

// Limit of the ST coverage as t -> infinity.
double coverage_st_limit(Side side, double L, double gamma, double alpha);

// Matrices of the multivariate coverage integrals, precomputed once per problem.
//   noise     = (Sigma0 + Sigma1)^{-1/2} Sigma^{1/2}: maps t to the mean of the pretest statistic
//   leverage  = W^{1/2} Sigma1^{-1} (Sigma0 + Sigma1)^{1/2}, W = (Sigma0^{-1} + Sigma1^{-1})^{-1}
// so the PW noncentrality is ||leverage * noise * t||^2.
struct MultiGeometry {
    int dim = 0;
    Eigen::MatrixXd noise;
    Eigen::MatrixXd leverage;
    Eigen::MatrixXd metric;  // Sigma0^{-1} + Sigma1^{-1}
    double q = 0.0;

    static MultiGeometry from(const MultiProblem& problem);
};

struct MultiCoverage {
    double value = 0.0;
    double std_error = 0.0;     // zero for deterministic quadrature (d <= 2)
    bool accuracy_warning = false;
};

// Stderr above this flags a QMC result as inaccurate.
constexpr double kQmcWarnStdError = 1e-4;

MultiCoverage coverage_multivariate(Kind kind, double M, const Eigen::VectorXd& t,
                                    const MultiProblem& problem);
MultiCoverage coverage_multivariate(Kind kind, double M, const Eigen::VectorXd& t,
                                    const MultiProblem& problem, const MultiGeometry& geom);

// Fusion coverage at half-length L (units of sigma0 / sqrt(1 + ||gamma||_1)).
// K = 1 uses exact one-dimensional quadrature, K <= 3 conditions on the shared
// noise of the unbiased estimator, larger K uses QMC. K > 8 is refused.
double coverage_fusion(Kind kind, double L, const std::vector<double>& t,
                       const FusionProblem& problem, double alpha);

constexpr std::size_t kFusionMaxSources = 8;

}  // namespace bval
