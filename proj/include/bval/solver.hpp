#pragma once

// Half-lengths of the bias-aware intervals, radii of the multivariate regions,
// and sensitivity curves over a grid of bias bounds.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bval/coverage.hpp"
#include "bval/estimators.hpp"

namespace bval {

struct Diagnostics {
    int rounds = 0;               // worst-case search / root-finding alternations
    int evaluations = 0;          // coverage evaluations
    double coverage = 0.0;        // worst-case coverage at the solved length
    double std_error = 0.0;       // QMC standard error, zero for deterministic quadrature
    bool accuracy_warning = false;
    std::string note;
};

struct IntervalResult {
    Kind kind = Kind::PW;
    Side side = Side::TwoSided;
    double center = 0.0;
    double half_length_raw = 0.0;     // L, in units of the PW standard deviation
    double half_length_scaled = 0.0;  // L times the PW standard deviation
    std::vector<double> bound_b;
    std::vector<double> worst_case_t;
    Diagnostics diagnostics;

    double lower() const { return center - half_length_scaled; }
    double upper() const {
        return side == Side::TwoSided ? center + half_length_scaled : std::numeric_limits<double>::infinity();
    }
    bool contains(double value) const { return value >= lower() && value <= upper(); }
};

struct RegionResult {
    Kind kind = Kind::PW;
    Eigen::VectorXd center;
    double M = 0.0;
    Eigen::MatrixXd metric;  // Sigma0^{-1} + Sigma1^{-1}
    Eigen::VectorXd bound_b;
    Eigen::VectorXd worst_case_t;
    Diagnostics diagnostics;

    bool contains(const Eigen::VectorXd& tau) const;
};

void check_level(double p, const char* name);

// Worst-case coverage over the bias set at a fixed length. The univariate set is
// [-b, b], the multivariate and fusion sets are boxes with half-widths b.
struct WorstCase {
    std::vector<double> t;
    double coverage = 0.0;
};

WorstCase worst_case_univariate(Kind kind, Side side, double L, double b, double gamma, double alpha);
WorstCase worst_case_region(Kind kind, double M, const Eigen::VectorXd& b, const MultiProblem& problem,
                            const MultiGeometry& geom);
WorstCase worst_case_fusion(Kind kind, double L, const std::vector<double>& b, const FusionProblem& problem,
                            double alpha);

// Univariate half-lengths with a unit unbiased standard deviation (center 0,
// half_length_scaled = L / sqrt(1 + gamma)).
double half_length_pw(double b, double zeta, double gamma);
IntervalResult half_length_pt(double b, double zeta, double gamma, double alpha);
IntervalResult half_length_st(double b, double zeta, double gamma, double alpha);
IntervalResult half_length_one_sided(Kind kind, double b, double zeta, double gamma, double alpha);

// Any kind and side. L_floor is a known lower bound on the answer (e.g. from a
// smaller bias bound) and only narrows the search.
IntervalResult solve_half_length(Kind kind, Side side, double b, double zeta, double gamma, double alpha,
                                 double L_floor = 0.0);

// Interval around the point estimate of an independent pair.
IntervalResult interval(Kind kind, Side side, const EstimatorPair& pair, double b, double zeta, double alpha);

// Unbiased reference interval tau0_hat -/+ sigma0 c (c_{zeta/2} two-sided, c_zeta lower).
IntervalResult unbiased_interval(Side side, const EstimatorPair& pair, double zeta);

RegionResult region_radius(Kind kind, const Eigen::VectorXd& b, double zeta, const MultiProblem& problem);

IntervalResult half_length_fusion(Kind kind, const std::vector<double>& b, double zeta,
                                  const FusionProblem& problem, double alpha);

struct CurvePoint {
    double b = 0.0;
    IntervalResult result;
    std::string error;  // non-empty when the solver failed at this bound
    int error_code = 0;  // ErrorCode of the failure
};

struct SensitivityCurve {
    Kind kind = Kind::PW;
    Side side = Side::TwoSided;
    std::vector<CurvePoint> points;
    IntervalResult reference;  // unbiased interval, constant in b
};

// b_grid must be ascending and nonnegative. With threads > 1 the grid points are
// solved concurrently; results keep grid order either way.
SensitivityCurve sensitivity_curve(Kind kind, Side side, const std::vector<double>& b_grid,
                                   const EstimatorPair& pair, double zeta, double alpha, int threads = 1);

}  // namespace bval
