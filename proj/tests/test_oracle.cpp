#include <algorithm>
#include <cmath>

#include "bval/error.hpp"
#include "bval/numerics.hpp"
#include "bval/oracle.hpp"
#include "bval/solver.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace bval;

TEST_SUITE("oracle") {

TEST_CASE("configuration") {
    McConfig cfg;
    cfg.n_draws = 999;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.n_draws = 1000;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("counter normals are deterministic and standard") {
    CHECK(counter_normal(42, 7, 0) == counter_normal(42, 7, 0));
    CHECK(counter_normal(42, 7, 0) != counter_normal(42, 7, 1));
    CHECK(counter_normal(42, 7, 0) != counter_normal(43, 7, 0));
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = counter_normal(1, i, 0);
        s += z;
        s2 += z * z;
    }
    CHECK(std::fabs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("trivial coverages") {
    McConfig cfg;
    UnivariateModel m{1.0, 0.1, 0.0, 0.0};
    for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
        const auto wide = mc_coverage_univariate(k, Side::TwoSided, m, 50.0, 0.05, cfg);
        CHECK(wide.value == 1.0);
    }
    const auto pw = mc_coverage_univariate(Kind::PW, Side::TwoSided, m, upper_quantile(0.025) / std::sqrt(11.0), 0.05, cfg);
    CHECK(std::fabs(pw.value - 0.95) <= 3.0 * pw.std_error);
}

TEST_CASE("solved ST interval passes at the worst case") {
    McConfig cfg;
    const auto r = half_length_st(1.0, 0.05, 10.0, 0.05);
    UnivariateModel m{1.0, 0.1, 0.0, 1.0};
    const auto mc = mc_coverage_univariate(Kind::ST, Side::TwoSided, m, r.half_length_scaled, 0.05, cfg);
    CHECK(std::fabs(mc.value - 0.95) <= 3.0 * mc.std_error);
}

TEST_CASE("reproducible across runs and thread counts") {
    McConfig one;
    McConfig four = one;
    four.threads = 4;
    UnivariateModel m{1.0, 0.1, 0.2, 0.4};
    const auto a = mc_coverage_univariate(Kind::ST, Side::TwoSided, m, 0.8, 0.05, one);
    const auto b = mc_coverage_univariate(Kind::ST, Side::TwoSided, m, 0.8, 0.05, one);
    const auto c = mc_coverage_univariate(Kind::ST, Side::TwoSided, m, 0.8, 0.05, four);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.value == c.value);
    CHECK(a.std_error == c.std_error);
}

TEST_CASE("antithetic pairs leave the estimand alone") {
    McConfig anti;
    McConfig plain = anti;
    plain.antithetic = false;
    UnivariateModel m{1.0, 0.1, 0.0, 0.6};
    for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
        const auto a = mc_coverage_univariate(k, Side::TwoSided, m, 0.9, 0.05, anti);
        const auto p = mc_coverage_univariate(k, Side::TwoSided, m, 0.9, 0.05, plain);
        CHECK(std::fabs(a.value - p.value) < 4.0 * std::hypot(a.std_error, p.std_error));
        CHECK_NEAR(p.std_error, std::sqrt(p.value * (1.0 - p.value) / p.n), 1e-15);
    }
}

TEST_CASE("analytic and simulated coverage agree") {
    McConfig cfg;
    for (int i = 0; i < 20; ++i) {
        const double g = testing::uniform(0.5, 60.0), t = testing::uniform(-2.5, 2.5);
        const double alpha = testing::uniform(0.01, 0.3), L = testing::uniform(0.5, 5.0);
        const auto side = i % 4 == 3 ? Side::Lower : Side::TwoSided;
        for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
            const double analytic = coverage_univariate(k, side, L, t, g, alpha);
            UnivariateModel m{1.0, 1.0 / g, 0.0, t};
            const double scaled = L / std::sqrt(1.0 + g);
            const auto direct = mc_coverage_univariate(k, side, m, scaled, alpha, cfg);
            const auto rep = mc_coverage_univariate(k, side, m, scaled, alpha, cfg, McRoute::Representation);
            // near 0 or 1 the sample can be all hits; fall back to the binomial stderr at the analytic value
            const double floor = std::sqrt(analytic * (1.0 - analytic) / direct.n);
            CHECK(std::fabs(direct.value - analytic) < 4.0 * std::max(direct.std_error, floor) + 1e-12);
            CHECK(std::fabs(rep.value - analytic) < 4.0 * std::max(rep.std_error, floor) + 1e-12);
        }
    }
}

TEST_CASE("representation route needs independence") {
    McConfig cfg;
    UnivariateModel m{1.0, 0.1, 0.3, 0.0};
    CHECK_THROWS_AS(mc_coverage_univariate(Kind::ST, Side::TwoSided, m, 1.0, 0.05, cfg, McRoute::Representation),
                    DomainError);
}

TEST_CASE("quantiles") {
    McConfig cfg;
    cfg.n_draws = 10000000;
    QuantileSpec fold;
    CHECK_NEAR(mc_quantile(fold, 0.95, cfg), 1.959964, 0.005);
    QuantileSpec chi;
    chi.dist = QuantileDist::NoncentralChisq;
    chi.dof = 2;
    CHECK_NEAR(mc_quantile(chi, 0.95, cfg), 5.991465, 0.05);
    QuantileSpec shifted;
    shifted.shift = 1.507557;
    CHECK_NEAR(mc_quantile(shifted, 0.95, cfg), half_length_pw(0.5, 0.05, 10.0), 2e-3);
    // error quantile of PW at zero bias is c_{zeta/2} times its standard deviation
    QuantileSpec err;
    err.dist = QuantileDist::EstimatorAbsError;
    err.model = UnivariateModel{1.0, 0.1, 0.0, 0.0};
    CHECK_NEAR(mc_quantile(err, 0.95, cfg), 1.959964 / std::sqrt(11.0), 0.005);
    CHECK_THROWS_AS(mc_quantile(fold, 1.0, cfg), DomainError);
}

TEST_CASE("region and fusion simulation") {
    McConfig cfg;
    MultiProblem p;
    p.tau0_hat = Eigen::VectorXd::Zero(2);
    p.tau1_hat = Eigen::VectorXd::Zero(2);
    p.Sigma0 = Eigen::MatrixXd::Identity(2, 2);
    p.Sigma1 = 0.1 * Eigen::MatrixXd::Identity(2, 2);
    p.q = default_threshold(2, 0.05);
    p.h_star = builtin_shrinkage(ShrinkageKind::SqrtRatio, p.q);
    const auto st = mc_coverage_region(Kind::ST, p, Eigen::Vector2d(1.0, 0.5), 8.0, cfg);
    CHECK(std::fabs(st.value - oracle::kMultiStCoverageMc) < 4.0 * std::hypot(st.std_error, oracle::kMultiStCoverageMcSe));
    const auto pw = mc_coverage_region(Kind::PW, p, Eigen::Vector2d::Zero(), default_threshold(2, 0.05), cfg);
    CHECK(std::fabs(pw.value - 0.95) <= 3.0 * pw.std_error);

    FusionProblem f{0.0, 1.0, {{0.0, 0.1}, {0.0, 0.2}}};
    const double scaled = 2.0 * f.pw_scale();
    const auto pt = mc_coverage_fusion(Kind::PT, f, {0.5, 1.0}, scaled, 0.05, cfg);
    CHECK(std::fabs(pt.value - oracle::kFusionPtCoverageMc) <
          4.0 * std::hypot(pt.std_error, oracle::kFusionPtCoverageMcSe));
    const auto stf = mc_coverage_fusion(Kind::ST, f, {0.5, 1.0}, scaled, 0.05, cfg);
    CHECK(std::fabs(stf.value - oracle::kFusionStCoverageMc) <
          4.0 * std::hypot(stf.std_error, oracle::kFusionStCoverageMcSe));
}

}  // TEST_SUITE
