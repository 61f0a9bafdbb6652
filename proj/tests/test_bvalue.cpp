#include <cmath>
#include <limits>

#include "bval/bvalue.hpp"
#include "bval/error.hpp"
#include "bval/numerics.hpp"
#include "bval/solver.hpp"
#include "support.hpp"

using namespace bval;

namespace {

constexpr double kZeta = 0.05;
constexpr double kAlpha = 0.05;

EstimatorPair random_pair() {
    EstimatorPair p;
    p.tau0_hat = testing::uniform(-1.0, 3.0);
    p.tau1_hat = testing::uniform(-1.0, 5.0);
    p.sigma0_sq = testing::uniform(0.3, 2.0);
    p.sigma1_sq = p.sigma0_sq / testing::uniform(0.5, 60.0);
    return p;
}

bool contains_zero(Kind kind, const EstimatorPair& p, double b) {
    return interval(kind, Side::TwoSided, p, b, kZeta, kAlpha).contains(0.0);
}

MultiProblem diag_problem(Eigen::Vector2d t0, Eigen::Vector2d t1) {
    MultiProblem p;
    p.tau0_hat = t0;
    p.tau1_hat = t1;
    p.Sigma0 = Eigen::Matrix2d::Identity();
    p.Sigma1 = 0.1 * Eigen::Matrix2d::Identity();
    p.q = default_threshold(2, kAlpha);
    p.h_star = builtin_shrinkage(ShrinkageKind::SqrtRatio, p.q);
    return p;
}

}  // namespace

TEST_SUITE("bvalue") {

TEST_CASE("zero case") {
    // tau_PW = 0 exactly
    EstimatorPair p{-1.0, 0.1, 1.0, 0.1, 0.0};
    CHECK_NEAR(point_pw(p), 0.0, 1e-15);
    const auto r = b_value(Kind::PW, p, kZeta, kAlpha);
    CHECK(r.kase == BValueCase::Zero);
    CHECK(r.value == 0.0);
    EstimatorPair zero{0.0, 0.0, 1.0, 0.1, 0.0};
    for (auto k : {Kind::PW, Kind::PT, Kind::ST}) CHECK(b_value(k, zero, kZeta, kAlpha).value == 0.0);
}

TEST_CASE("PW defining equation") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.0};
    const auto r = b_value(Kind::PW, p, kZeta, kAlpha);
    REQUIRE(r.kase == BValueCase::Finite);
    const double g = p.gamma();
    const double L = std::fabs(point_pw(p)) / p.pw_scale();
    const double shift = g * r.value / std::sqrt(1.0 + g);
    const double eq = normal_cdf(L - shift) - normal_cdf(-L - shift);
    CHECK(std::fabs(eq - (1.0 - kZeta)) < 1e-8);
    CHECK(std::fabs(r.residual) < 1e-8);
    CHECK_NEAR(r.value, 1.5544637684, 1e-8);
}

TEST_CASE("specialized and generic routes agree") {
    EstimatorPair fig{1.0, 2.0, 1.0, 0.1, 0.0};
    const auto st = b_value(Kind::ST, fig, kZeta, kAlpha);
    const auto st_generic = b_value_by_curve(Kind::ST, fig, kZeta, kAlpha);
    CHECK_NEAR(st.value, st_generic.value, 1e-6);
    CHECK_NEAR(st.value, 1.6106105369, 1e-8);
    CHECK_NEAR(b_value(Kind::PT, fig, kZeta, kAlpha).value, 1.4778152457, 1e-8);

    for (int i = 0; i < 20; ++i) {
        const auto p = random_pair();
        const auto a = b_value(Kind::PW, p, kZeta, kAlpha);
        const auto g = b_value_by_curve(Kind::PW, p, kZeta, kAlpha);
        CHECK(a.kase == g.kase);
        if (a.kase == BValueCase::Finite) CHECK_NEAR(a.value, g.value, 1e-6);
    }
}

TEST_CASE("decision consistency around b*") {
    for (int i = 0; i < 6; ++i) {
        const auto p = random_pair();
        for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
            const auto r = b_value(k, p, kZeta, kAlpha);
            if (r.kase != BValueCase::Finite) continue;
            CHECK_FALSE(contains_zero(k, p, r.value * (1.0 - 1e-4)));
            CHECK(contains_zero(k, p, r.value * (1.0 + 1e-4)));
        }
    }
}

TEST_CASE("smaller zeta reaches zero sooner") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.0};
    for (auto k : {Kind::PW, Kind::PT, Kind::ST})
        CHECK(b_value(k, p, 0.01, kAlpha).value <= b_value(k, p, kZeta, kAlpha).value + 1e-12);
}

TEST_CASE("infinite case") {
    // far from zero and highly precise: the unbiased estimator alone excludes 0 and ST stays bounded
    EstimatorPair p{50.0, 50.0, 1.0, 0.1, 0.0};
    const auto st = b_value(Kind::ST, p, kZeta, kAlpha);
    CHECK(st.kase == BValueCase::Infinite);
    CHECK(std::isinf(st.value));
    const auto pt = b_value(Kind::PT, p, kZeta, kAlpha);
    CHECK(pt.kase == BValueCase::Infinite);
    // PW length grows without bound, so its b-value stays finite
    CHECK(b_value(Kind::PW, p, kZeta, kAlpha).kase == BValueCase::Finite);
}

TEST_CASE("preconditions") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.3};
    CHECK_THROWS_AS(b_value(Kind::ST, p, kZeta, kAlpha), PreconditionError);
}

TEST_CASE("generic b-value") {
    const auto lin = [](double b) { return 1.0 + 2.0 * b; };
    CHECK(b_value_generic(lin, 0.0).value == 0.0);
    CHECK(b_value_generic(lin, 0.5).kase == BValueCase::Zero);
    CHECK_NEAR(b_value_generic(lin, 4.0).value, 1.5, 1e-9);
    const auto bounded = [](double b) { return 3.0 - 1.0 / (1.0 + b); };
    CHECK(b_value_generic(bounded, 5.0).kase == BValueCase::Infinite);
    const auto bumpy = [](double b) { return b < 2.0 ? b : 4.0 - b; };
    CHECK_THROWS_AS(b_value_generic(bumpy, 3.0), ContractError);
}

TEST_CASE("one-sided b-value") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.0};
    for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
        const auto r = b_value(k, p, kZeta, kAlpha, Side::Lower);
        const auto g = b_value_by_curve(k, p, kZeta, kAlpha, Side::Lower);
        CHECK(r.kase == g.kase);
        if (r.kase == BValueCase::Finite) CHECK_NEAR(r.value, g.value, 1e-6);
    }
    EstimatorPair neg{-1.0, -2.0, 1.0, 0.1, 0.0};
    CHECK(b_value(Kind::ST, neg, kZeta, kAlpha, Side::Lower).kase == BValueCase::Zero);
}

TEST_CASE("default directions") {
    const auto d2 = default_directions(2);
    REQUIRE(d2.size() == 33);
    CHECK(d2.front() == std::vector<double>{1.0, 0.0});
    CHECK(d2.back() == std::vector<double>{0.0, 1.0});
    for (const auto& e : d2) CHECK_NEAR(std::hypot(e[0], e[1]), 1.0, 1e-15);
    CHECK(default_directions(1) == std::vector<std::vector<double>>{{1.0}});
}

TEST_CASE("surface with estimates at zero") {
    const auto p = diag_problem({0.0, 0.0}, {0.0, 0.0});
    const auto s = b_surface(Kind::PW, p, kZeta, default_directions(2, 5));
    for (const auto& r : s.rays) {
        CHECK(r.error.empty());
        CHECK(r.radius == 0.0);
        CHECK(r.kase == BValueCase::Zero);
    }
}

TEST_CASE("surface in one dimension matches the scalar b-value") {
    EstimatorPair pair{1.0, 2.0, 1.0, 0.1, 0.0};
    MultiProblem p;
    p.tau0_hat = Eigen::VectorXd::Constant(1, 1.0);
    p.tau1_hat = Eigen::VectorXd::Constant(1, 2.0);
    p.Sigma0 = Eigen::MatrixXd::Identity(1, 1);
    p.Sigma1 = 0.1 * Eigen::MatrixXd::Identity(1, 1);
    p.q = default_threshold(1, kAlpha);
    p.h_star = builtin_shrinkage(ShrinkageKind::SqrtRatio, p.q);
    for (auto k : {Kind::PW, Kind::ST}) {
        const auto s = b_surface(k, p, kZeta, {{1.0}});
        REQUIRE(s.rays.size() == 1);
        CHECK_NEAR(s.rays[0].radius, b_value(k, pair, kZeta, kAlpha).value, 1e-6);
    }
    FusionProblem f{1.0, 1.0, {{2.0, 0.1}}};
    const auto fs = b_surface(Kind::ST, f, kZeta, kAlpha, {{1.0}});
    CHECK_NEAR(fs.rays[0].radius, b_value(Kind::ST, pair, kZeta, kAlpha).value, 1e-6);
}

TEST_CASE("exchangeable problem gives a symmetric surface") {
    const auto p = diag_problem({1.0, 1.5}, {2.0, 1.2});
    const auto swapped = diag_problem({1.5, 1.0}, {1.2, 2.0});
    const std::vector<std::vector<double>> dirs{{1.0, 0.0}, {0.8, 0.6}, {0.6, 0.8}, {0.0, 1.0}};
    const std::vector<std::vector<double>> flipped{{0.0, 1.0}, {0.6, 0.8}, {0.8, 0.6}, {1.0, 0.0}};
    for (auto k : {Kind::PW, Kind::ST}) {
        const auto a = b_surface(k, p, kZeta, dirs, 2);
        const auto b = b_surface(k, swapped, kZeta, flipped, 2);
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            REQUIRE(a.rays[i].error.empty());
            if (std::isinf(a.rays[i].radius)) {
                CHECK(std::isinf(b.rays[i].radius));
            } else {
                CHECK_NEAR(a.rays[i].radius, b.rays[i].radius, 1e-6);
            }
        }
    }
}

TEST_CASE("membership is monotone along a ray") {
    const auto p = diag_problem({1.0, 1.5}, {2.0, 1.2});
    const Eigen::Vector2d e(0.8, 0.6);
    const auto s = b_surface(Kind::ST, p, kZeta, {{0.8, 0.6}});
    const double r = s.rays[0].radius;
    REQUIRE(std::isfinite(r));
    REQUIRE(r > 0.0);
    bool seen_inside = false;
    for (double f : {0.25, 0.5, 0.8, 0.99, 1.01, 1.3, 2.0, 4.0}) {
        const auto reg = region_radius(Kind::ST, (f * r) * e, kZeta, p);
        const bool inside = reg.contains(Eigen::Vector2d::Zero());
        if (seen_inside) CHECK(inside);
        seen_inside = seen_inside || inside;
        CHECK(inside == (f > 1.0));
    }
}

TEST_CASE("bad directions are reported per ray") {
    const auto p = diag_problem({1.0, 1.5}, {2.0, 1.2});
    const auto s = b_surface(Kind::PW, p, kZeta, {{-1.0, 0.5}, {1.0, 0.0}});
    CHECK_FALSE(s.rays[0].error.empty());
    CHECK(std::isnan(s.rays[0].radius));
    CHECK(s.rays[1].error.empty());
}

}  // TEST_SUITE
