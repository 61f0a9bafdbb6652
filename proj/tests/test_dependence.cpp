#include <cmath>

#include "bval/dependence.hpp"
#include "bval/error.hpp"
#include "bval/oracle.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace bval;

TEST_SUITE("dependence") {

TEST_CASE("independent pair is left alone") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.0};
    const auto m = decorrelate(p);
    CHECK(m.scale == 1.0);
    CHECK(m.pair_prime.tau1_hat == p.tau1_hat);
    CHECK(m.pair_prime.sigma1_sq == p.sigma1_sq);
    CHECK(map_bias_bound(0.7, m, MapDirection::ToPrime) == 0.7);
}

TEST_CASE("hand-evaluated map") {
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.3};
    const auto m = decorrelate(p);
    CHECK_NEAR(m.kappa, oracle::kDecorKappa, 1e-15);
    CHECK_NEAR(m.pair_prime.tau1_hat, oracle::kDecorTau1Prime, 1e-14);
    CHECK_NEAR(m.pair_prime.sigma1_sq, oracle::kDecorSigma1PrimeSq, 1e-15);
    CHECK_NEAR(m.scale, oracle::kDecorScale, 1e-15);
    CHECK(m.pair_prime.rho == 0.0);
    CHECK(m.pair_prime.tau0_hat == 1.0);
    CHECK_NEAR(map_bias_bound(1.0, m, MapDirection::ToPrime), oracle::kDecorBPrimeOfOne, 1e-14);
    for (double b : {0.0, 0.3, 1.0, 17.5}) {
        const double there = map_bias_bound(b, m, MapDirection::ToPrime);
        CHECK(map_bias_bound(there, m, MapDirection::FromPrime) == doctest::Approx(b).epsilon(1e-15));
    }
    CHECK_FALSE(m.ill_conditioned);
}

TEST_CASE("degenerate correlations") {
    // rho = 1 with sigma1 = sigma0 / 2: the decorrelated variance vanishes
    EstimatorPair p{1.0, 2.0, 1.0, 0.25, 1.0};
    CHECK_THROWS_AS(decorrelate(p), DomainError);
    // rho sigma1 = sigma0
    EstimatorPair s{1.0, 2.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(decorrelate(s), SingularError);
    // close to the singular line
    EstimatorPair near{1.0, 2.0, 1.0, 1.0, 0.9995};
    const auto m = decorrelate(near);
    CHECK(m.ill_conditioned);
    CHECK_FALSE(m.warning.empty());
}

TEST_CASE("b-values scale back exactly") {
    for (double rho : {-0.5, 0.3, 0.9}) {
        EstimatorPair p{1.0, 2.0, 1.0, 0.1, rho};
        for (auto k : {Kind::PW, Kind::PT, Kind::ST}) {
            const auto r = b_value_dependent(k, p, 0.05, 0.05);
            if (r.prime.kase == BValueCase::Finite) CHECK(r.original.value == r.map.scale * r.prime.value);
            CHECK(r.original.kase == r.prime.kase);
        }
    }
    EstimatorPair p{1.0, 2.0, 1.0, 0.1, 0.3};
    CHECK_NEAR(b_value_dependent(Kind::ST, p, 0.05, 0.05).original.value, 1.542615398, 1e-8);
}

TEST_CASE("correlated interval keeps coverage") {
    McConfig cfg;
    for (double rho : {-0.5, 0.3, 0.9}) {
        EstimatorPair p{0.0, 0.0, 1.0, 0.1, rho};
        for (auto k : {Kind::PT, Kind::ST}) {
            const auto r = interval_dependent(k, Side::TwoSided, p, 1.0, 0.05, 0.05);
            const auto map = decorrelate(p);
            REQUIRE(r.worst_case_t.size() == 1);
            // worst relative bias of the decorrelated pair, back on the original scale
            UnivariateModel m{1.0, 0.1, rho, r.worst_case_t[0] * map.scale};
            const auto mc = mc_coverage_univariate(k, Side::TwoSided, m, r.half_length_scaled, 0.05, cfg);
            CHECK_MESSAGE(mc.value >= 0.95 - 3.0 * mc.std_error, "rho " << rho << " mc " << mc.value);
        }
    }
}

}  // TEST_SUITE
