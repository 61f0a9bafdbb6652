#pragma once

#include <cmath>
#include <random>

#include "doctest.h"

#define CHECK_NEAR(actual, expected, tol)                                                                  \
    do {                                                                                                   \
        const double a_ = (actual);                                                                        \
        const double e_ = (expected);                                                                      \
        CHECK_MESSAGE(std::fabs(a_ - e_) <= (tol), #actual " = " << a_ << ", expected " << e_ << " +- " << (tol)); \
    } while (0)

#define REQUIRE_NEAR(actual, expected, tol)                                                                \
    do {                                                                                                   \
        const double a_ = (actual);                                                                        \
        const double e_ = (expected);                                                                      \
        REQUIRE_MESSAGE(std::fabs(a_ - e_) <= (tol), #actual " = " << a_ << ", expected " << e_ << " +- " << (tol)); \
    } while (0)

namespace testing {

// Fixed-seed generator for randomized configurations.
inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

}  // namespace testing
