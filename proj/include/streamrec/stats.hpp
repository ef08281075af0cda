#pragma once

#include <span>

namespace streamrec {

enum class VarianceHandling {
    Error,  // zero variance of the differences raises DegenerateVarianceError
    Floor,  // the variance is floored at kVarianceFloor instead
};

inline constexpr double kVarianceFloor = 1e-12;

struct TTestResult {
    double t = 0.0;
    double p_value = 0.0;  // one-sided, alternative mean(a - b) > 0
    double mean_difference = 0.0;
    std::size_t n = 0;
};

// Paired t-test on a - b with n - 1 degrees of freedom.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          VarianceHandling handling = VarianceHandling::Error);

}  // namespace streamrec
