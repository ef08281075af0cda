#include "streamrec/stats.hpp"

#include "streamrec/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace streamrec {

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          VarianceHandling handling) {
    if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length samples");
    if (a.size() < 2) throw ConfigError("paired t-test needs at least two pairs");

    TTestResult r;
    r.n = a.size();
    const auto n = static_cast<double>(r.n);
    for (std::size_t i = 0; i < r.n; ++i) r.mean_difference += a[i] - b[i];
    r.mean_difference /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) {
        const double dev = a[i] - b[i] - r.mean_difference;
        ss += dev * dev;
    }
    double variance = ss / (n - 1.0);
    if (variance == 0.0) {
        if (handling == VarianceHandling::Error) {
            throw DegenerateVarianceError("paired differences have zero variance");
        }
        variance = kVarianceFloor;
    }
    variance = std::max(variance, handling == VarianceHandling::Floor ? kVarianceFloor : 0.0);

    r.t = r.mean_difference / std::sqrt(variance / n);
    const boost::math::students_t dist(n - 1.0);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

}  // namespace streamrec
