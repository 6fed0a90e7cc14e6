#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ergo {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error of the mean for independent draws.
Estimate mean_and_se(std::span<const double> xs);

/// Batch-means SE for an autocorrelated series: `batches` contiguous, equal-size
/// batches (the remainder is dropped from the SE, never from the mean).
Estimate batch_means(std::span<const double> xs, std::size_t batches = 32);

/// Weighted two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> wa,
                     std::span<const double> b, std::span<const double> wb);

/// Weighted one-sample KS statistic against a continuous CDF.
double ks_against_cdf(std::span<const double> xs, std::span<const double> w,
                      const std::function<double(double)>& cdf);

/// Null scale of the two-sample KS statistic, sqrt((na + nb) / (na nb)).
double ks_noise_scale(std::size_t na, std::size_t nb);

}  // namespace ergo
