#include "ergo/stats.hpp"

#include "ergo/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergo {

Estimate mean_and_se(std::span<const double> xs) {
  Estimate e;
  if (xs.empty()) return e;
  // Shifted by the first sample: constant data give exactly zero spread.
  const double shift = xs.front();
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  const double dm = sum / n;
  e.value = shift + dm;
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - shift - dm) * (x - shift - dm);
  e.se = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

Estimate batch_means(std::span<const double> xs, std::size_t batches) {
  Estimate e;
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.value = sum / static_cast<double>(xs.size());
  batches = std::min(batches, xs.size());
  if (batches < 2) return e;
  const std::size_t len = xs.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = b * len; k < (b + 1) * len; ++k) s += xs[k];
    means[b] = s / static_cast<double>(len);
  }
  e.se = mean_and_se(means).se;
  return e;
}

namespace {

std::vector<std::size_t> order_of(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  return idx;
}

double total(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

}  // namespace

double ks_two_sample(std::span<const double> a, std::span<const double> wa,
                     std::span<const double> b, std::span<const double> wb) {
  if (a.size() != wa.size() || b.size() != wb.size()) throw DimensionError("KS weight size mismatch");
  if (a.empty() || b.empty()) return 0.0;
  const auto ia = order_of(a);
  const auto ib = order_of(b);
  const double ta = total(wa), tb = total(wb);
  double fa = 0.0, fb = 0.0, d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ia.size() || j < ib.size()) {
    double x;
    if (j >= ib.size() || (i < ia.size() && a[ia[i]] <= b[ib[j]])) {
      x = a[ia[i]];
    } else {
      x = b[ib[j]];
    }
    while (i < ia.size() && a[ia[i]] == x) fa += wa[ia[i++]];
    while (j < ib.size() && b[ib[j]] == x) fb += wb[ib[j++]];
    d = std::max(d, std::abs(fa / ta - fb / tb));
  }
  return d;
}

double ks_against_cdf(std::span<const double> xs, std::span<const double> w,
                      const std::function<double(double)>& cdf) {
  if (xs.size() != w.size()) throw DimensionError("KS weight size mismatch");
  if (xs.empty()) return 0.0;
  const auto idx = order_of(xs);
  const double t = total(w);
  double f = 0.0, d = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double x = xs[idx[i]];
    const double before = f;
    while (i < idx.size() && xs[idx[i]] == x) f += w[idx[i++]];
    const double c = cdf(x);
    d = std::max({d, std::abs(c - before / t), std::abs(c - f / t)});
  }
  return d;
}

double ks_noise_scale(std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) return 1.0;
  const double a = static_cast<double>(na), b = static_cast<double>(nb);
  return std::sqrt((a + b) / (a * b));
}

}  // namespace ergo
