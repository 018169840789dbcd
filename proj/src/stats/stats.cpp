// SPDX-License-Identifier: Apache-2.0
#include "blocksens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace blocksens::stats {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) throw StatsError("series lengths differ");
  if (x.size() < min_len)
    throw StatsError("need at least " + std::to_string(min_len) + " points");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw StatsError("non-finite value");
}

double two_sided_t(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) throw StatsError("mean of no values");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double std_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double k = static_cast<double>(values.size());
  return std::sqrt(ss / (k - 1.0) / k);
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3);
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("zero variance in a series");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(c.n) - 2.0;
  const double rest = 1.0 - c.r * c.r;
  c.p = rest <= 0.0 ? 0.0 : two_sided_t(c.r * std::sqrt(dof / rest), dof);
  return c;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

OlsFit ols_one_predictor(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3);
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw StatsError("predictor has zero variance");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residual_ss += e * e;
  }
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double se = std::sqrt(fit.residual_ss / dof / sxx);
  if (se == 0.0)
    fit.slope_p = fit.slope == 0.0 ? 1.0 : 0.0;
  else
    fit.slope_p = two_sided_t(fit.slope / se, dof);
  return fit;
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw StatsError("bin width must be positive");
  std::vector<HistogramBin> bins;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw StatsError("histogram values must be finite and non-negative");
    const auto j = static_cast<std::size_t>(std::floor(v / bin_width));
    while (bins.size() <= j) {
      const double lower = static_cast<double>(bins.size()) * bin_width;
      bins.push_back({lower, lower + bin_width, 0});
    }
    ++bins[j].count;
  }
  return bins;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "bin_lower,bin_upper,count\n";
  for (const auto& b : bins) out << b.lower << ',' << b.upper << ',' << b.count << '\n';
  return out.str();
}

}  // namespace blocksens::stats
