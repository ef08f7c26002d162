#include "dirac/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "dirac/disorder.hpp"

namespace dirac {

double normalizer(double alpha, std::int64_t N) {
  CompensatedSum s;
  // smallest terms first
  for (std::int64_t j = N; j >= 1; --j) s.add(std::pow(static_cast<double>(j), -2 * alpha));
  return s.value();
}

MeanStderr mean_stderr(std::span<const double> x) {
  MeanStderr r;
  const auto n = x.size();
  if (n == 0) return r;
  CompensatedSum s;
  for (double v : x) s.add(v);
  r.mean = s.value() / n;
  if (n > 1) {
    CompensatedSum q;
    for (double v : x) q.add((v - r.mean) * (v - r.mean));
    r.stderr_ = std::sqrt(q.value() / (n - 1) / n);
  }
  return r;
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double q) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  double pos = q * (x.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, x.size() - 1);
  double f = pos - lo;
  return x[lo] * (1 - f) + x[hi] * f;
}

double median_of_means(std::span<const double> x, int groups) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  groups = std::max(1, std::min<int>(groups, static_cast<int>(x.size())));
  std::vector<double> means;
  const std::size_t n = x.size();
  for (int g = 0; g < groups; ++g) {
    std::size_t a = n * g / groups, b = n * (g + 1) / groups;
    CompensatedSum s;
    for (std::size_t i = a; i < b; ++i) s.add(x[i]);
    means.push_back(s.value() / (b - a));
  }
  return median(std::move(means));
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  LinearFit f;
  const std::size_t n = x.size();
  f.points = n;
  if (n < 2) return f;
  auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += wt(i);
    sx += wt(i) * x[i];
    sy += wt(i) * y[i];
  }
  double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += wt(i) * dx * dx;
    sxy += wt(i) * dx * dy;
    syy += wt(i) * dy * dy;
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    sse += wt(i) * r * r;
  }
  f.r2 = syy > 0 ? 1 - sse / syy : 1.0;
  if (n > 2) {
    // weights taken as relative; residual variance rescales them
    double sigma2 = sse / (n - 2);
    f.slope_stderr = std::sqrt(sigma2 / sxx);
  }
  return f;
}

Interval bootstrap_ci(std::size_t replicas, int resamples, std::uint64_t seed,
                      const std::function<double(const std::vector<std::size_t>&)>& stat, double level) {
  std::vector<double> vals;
  vals.reserve(resamples);
  std::vector<std::size_t> idx(replicas);
  for (int b = 0; b < resamples; ++b) {
    rng::Stream st(rng::key(seed, 0xb007ULL, static_cast<std::uint64_t>(b)));
    for (auto& i : idx) i = static_cast<std::size_t>(st.next_u64() % replicas);
    double v = stat(idx);
    if (std::isfinite(v)) vals.push_back(v);
  }
  if (vals.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double a = (1 - level) / 2;
  return {quantile(vals, a), quantile(vals, 1 - a)};
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(threads, static_cast<int>(count));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double log_mean_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(x.begin(), x.end());
  CompensatedSum s;
  for (double v : x) s.add(std::exp(v - mx));
  return mx + std::log(s.value() / x.size());
}

}  // namespace dirac
