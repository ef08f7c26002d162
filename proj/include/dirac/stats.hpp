#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dirac {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0, c_ = 0;
};

// s_N = sum_{j=1}^N j^{-2 alpha}
double normalizer(double alpha, std::int64_t N);

struct MeanStderr {
  double mean = 0;
  double stderr_ = 0;
};
MeanStderr mean_stderr(std::span<const double> x);
double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);
// Groups consecutive values into `groups` blocks and returns the median of block means.
double median_of_means(std::span<const double> x, int groups);

struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double slope_stderr = 0;
  double r2 = 0;
  std::size_t points = 0;
};
// Weighted least squares of y on x; weights empty means unweighted.
LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

struct Interval {
  double low = 0;
  double high = 0;
  bool contains(double v) const { return low <= v && v <= high; }
};

// Percentile bootstrap over replica indices: stat(indices) evaluated for `resamples` draws.
Interval bootstrap_ci(std::size_t replicas, int resamples, std::uint64_t seed,
                      const std::function<double(const std::vector<std::size_t>&)>& stat, double level = 0.95);

// Runs body(i) for i in [0, count) on `threads` workers; results must be written per index.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// log(mean(exp(x))) without overflow.
double log_mean_exp(std::span<const double> x);

}  // namespace dirac
