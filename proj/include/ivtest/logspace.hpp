#ifndef IVTEST_LOGSPACE_HPP
#define IVTEST_LOGSPACE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace ivtest {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp accumulator. Tracks first and second moments of the
// weights so mean and standard error come out in one pass.
class LogMeanAccumulator {
public:
  void add(double log_w) {
    if (log_w == kNegInf) {
      ++n_;
      return;
    }
    if (log_w > max_) {
      if (n_ > 0 && max_ != kNegInf) {
        double scale = std::exp(max_ - log_w);
        s1_ *= scale;
        s2_ *= scale * scale;
      }
      max_ = log_w;
    }
    double a = std::exp(log_w - max_);
    s1_ += a;
    s2_ += a * a;
    ++n_;
  }

  std::uint64_t count() const { return n_; }

  // log of the sample mean of the weights
  double log_mean() const {
    if (n_ == 0 || s1_ == 0.0) return kNegInf;
    return max_ + std::log(s1_ / static_cast<double>(n_));
  }

  // delta-method standard error of log_mean
  double log_mean_stderr() const {
    if (n_ < 2 || s1_ == 0.0) return 0.0;
    double n = static_cast<double>(n_);
    double mean = s1_ / n;
    double var = s2_ / n - mean * mean;
    if (var <= 0.0) return 0.0;
    var *= n / (n - 1.0);
    return std::sqrt(var / n) / mean;
  }

  // (sum w)^2 / sum w^2
  double effective_sample_size() const {
    if (s2_ == 0.0) return 0.0;
    return s1_ * s1_ / s2_;
  }

private:
  double max_ = kNegInf;
  double s1_ = 0.0;
  double s2_ = 0.0;
  std::uint64_t n_ = 0;
};

inline double log_sum_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v)
    if (x > m) m = x;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// log Gamma(a+n)/Gamma(a)
inline double log_gamma_ratio(double a, double n) {
  return std::lgamma(a + n) - std::lgamma(a);
}

// log marginal likelihood of count vector under a symmetric Dirichlet(alpha)
// prior: Gamma(K*alpha)/Gamma(K*alpha+N) * prod_j Gamma(alpha+c_j)/Gamma(alpha)
inline double log_dirichlet_multinomial(const std::vector<std::uint64_t>& counts,
                                        double alpha) {
  double total = 0.0;
  double out = 0.0;
  for (std::uint64_t c : counts) {
    total += static_cast<double>(c);
    out += log_gamma_ratio(alpha, static_cast<double>(c));
  }
  double k_alpha = alpha * static_cast<double>(counts.size());
  out -= log_gamma_ratio(k_alpha, total);
  return out;
}

}  // namespace ivtest

#endif
