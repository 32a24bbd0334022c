#include "rqo/kernel_density.hpp"

#include <cmath>
#include <stdexcept>

#include "rqo/util.hpp"

namespace rqo {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kDensityFloor = 1e-300;
constexpr double kBandwidthFloor = 1e-3;
}  // namespace

KernelDensity::KernelDensity(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), bandwidth_(bandwidth) {
  if (centers_.empty()) throw std::invalid_argument("kernel density needs centers");
  if (!(bandwidth_ > 0.0)) throw std::invalid_argument("bandwidth must be positive");
}

double KernelDensity::pdf(double x) const {
  std::vector<double> terms(centers_.size());
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    double z = (x - centers_[j]) / bandwidth_;
    terms[j] = std::exp(-0.5 * z * z);
  }
  double scale = kInvSqrt2Pi / (bandwidth_ * static_cast<double>(centers_.size()));
  return scale * pairwise_sum(terms);
}

double KernelDensity::log_pdf(double x) const {
  double p = pdf(x);
  return std::log(p > kDensityFloor ? p : kDensityFloor);
}

double KernelDensity::sample(Rng& rng) const {
  double c = centers_[rng.uniform_index(centers_.size())];
  return c + bandwidth_ * rng.normal();
}

double KernelDensity::mean_exp_neg() const {
  std::vector<double> terms(centers_.size());
  double half_h2 = 0.5 * bandwidth_ * bandwidth_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    terms[j] = std::exp(-centers_[j] + half_h2);
  }
  return pairwise_sum(terms) / static_cast<double>(centers_.size());
}

KernelDensity fit_kernel_density(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("fitting kernel density on no data");
  std::size_t n = values.size();
  double sd = 0.0;
  if (n > 1) {
    double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    sd = std::sqrt(acc / static_cast<double>(n - 1));
  }
  double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  double h = 0.9 * std::min(sd, iqr / 1.34) *
             std::pow(static_cast<double>(n), -0.2);
  if (!(h > kBandwidthFloor)) h = kBandwidthFloor;
  return KernelDensity(values, h);
}

}  // namespace rqo
