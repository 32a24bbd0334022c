#pragma once

#include <vector>

#include "rqo/rng.hpp"

namespace rqo {

// One-dimensional Gaussian-kernel density over log-relative errors.
class KernelDensity {
 public:
  KernelDensity() = default;
  KernelDensity(std::vector<double> centers, double bandwidth);

  double pdf(double x) const;
  // ln(pdf), with the density floored at 1e-300 so the value stays finite.
  double log_pdf(double x) const;

  // Uniformly chosen center plus Gaussian noise with sd = bandwidth.
  double sample(Rng& rng) const;

  const std::vector<double>& centers() const { return centers_; }
  double bandwidth() const { return bandwidth_; }

  // Mean of exp(-X) under the mixture: (1/n) sum_j exp(-c_j + h^2/2).
  double mean_exp_neg() const;

 private:
  std::vector<double> centers_;
  double bandwidth_ = 1.0;
};

// Silverman bandwidth fit: h = 0.9 * min(sd, IQR/1.34) * n^(-1/5), floored at
// 1e-3. Centers are the sample values themselves.
KernelDensity fit_kernel_density(const std::vector<double>& values);

}  // namespace rqo
