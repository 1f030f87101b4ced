#pragma once

#include <span>
#include <vector>

namespace radt {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  double sd = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> values);

/// sqrt(se_a^2 + se_b^2)
double pooled_se(const MeanSe& a, const MeanSe& b);

double median(std::vector<double> values);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit of counts against probabilities. Adjacent cells
/// are pooled left to right until each pooled cell expects at least
/// `min_expected` observations.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                               double min_expected = 5.0);

/// Upper tail of the standard normal.
double normal_upper_tail(double z);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of y = slope * x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace radt
