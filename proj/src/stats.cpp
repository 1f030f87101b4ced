#include "radt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace radt {

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(values.size()));
  }
  return out;
}

double pooled_se(const MeanSe& a, const MeanSe& b) { return std::sqrt(a.se * a.se + b.se * b.se); }

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                               double min_expected) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  ChiSquareResult out;
  if (n <= 0.0) return out;
  // Mass on an impossible outcome rejects outright, before pooling can hide it.
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0.0 && observed[i] > 0.0) {
      out.statistic = INFINITY;
      out.p_value = 0.0;
      return out;
    }
  }
  std::vector<double> obs_cells;
  std::vector<double> exp_cells;
  double obs_acc = 0.0;
  double exp_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    obs_acc += observed[i];
    exp_acc += n * probs[i];
    if (exp_acc >= min_expected) {
      obs_cells.push_back(obs_acc);
      exp_cells.push_back(exp_acc);
      obs_acc = 0.0;
      exp_acc = 0.0;
    }
  }
  if (obs_acc > 0.0 || exp_acc > 0.0) {
    if (exp_cells.empty()) {
      obs_cells.push_back(obs_acc);
      exp_cells.push_back(exp_acc);
    } else {
      obs_cells.back() += obs_acc;
      exp_cells.back() += exp_acc;
    }
  }
  if (exp_cells.size() < 2) {
    // A single pooled cell carries no information unless mass landed where
    // none was expected.
    if (!exp_cells.empty() && exp_cells[0] <= 0.0 && obs_cells[0] > 0.0) out.p_value = 0.0;
    return out;
  }
  for (std::size_t i = 0; i < obs_cells.size(); ++i) {
    if (exp_cells[i] <= 0.0) {
      if (obs_cells[i] > 0.0) {
        out.statistic = INFINITY;
        out.p_value = 0.0;
        out.dof = static_cast<int>(obs_cells.size()) - 1;
        return out;
      }
      continue;
    }
    const double d = obs_cells[i] - exp_cells[i];
    out.statistic += d * d / exp_cells[i];
  }
  out.dof = static_cast<int>(obs_cells.size()) - 1;
  boost::math::chi_squared_distribution<double> dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double normal_upper_tail(double z) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), z));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace radt
