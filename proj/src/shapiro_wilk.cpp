// Shapiro-Wilk W test for normality, following Royston's AS R94 remark on AS 181.
// The coefficient approximation and the normalizing transformation of W are the
// published polynomial fits; only the normal quantile and tail come from Boost.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "pipegrade/screening.hpp"

namespace pipegrade {

namespace {

// Polynomial fits from AS R94. Coefficients are in ascending order of power.
constexpr std::array<double, 6> kC1 = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
constexpr std::array<double, 6> kC2 = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
constexpr std::array<double, 4> kC3 = {0.5440, -0.39978, 0.025054, -6.714e-4};
constexpr std::array<double, 4> kC4 = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr std::array<double, 4> kC5 = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr std::array<double, 3> kC6 = {-0.4803, -0.082676, 0.0030302};
constexpr std::array<double, 2> kGamma = {-2.273, 0.459};
constexpr double kSmallP = 1e-19;

template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
  double acc = 0;
  for (std::size_t i = N; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

const boost::math::normal_distribution<double>& std_normal() {
  static const boost::math::normal_distribution<double> kNormal(0.0, 1.0);
  return kNormal;
}

void check_size(std::size_t n) {
  if (n < kMinSwSample || n > kMaxSwSample) {
    throw StatsError("unsupported sample size " + std::to_string(n) + " for Shapiro-Wilk (3 <= n <= 5000)");
  }
}

}  // namespace

std::vector<double> sw_coefficients(std::size_t n) {
  check_size(n);
  const std::size_t half = n / 2;
  // upper[i] pairs with the (i+1)-th largest order statistic.
  std::vector<double> upper(half);

  if (n == 3) {
    upper[0] = std::numbers::sqrt2 / 2;
  } else {
    const double an = static_cast<double>(n);
    std::vector<double> m(half);
    double summ2 = 0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = quantile(std_normal(), (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(kC1, rsn) - m[0] / ssumm2;

    std::size_t first_scaled;
    double fac;
    if (n > 5) {
      const double a2 = -m[1] / ssumm2 + poly(kC2, rsn);
      fac = std::sqrt((summ2 - 2 * m[0] * m[0] - 2 * m[1] * m[1]) / (1 - 2 * a1 * a1 - 2 * a2 * a2));
      upper[0] = a1;
      upper[1] = a2;
      first_scaled = 2;
    } else {
      fac = std::sqrt((summ2 - 2 * m[0] * m[0]) / (1 - 2 * a1 * a1));
      upper[0] = a1;
      first_scaled = 1;
    }
    for (std::size_t i = first_scaled; i < half; ++i) upper[i] = -m[i] / fac;
  }

  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    a[n - 1 - i] = upper[i];
    a[i] = -upper[i];
  }
  return a;
}

namespace {

// p-value from 1 - W, which callers can usually compute more accurately than W.
double p_from_complement(double w1, std::size_t n) {
  const double w = 1.0 - w1;
  if (n == 3) {
    // Exact for n = 3.
    const double p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(std::clamp(w, 0.0, 1.0))) - std::numbers::pi / 3);
    return std::clamp(p, 0.0, 1.0);
  }
  if (w1 == 0.0) return 1.0;

  const double an = static_cast<double>(n);
  double y = std::log(w1);
  double mean;
  double sd;
  if (n <= 11) {
    const double gamma = poly(kGamma, an);
    if (y >= gamma) return kSmallP;
    y = -std::log(gamma - y);
    mean = poly(kC3, an);
    sd = std::exp(poly(kC4, an));
  } else {
    const double ln = std::log(an);
    mean = poly(kC5, ln);
    sd = std::exp(poly(kC6, ln));
  }
  return cdf(complement(std_normal(), (y - mean) / sd));
}

}  // namespace

double sw_p_value(double w, std::size_t n) {
  check_size(n);
  return p_from_complement(std::clamp(1.0 - w, 0.0, 1.0), n);
}

SwStatistic shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  check_size(n);
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw StatsError("Shapiro-Wilk sample contains a non-finite value");
  }
  std::sort(x.begin(), x.end());

  SwStatistic out;
  out.n = n;
  if (x.front() == x.back()) {
    out.degenerate = true;
    out.w = std::numeric_limits<double>::quiet_NaN();
    out.p_value = 0.0;
    return out;
  }

  const std::vector<double> a = sw_coefficients(n);
  const double an = static_cast<double>(n);
  const double range = x.back() - x.front();
  // Shift by the minimum and scale by the range before accumulating.
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (x[i] - x.front()) / range;
  const double mean_z = std::accumulate(z.begin(), z.end(), 0.0) / an;
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / an;

  // W as the squared correlation between the ordered sample and the weights,
  // accumulating 1 - W directly so W near 1 keeps its precision.
  double ssa = 0;
  double ssx = 0;
  double sax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double dx = z[i] - mean_z;
    ssa += da * da;
    ssx += dx * dx;
    sax += da * dx;
  }
  if (ssx == 0.0) {
    out.degenerate = true;
    out.w = std::numeric_limits<double>::quiet_NaN();
    out.p_value = 0.0;
    return out;
  }
  const double root = std::sqrt(ssa * ssx);
  const double w1 = std::clamp((root - sax) * (root + sax) / (ssa * ssx), 0.0, 1.0);
  out.w = 1.0 - w1;
  out.p_value = p_from_complement(w1, n);
  return out;
}

}  // namespace pipegrade
