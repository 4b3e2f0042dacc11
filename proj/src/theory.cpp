#include "fairmatch/theory.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fairmatch {

namespace {

double log_poisson_pmf(double mu, long k) {
  return -mu + static_cast<double>(k) * std::log(mu) - std::lgamma(static_cast<double>(k) + 1.0);
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

double poisson_pmf(double mu, long k) {
  if (k < 0) return 0.0;
  if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(log_poisson_pmf(mu, k));
}

double poisson_cdf(double mu, long k) {
  if (k < 0) return 0.0;
  if (mu == 0.0) return 1.0;
  // Stable recurrence P(i) = P(i-1) * mu / i, restarted in log space when the
  // running term would underflow (mu large, i far below the mode).
  double sum = 0.0;
  for (long i = 0; i <= k; ++i) {
    sum += poisson_pmf(mu, i);
  }
  return std::min(sum, 1.0);
}

double truncated_poisson_mean(double mu, long b) {
  if (b < 0) throw std::invalid_argument("truncated_poisson_mean: b must be >= 0");
  if (mu < 0.0 || !std::isfinite(mu)) {
    throw std::invalid_argument("truncated_poisson_mean: mu must be finite and >= 0");
  }
  // E[min(X,b)] = b - sum_{k<b} (b-k) Pr[X=k]; the sum is finite, so this is
  // exact up to rounding even for mu up to ~1e4.
  double deficit = 0.0;
  for (long k = 0; k < b; ++k) {
    deficit += static_cast<double>(b - k) * poisson_pmf(mu, k);
  }
  return static_cast<double>(b) - deficit;
}

double truncated_poisson_mean_real(double mu, double c) {
  if (c < 0.0) throw std::invalid_argument("truncated_poisson_mean_real: cap must be >= 0");
  const long top = static_cast<long>(std::ceil(c));
  double deficit = 0.0;
  for (long k = 0; k < top; ++k) {
    deficit += (c - static_cast<double>(k)) * poisson_pmf(mu, k);
  }
  return c - deficit;
}

double g_bound(long b, double s) {
  if (b < 1) throw std::invalid_argument("g: b must be a positive integer");
  if (!(s > 0.0)) throw std::invalid_argument("g: s must be positive");
  return std::max(s, 1.0) * truncated_poisson_mean(static_cast<double>(b) / s, b) /
         static_cast<double>(b);
}

double h_bound(double lambda, double s) {
  if (!(lambda > 0.0) || !(s > 0.0)) throw std::invalid_argument("h: lambda, s must be positive");
  return truncated_poisson_mean_real(lambda, lambda * s) / (lambda * std::min(s, 1.0));
}

BoundReport g_tail_bound(long b, double s) {
  if (b < 1 || !(s > 0.0)) throw std::invalid_argument("g_tail_bound: need b >= 1, s > 0");
  BoundReport report;
  report.kind = BoundKind::kLowerBound;
  report.params = {{"b", static_cast<double>(b)}, {"s", static_cast<double>(s)}};
  const double bd = static_cast<double>(b);
  if (s < 1.0) {
    report.name = "g_tail_low_s";
    report.value = 1.0 - std::exp(-(bd / (2.0 * s)) * (1.0 - s) * (1.0 - s));
  } else if (s == 1.0) {
    if (b <= 1) throw std::invalid_argument("g_tail_bound: s = 1 requires b > 1");
    report.name = "g_tail_balanced";
    report.value = 1.0 - 1.0 / std::sqrt(2.0 * M_PI * (bd - 1.0));
  } else {
    report.name = "g_tail_high_s";
    report.value = 1.0 - std::exp(-(bd / 2.0) * (1.0 - 1.0 / s) * (1.0 - 1.0 / s));
  }
  return report;
}

double nadap_bound(long b) {
  if (b < 1) throw std::invalid_argument("nadap_bound: b must be a positive integer");
  const double bd = static_cast<double>(b);
  return 1.0 - std::exp(-bd + bd * std::log(bd) - std::lgamma(bd + 1.0));
}

double fcfs_fair_a(long b, double lambda) {
  if (b < 1 || !(lambda > 0.0)) throw std::invalid_argument("fcfs_fair_a: need b >= 1, Lambda > 0");
  return truncated_poisson_mean(lambda, b) / lambda;
}

// Defined in metrics.cpp.
double offline_fair_b_single_agent(int b, double lambda);

double fcfs_fair_b_ratio(long b, double lambda) {
  if (b < 1 || !(lambda > 0.0)) {
    throw std::invalid_argument("fcfs_fair_b_ratio: need b >= 1, Lambda > 0");
  }
  return poisson_cdf(lambda, b) / offline_fair_b_single_agent(static_cast<int>(b), lambda);
}

double ode_fair_b_upper_bound(double lambda, double step) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ode_fair_b_upper_bound: lambda must be > 0");
  if (!(step > 0.0) || step > 1e-4) {
    throw std::invalid_argument("ode_fair_b_upper_bound: step must be in (0, 1e-4]");
  }
  const auto slope = [lambda](double t, double r) {
    return -lambda * r + lambda * std::min(r, 1.0 - r + std::exp(-lambda * t));
  };
  const long n = static_cast<long>(std::ceil(1.0 / step));
  const double h = 1.0 / static_cast<double>(n);
  double r = 1.0;
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * h;
    const double k1 = slope(t, r);
    const double k2 = slope(t + 0.5 * h, r + 0.5 * h * k1);
    const double k3 = slope(t + 0.5 * h, r + 0.5 * h * k2);
    const double k4 = slope(t + h, r + h * k3);
    r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return r;
}

std::vector<BoundReport> prob_reject_bounds(long b, double lambda) {
  if (b < 1 || !(lambda > 1.0)) {
    throw std::invalid_argument("prob_reject_bounds: need b >= 1, Lambda > 1");
  }
  const double kappa = static_cast<double>(b) / lambda;
  std::vector<BoundReport> reports;
  BoundReport competitiveness;
  competitiveness.kind = BoundKind::kLowerBound;
  competitiveness.params = {
      {"b", static_cast<double>(b)}, {"lambda", lambda}, {"kappa", kappa}};
  if (kappa > 1.0) {
    competitiveness.name = "prob_reject_competitiveness_surplus";
    competitiveness.value = 1.0 - std::exp(-lambda * (kappa - 1.0) * (kappa - 1.0) / (2.0 * kappa));
    competitiveness.asymptotic = false;
  } else {
    competitiveness.name = "prob_reject_competitiveness_scarce";
    competitiveness.value = 1.0 - std::sqrt(std::log(lambda) / lambda);
    competitiveness.asymptotic = true;  // the 1+o(1) factor is dropped
  }
  reports.push_back(competitiveness);
  if (kappa < 1.0) {
    BoundReport offline;
    offline.name = "offline_fair_b_upper";
    offline.kind = BoundKind::kUpperBound;
    offline.params = competitiveness.params;
    offline.value = kappa * (1.0 + 1.0 / lambda);
    offline.asymptotic = true;  // o(1/lambda) term dropped
    reports.push_back(offline);
  }
  return reports;
}

std::string BoundReport::to_csv_row() const {
  std::string params_text;
  for (const auto& [key, value] : params) {
    if (!params_text.empty()) params_text += ';';
    params_text += key + "=" + format_double(value);
  }
  const char* kind_text = kind == BoundKind::kExact ? "exact"
                          : kind == BoundKind::kLowerBound ? "lower_bound"
                                                           : "upper_bound";
  return name + "," + params_text + "," + format_double(value) + "," + kind_text + "," +
         (asymptotic ? "true" : "false");
}

}  // namespace fairmatch
