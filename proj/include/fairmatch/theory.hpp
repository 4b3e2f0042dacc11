#pragma once

#include <map>
#include <string>
#include <vector>

namespace fairmatch {

enum class BoundKind { kExact, kLowerBound, kUpperBound };

struct BoundReport {
  std::string name;
  std::map<std::string, double> params;
  double value = 0.0;
  BoundKind kind = BoundKind::kExact;
  // True when the formula drops vanishing terms and is only meaningful for
  // large parameters.
  bool asymptotic = false;

  std::string to_csv_row() const;
};

// Poisson helpers, evaluated in log space so they stay finite for rates up
// to ~1e4.
double poisson_pmf(double mu, long k);
double poisson_cdf(double mu, long k);  // Pr[Pois(mu) <= k]

// E[min(Pois(mu), b)], computed exactly as b - sum_{k<b} (b-k) Pr[Pois = k]
// (a finite sum, so no tail truncation error at all).
double truncated_poisson_mean(double mu, long b);
// Same with a real cap c: E[min(Pois(mu), c)].
double truncated_poisson_mean_real(double mu, double c);

// g(b,s) = max(s,1) * E[min(Pois(b/s), b)] / b, for integer b >= 1, s > 0.
// The long-run competitiveness floor of the homogeneous-LP sampler.
double g_bound(long b, double s);

// h(lambda,s) = E[min(Pois(lambda), lambda*s)] / (lambda * min(s,1)).
// Satisfies g(b,s) = h(b/s, s) and h(lambda,s) = g(lambda*s, s) whenever the
// induced capacity is integral.
double h_bound(double lambda, double s);

// The applicable analytic lower bound on g(b,s):
//   s < 1: 1 - exp(-(b/2s)(1-s)^2)
//   s = 1: 1 - 1/sqrt(2 pi (b-1))   (requires b > 1)
//   s > 1: 1 - exp(-(b/2)(1-1/s)^2), the non-asymptotic form of the upper
//          tail bound, so the invariant g >= bound holds at all finite b,s.
BoundReport g_tail_bound(long b, double s);

// 1 - e^{-b} b^b / b!: the grouped sampler's competitiveness floor in the
// minimum capacity, and the pooling policy's floor in the minimum rate.
double nadap_bound(long b);

// Long-run fairness of single-agent FCFS: E[min(Pois(Lambda), b)] / Lambda.
double fcfs_fair_a(long b, double lambda);

// f(b,lambda) = Pr[Pois<=b] / (Pr[Pois<=b] + sum_{k>b} Pr[Pois=k] b/k):
// short-run competitiveness of FCFS on a single agent; >= f(1,1) ~ 0.863
// for integer b >= 1 and lambda <= 1.
double fcfs_fair_b_ratio(long b, double lambda);

// Upper bound on online short-run fairness for the all-rare-types family:
// integrates dR/dt = -lambda R + lambda min(R, 1 - R + e^{-lambda t}),
// R(0) = 1, with classic RK4 over [0,1] (both min branches evaluated at
// every stage point). Requires step <= 1e-4. Returns R_lambda(1).
double ode_fair_b_upper_bound(double lambda, double step);

// Analytic bounds for the probabilistic-rejection policy on a single
// agent with total rate Lambda > 1 and capacity b. kappa = b/Lambda.
//   kappa > 1 : competitiveness >= 1 - exp(-Lambda (kappa-1)^2 / (2 kappa))
//   kappa <= 1: competitiveness >= 1 - sqrt(ln Lambda / Lambda), asymptotic,
//               plus the offline upper bound kappa (1 + 1/Lambda) when
//               kappa < 1.
std::vector<BoundReport> prob_reject_bounds(long b, double lambda);

}  // namespace fairmatch
