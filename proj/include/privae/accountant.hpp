#pragma once

#include <span>
#include <utility>

namespace privae {

// Closed-form noise/budget relation
//   sigma_eps = c2_const * q * sqrt(T * ln(1/delta)) / epsilon
// with q the sampling probability B/N and T the step count. c2_const is the
// bookkeeping constant in front of the bound; it defaults to 1 everywhere and
// is exposed in the config so reports stay honest.
double sigma_for_budget(double epsilon, double delta, double q, long steps,
                        double c2_const);

// Inverse of sigma_for_budget in epsilon; round-trips to 1e-12 relative.
double epsilon_for_sigma(double sigma, double delta, double q, long steps,
                         double c2_const);

// Sequential composition: component-wise sums of (epsilon_i, delta_i).
std::pair<double, double> compose_sequential(
    std::span<const std::pair<double, double>> budgets);

// Budget split for the two-branch scheme: each branch runs at
// (epsilon/2, delta/2), which costs sigma_prime = kappa(delta) * sigma_eps.
struct TermwiseBudgetReport {
  double epsilon = 0.0;
  double delta = 0.0;
  double sigma_eps = 0.0;    // noise scale for the full (epsilon, delta)
  double kappa_value = 1.0;
  double sigma_prime = 0.0;  // kappa * sigma_eps
  bool batch_branch_active = false;
  double branch_epsilon = 0.0;  // per-branch budget (epsilon/2 when active)
  double branch_delta = 0.0;
  double composed_epsilon = 0.0;  // sequential composition over branches
  double composed_delta = 0.0;
};

TermwiseBudgetReport termwise_budget(double epsilon, double delta, double q,
                                     long steps, double c2_const,
                                     bool batch_branch_active);

// Effective per-step noise std after averaging (the Table-of-schemes values
// the runner logs): c*sigma for micro/batch aggregation, and
// (c1/B + c2/b)*kappa*sigma for the term-wise scheme.
double microagg_noise_scale(double c, double sigma_eps);
double termwise_noise_scale(double c1, double c2, int batch_size, int groups,
                            double sigma_eps, double kappa_value);

}  // namespace privae
