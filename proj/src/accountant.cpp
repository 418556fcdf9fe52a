#include "privae/accountant.hpp"

#include <cmath>
#include <stdexcept>

#include "privae/dp.hpp"

namespace privae {

namespace {

void check_budget_args(double delta, double q, long steps, double c2_const) {
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("accountant: delta must lie in (0, 1)");
  }
  if (q <= 0.0 || q > 1.0) {
    throw std::invalid_argument("accountant: q must lie in (0, 1]");
  }
  if (steps < 1) {
    throw std::invalid_argument("accountant: step count must be >= 1");
  }
  if (c2_const <= 0.0) {
    throw std::invalid_argument("accountant: c2 constant must be positive");
  }
}

}  // namespace

double sigma_for_budget(double epsilon, double delta, double q, long steps,
                        double c2_const) {
  check_budget_args(delta, q, steps, c2_const);
  if (epsilon <= 0.0) {
    throw std::invalid_argument("accountant: epsilon must be positive");
  }
  return c2_const * q *
         std::sqrt(static_cast<double>(steps) * std::log(1.0 / delta)) /
         epsilon;
}

double epsilon_for_sigma(double sigma, double delta, double q, long steps,
                         double c2_const) {
  check_budget_args(delta, q, steps, c2_const);
  if (sigma <= 0.0) {
    throw std::invalid_argument("accountant: sigma must be positive");
  }
  return c2_const * q *
         std::sqrt(static_cast<double>(steps) * std::log(1.0 / delta)) /
         sigma;
}

std::pair<double, double> compose_sequential(
    std::span<const std::pair<double, double>> budgets) {
  if (budgets.empty()) {
    throw std::invalid_argument("accountant: nothing to compose");
  }
  double eps = 0.0, delta = 0.0;
  for (const auto& [e, d] : budgets) {
    eps += e;
    delta += d;
  }
  return {eps, delta};
}

TermwiseBudgetReport termwise_budget(double epsilon, double delta, double q,
                                     long steps, double c2_const,
                                     bool batch_branch_active) {
  TermwiseBudgetReport r;
  r.epsilon = epsilon;
  r.delta = delta;
  r.sigma_eps = sigma_for_budget(epsilon, delta, q, steps, c2_const);
  r.batch_branch_active = batch_branch_active;
  r.kappa_value = kappa(delta, batch_branch_active);
  r.sigma_prime = r.kappa_value * r.sigma_eps;
  if (batch_branch_active) {
    r.branch_epsilon = epsilon / 2.0;
    r.branch_delta = delta / 2.0;
    const std::pair<double, double> branches[] = {
        {r.branch_epsilon, r.branch_delta},
        {r.branch_epsilon, r.branch_delta}};
    std::tie(r.composed_epsilon, r.composed_delta) =
        compose_sequential(branches);
  } else {
    r.branch_epsilon = epsilon;
    r.branch_delta = delta;
    r.composed_epsilon = epsilon;
    r.composed_delta = delta;
  }
  return r;
}

double microagg_noise_scale(double c, double sigma_eps) {
  return c * sigma_eps;
}

double termwise_noise_scale(double c1, double c2, int batch_size, int groups,
                            double sigma_eps, double kappa_value) {
  if (batch_size < 1 || groups < 1) {
    throw std::invalid_argument("accountant: batch and group counts must be >= 1");
  }
  return (c1 / static_cast<double>(batch_size) +
          c2 / static_cast<double>(groups)) *
         kappa_value * sigma_eps;
}

}  // namespace privae
