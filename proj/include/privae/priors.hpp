#pragma once

#include <Eigen/Dense>
#include <vector>

#include "privae/autodiff.hpp"
#include "privae/rng.hpp"

namespace privae {

// Prior over latent codes p(z). Three variants:
//   StandardNormal  z_d ~ N(0, 1)
//   SpikeSlab       z_d ~ (1-gamma) N(0, 1) + gamma N(0, sigma0_sq)
//   GaussMixture    z ~ sum_k pi_k prod_d N(z_d | mu_kd, std_kd^2)
struct Prior {
  enum class Kind { StandardNormal, SpikeSlab, GaussMixture };

  Kind kind = Kind::StandardNormal;
  int dim = 0;

  // spike-and-slab
  double gamma = 0.0;      // weight of the narrow "off" component
  double sigma0_sq = 0.0;  // variance of the narrow component

  // mixture: one column per component
  ad::Mat means;               // D x K
  ad::Mat stds;                // D x K
  Eigen::VectorXd weights;     // K

  static Prior standard_normal(int dim);
  static Prior spike_slab(int dim, double gamma, double sigma0_sq);
  static Prior gauss_mixture(ad::Mat means, ad::Mat stds,
                             Eigen::VectorXd weights);

  // exact log density; mixture sums go through log-sum-exp
  double log_density(const Eigen::VectorXd& z) const;

  // same density as a differentiable graph node (z is a Dx1 var)
  ad::Var log_density_graph(ad::Tape& tape, ad::Var z) const;

  Eigen::VectorXd sample(Rng& rng) const;
  ad::Mat sample_matrix(int n, Rng& rng) const;  // D x n draws

  void validate() const;
};

}  // namespace privae
