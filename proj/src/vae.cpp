#include "privae/vae.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace privae {

namespace {

constexpr double kLogVarLo = -10.0;
constexpr double kLogVarHi = 10.0;

ad::Mat uniform_weight(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(cols));  // fan_in = cols
  ad::Mat w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-a, a);
  }
  return w;
}

void check_arch(const VaeArch& a) {
  if (a.input_dim < 1 || a.latent_dim < 1 || a.hidden1 < 1 || a.hidden2 < 1) {
    throw std::invalid_argument("vae: all architecture extents must be >= 1");
  }
}

double stable_softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

}  // namespace

ParamSet init_vae_params(const VaeArch& arch, Rng& rng) {
  check_arch(arch);
  ParamSet p;
  auto add_layer = [&](const std::string& w_name, const std::string& b_name,
                       int out, int in) {
    p.entries.push_back({w_name, uniform_weight(out, in, rng)});
    p.entries.push_back({b_name, ad::Mat::Zero(out, 1)});
  };
  add_layer("enc.W1", "enc.b1", arch.hidden1, arch.input_dim);
  add_layer("enc.W2", "enc.b2", arch.hidden2, arch.hidden1);
  add_layer("enc.Wmu", "enc.bmu", arch.latent_dim, arch.hidden2);
  add_layer("enc.Wlv", "enc.blv", arch.latent_dim, arch.hidden2);
  add_layer("dec.W1", "dec.b1", arch.hidden2, arch.latent_dim);
  add_layer("dec.W2", "dec.b2", arch.hidden1, arch.hidden2);
  add_layer("dec.Wout", "dec.bout", arch.input_dim, arch.hidden1);
  return p;
}

VaeArch arch_from_params(const ParamSet& params, Likelihood likelihood) {
  VaeArch a;
  a.hidden1 = static_cast<int>(params.at("enc.W1").rows());
  a.hidden2 = static_cast<int>(params.at("enc.W2").rows());
  a.latent_dim = static_cast<int>(params.at("enc.Wmu").rows());
  a.input_dim = static_cast<int>(params.at("enc.W1").cols());
  a.likelihood = likelihood;
  check_arch(a);
  if (params.at("dec.Wout").rows() != a.input_dim ||
      params.at("dec.W1").cols() != a.latent_dim) {
    throw std::invalid_argument(
        "vae: decoder shapes inconsistent with encoder shapes");
  }
  return a;
}

VaeVars VaeVars::from(std::span<const ad::Var> vars) {
  if (vars.size() != 14) {
    throw std::invalid_argument("vae: expected 14 parameter leaves, got " +
                                std::to_string(vars.size()));
  }
  VaeVars v;
  v.enc_w1 = vars[0];
  v.enc_b1 = vars[1];
  v.enc_w2 = vars[2];
  v.enc_b2 = vars[3];
  v.enc_wmu = vars[4];
  v.enc_bmu = vars[5];
  v.enc_wlv = vars[6];
  v.enc_blv = vars[7];
  v.dec_w1 = vars[8];
  v.dec_b1 = vars[9];
  v.dec_w2 = vars[10];
  v.dec_b2 = vars[11];
  v.dec_wout = vars[12];
  v.dec_bout = vars[13];
  return v;
}

EncodeGraph encode(ad::Tape&, const VaeVars& v, ad::Var x) {
  using namespace ad;
  Var h1 = tanh(add_colvec(matmul(v.enc_w1, x), v.enc_b1));
  Var h2 = tanh(add_colvec(matmul(v.enc_w2, h1), v.enc_b2));
  Var mu = add_colvec(matmul(v.enc_wmu, h2), v.enc_bmu);
  Var lv = clamp(add_colvec(matmul(v.enc_wlv, h2), v.enc_blv),
                 kLogVarLo, kLogVarHi);
  return {mu, lv};
}

ad::Var reparameterize(ad::Tape&, const EncodeGraph& enc, ad::Var eps) {
  using namespace ad;
  Var std = exp(enc.log_var * 0.5);
  return enc.mu + hadamard(std, eps);
}

ad::Var decode(ad::Tape&, const VaeVars& v, ad::Var z) {
  using namespace ad;
  Var h1 = tanh(add_colvec(matmul(v.dec_w1, z), v.dec_b1));
  Var h2 = tanh(add_colvec(matmul(v.dec_w2, h1), v.dec_b2));
  return add_colvec(matmul(v.dec_wout, h2), v.dec_bout);
}

ad::Var reconstruction_loss(ad::Tape&, Likelihood lik, ad::Var x,
                            ad::Var dec_out) {
  using namespace ad;
  switch (lik) {
    case Likelihood::Bernoulli:
      return sum(softplus(dec_out) - hadamard(x, dec_out));
    case Likelihood::Gaussian:
      return sum(square(x - dec_out)) * 0.5;
  }
  throw std::logic_error("vae: unknown likelihood");
}

ad::Var kld_term(ad::Tape& tape, const EncodeGraph& enc, ad::Var z,
                 const Prior& prior) {
  ad::Var log_q = ad::gaussian_log_density(z, enc.mu, enc.log_var);
  ad::Var log_p = prior.log_density_graph(tape, z);
  return log_q - log_p;
}

ad::Var phi_loss(ad::Tape& tape, const VaeVars& v, Likelihood lik,
                 const Prior& prior, double beta, const ad::Mat& x,
                 const ad::Mat& eps, double* rec_out, double* kld_out) {
  if (x.cols() != 1) {
    throw std::invalid_argument("phi_loss: x must be a single column");
  }
  const int draws = static_cast<int>(eps.cols());
  if (draws < 1) {
    throw std::invalid_argument("phi_loss: need at least one eps draw");
  }
  using namespace ad;
  Var xc = tape.constant(x);
  EncodeGraph enc = encode(tape, v, xc);

  Var z1;  // first draw, reused by the KL term
  Var rec;
  for (int l = 0; l < draws; ++l) {
    Var z = reparameterize(tape, enc, tape.constant(eps.col(l)));
    if (l == 0) z1 = z;
    Var term = reconstruction_loss(tape, lik, xc, decode(tape, v, z));
    rec = (l == 0) ? term : rec + term;
  }
  rec = rec * (1.0 / draws);
  if (rec_out) *rec_out = tape.value(rec)(0, 0);
  if (kld_out) *kld_out = 0.0;

  if (beta == 0.0) return rec;
  Var kld = kld_term(tape, enc, z1, prior);
  if (kld_out) *kld_out = tape.value(kld)(0, 0);
  return rec + kld * beta;
}

EncodeValues encode_values(const ParamSet& params, const ad::Mat& x) {
  const Eigen::VectorXd b1 = params.at("enc.b1");
  const Eigen::VectorXd b2 = params.at("enc.b2");
  const Eigen::VectorXd bmu = params.at("enc.bmu");
  const Eigen::VectorXd blv = params.at("enc.blv");
  if (x.rows() != params.at("enc.W1").cols()) {
    throw std::invalid_argument("encode: input has dimension " +
                                std::to_string(x.rows()) + ", expected " +
                                std::to_string(params.at("enc.W1").cols()));
  }
  ad::Mat h1 =
      (((params.at("enc.W1") * x).colwise() + b1).array().tanh()).matrix();
  ad::Mat h2 =
      (((params.at("enc.W2") * h1).colwise() + b2).array().tanh()).matrix();
  EncodeValues out;
  out.mu = (params.at("enc.Wmu") * h2).colwise() + bmu;
  out.log_var = (((params.at("enc.Wlv") * h2).colwise() + blv)
                     .array().min(kLogVarHi).max(kLogVarLo)).matrix();
  return out;
}

ad::Mat decode_values(const ParamSet& params, const ad::Mat& z) {
  const Eigen::VectorXd b1 = params.at("dec.b1");
  const Eigen::VectorXd b2 = params.at("dec.b2");
  const Eigen::VectorXd bout = params.at("dec.bout");
  if (z.rows() != params.at("dec.W1").cols()) {
    throw std::invalid_argument("decode: latent has dimension " +
                                std::to_string(z.rows()) + ", expected " +
                                std::to_string(params.at("dec.W1").cols()));
  }
  ad::Mat h1 =
      (((params.at("dec.W1") * z).colwise() + b1).array().tanh()).matrix();
  ad::Mat h2 =
      (((params.at("dec.W2") * h1).colwise() + b2).array().tanh()).matrix();
  return (params.at("dec.Wout") * h2).colwise() + bout;
}

Eigen::VectorXd reconstruction_loss_values(Likelihood lik, const ad::Mat& x,
                                           const ad::Mat& dec_out) {
  if (x.rows() != dec_out.rows() || x.cols() != dec_out.cols()) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch (" +
                                std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + " vs " +
                                std::to_string(dec_out.rows()) + "x" +
                                std::to_string(dec_out.cols()) + ")");
  }
  Eigen::VectorXd out(x.cols());
  switch (lik) {
    case Likelihood::Bernoulli:
      for (long c = 0; c < x.cols(); ++c) {
        double acc = 0.0;
        for (long r = 0; r < x.rows(); ++r) {
          acc += stable_softplus(dec_out(r, c)) - x(r, c) * dec_out(r, c);
        }
        out[c] = acc;
      }
      return out;
    case Likelihood::Gaussian:
      for (long c = 0; c < x.cols(); ++c) {
        out[c] = 0.5 * (x.col(c) - dec_out.col(c)).squaredNorm();
      }
      return out;
  }
  throw std::logic_error("vae: unknown likelihood");
}

ad::Mat generate(const ParamSet& params, Likelihood lik, const Prior& prior,
                 int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
  const long input_dim = params.at("dec.Wout").rows();
  if (n == 0) return ad::Mat(input_dim, 0);
  ad::Mat z = prior.sample_matrix(n, rng);
  ad::Mat out = decode_values(params, z);
  if (lik == Likelihood::Bernoulli) {
    out = (0.5 * (0.5 * out.array()).tanh() + 0.5).matrix();
  }
  return out;
}

}  // namespace privae
