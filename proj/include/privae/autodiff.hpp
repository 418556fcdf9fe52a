#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace privae::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Dynamic reverse-mode tape over dense f64 matrices. A tape is built fresh
// for every forward evaluation and discarded after backward; nodes are
// appended in topological order so one reverse sweep suffices.
class Tape {
 public:
  using BackFn = std::function<void(const Mat& upstream, Tape&)>;

  // untracked value; backward never flows into it
  Var constant(Mat value);
  // tracked input (parameter); adjoint available after backward
  Var leaf(Mat value);

  Var push(Mat value, bool requires_grad, BackFn back);

  const Mat& value(Var v) const { return nodes_[check(v)].value; }
  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

  // adjoint of v after backward(); zero matrix if nothing flowed into it
  Mat adjoint(Var v) const;

  // accumulate into a node's adjoint (used by op backward closures)
  void accumulate(int id, const Mat& delta);

  // reverse sweep from a scalar (1x1) output; throws on non-scalar loss
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until touched
    bool requires_grad = false;
    BackFn back;
  };

  int check(Var v) const;

  std::vector<Node> nodes_;
};

// --- elementwise / arithmetic -------------------------------------------

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var hadamard(Var a, Var b);

Var operator*(Var a, double s);
inline Var operator*(double s, Var a) { return a * s; }
Var operator+(Var a, double s);
inline Var operator+(double s, Var a) { return a + s; }
inline Var operator-(Var a, double s) { return a + (-s); }
inline Var operator-(double s, Var a) { return (-a) + s; }

Var reciprocal(Var a);
Var square(Var a);
Var exp(Var a);
// log with the argument floored at 1e-12
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var relu(Var a);
Var clamp(Var a, double lo, double hi);

// --- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b);
// W*x + b
inline Var affine(Var w, Var x, Var b) { return matmul(w, x) + b; }

// --- reductions -----------------------------------------------------------

Var sum(Var a);   // -> 1x1
Var mean(Var a);  // -> 1x1
Var colwise_sum(Var a);  // RxC -> 1xC
Var rowwise_sum(Var a);  // RxC -> Rx1

// --- structure ------------------------------------------------------------

Var concat_cols(std::span<const Var> vars);
Var concat_rows(std::span<const Var> vars);

// All pairwise column differences: a is DxM, b is DxN; result is Dx(M*N)
// with column i*N + j equal to a.col(i) - b.col(j).
Var pairwise_diff(Var a, Var b);

// single column j of a as an Rx1 var
Var col(Var a, long j);

// column-broadcast: each column of m (RxC) combined with v (Rx1)
Var add_colvec(Var m, Var v);
Var mul_colvec(Var m, Var v);

// --- composites -----------------------------------------------------------

inline Var dot(Var a, Var b) { return sum(hadamard(a, b)); }

// sum over elements of log N(z_d | mu_d, exp(log_var_d)) -> 1x1
Var gaussian_log_density(Var z, Var mu, Var log_var);

// elementwise log(exp(a) + exp(b)) with a detached max shift
Var logsumexp2(Var a, Var b);

// per-column logsumexp over the rows of a KxM matrix -> 1xM
Var logsumexp_rows(Var m);

}  // namespace privae::ad
