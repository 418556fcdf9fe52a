#include "privae/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace privae::ad {

namespace {

std::string shape_of(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                shape_of(a) + " vs " + shape_of(b) + ")");
  }
}

Tape& same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument(std::string(op) +
                                ": operands from different tapes");
  }
  return *a.tape;
}

constexpr double kLogFloor = 1e-12;

}  // namespace

// --- Tape -------------------------------------------------------------------

int Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("tape: stale or foreign var handle");
  }
  return v.id;
}

Var Tape::constant(Mat value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::leaf(Mat value) {
  return push(std::move(value), true, nullptr);
}

Var Tape::push(Mat value, bool requires_grad, BackFn back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Mat Tape::adjoint(Var v) const {
  const Node& n = nodes_[check(v)];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& delta) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

void Tape::backward(Var loss) {
  const int start = check(loss);
  const Node& out = nodes_[start];
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_of(out.value));
  }
  accumulate(start, Mat::Ones(1, 1));
  for (int i = start; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.back) continue;
    n.back(n.grad, *this);
  }
}

// --- op helpers ---------------------------------------------------------

namespace {

// unary elementwise op: value = f(a), backward up -> up .* dfda
template <typename FwdFn, typename GradFn>
Var unary_elementwise(const char* /*op*/, Var a, FwdFn fwd, GradFn dfda) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  Mat v = fwd(av);
  Mat g = t.requires_grad(a) ? dfda(av, v) : Mat();
  const int aid = a.id;
  return t.push(std::move(v), t.requires_grad(a),
                [aid, g = std::move(g)](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up.cwiseProduct(g));
                });
}

}  // namespace

// --- arithmetic -----------------------------------------------------------

Var operator+(Var a, Var b) {
  Tape& t = same_tape("add", a, b);
  require_same_shape("add", t.value(a), t.value(b));
  const int aid = a.id, bid = b.id;
  return t.push(t.value(a) + t.value(b),
                t.requires_grad(a) || t.requires_grad(b),
                [aid, bid](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up);
                  tp.accumulate(bid, up);
                });
}

Var operator-(Var a, Var b) {
  Tape& t = same_tape("sub", a, b);
  require_same_shape("sub", t.value(a), t.value(b));
  const int aid = a.id, bid = b.id;
  return t.push(t.value(a) - t.value(b),
                t.requires_grad(a) || t.requires_grad(b),
                [aid, bid](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up);
                  tp.accumulate(bid, -up);
                });
}

Var operator-(Var a) {
  Tape& t = *a.tape;
  const int aid = a.id;
  return t.push(-t.value(a), t.requires_grad(a),
                [aid](const Mat& up, Tape& tp) { tp.accumulate(aid, -up); });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape("hadamard", a, b);
  require_same_shape("hadamard", t.value(a), t.value(b));
  const int aid = a.id, bid = b.id;
  Mat av = t.value(a), bv = t.value(b);
  return t.push(av.cwiseProduct(bv), t.requires_grad(a) || t.requires_grad(b),
                [aid, bid, av, bv](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up.cwiseProduct(bv));
                  tp.accumulate(bid, up.cwiseProduct(av));
                });
}

Var operator*(Var a, double s) {
  Tape& t = *a.tape;
  const int aid = a.id;
  return t.push(t.value(a) * s, t.requires_grad(a),
                [aid, s](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up * s);
                });
}

Var operator+(Var a, double s) {
  Tape& t = *a.tape;
  const int aid = a.id;
  return t.push((t.value(a).array() + s).matrix(), t.requires_grad(a),
                [aid](const Mat& up, Tape& tp) { tp.accumulate(aid, up); });
}

Var reciprocal(Var a) {
  return unary_elementwise(
      "reciprocal", a, [](const Mat& x) -> Mat { return x.cwiseInverse(); },
      [](const Mat&, const Mat& y) -> Mat {
        return -y.cwiseProduct(y);
      });
}

Var square(Var a) {
  return unary_elementwise(
      "square", a, [](const Mat& x) -> Mat { return x.cwiseProduct(x); },
      [](const Mat& x, const Mat&) -> Mat { return 2.0 * x; });
}

Var exp(Var a) {
  return unary_elementwise(
      "exp", a, [](const Mat& x) -> Mat { return x.array().exp(); },
      [](const Mat&, const Mat& y) -> Mat { return y; });
}

Var log(Var a) {
  return unary_elementwise(
      "log", a,
      [](const Mat& x) -> Mat { return x.cwiseMax(kLogFloor).array().log(); },
      [](const Mat& x, const Mat&) -> Mat {
        return x.cwiseMax(kLogFloor).cwiseInverse();
      });
}

Var tanh(Var a) {
  return unary_elementwise(
      "tanh", a, [](const Mat& x) -> Mat { return x.array().tanh(); },
      [](const Mat&, const Mat& y) -> Mat {
        return (1.0 - y.array().square()).matrix();
      });
}

Var sigmoid(Var a) {
  return unary_elementwise(
      "sigmoid", a,
      [](const Mat& x) -> Mat {
        return (0.5 * (0.5 * x.array()).tanh() + 0.5).matrix();
      },
      [](const Mat&, const Mat& y) -> Mat {
        return (y.array() * (1.0 - y.array())).matrix();
      });
}

Var softplus(Var a) {
  return unary_elementwise(
      "softplus", a,
      [](const Mat& x) -> Mat {
        // max(x,0) + log1p(exp(-|x|)), stable for large |x|
        return (x.cwiseMax(0.0).array() +
                (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Mat& x, const Mat&) -> Mat {
        return (0.5 * (0.5 * x.array()).tanh() + 0.5).matrix();
      });
}

Var relu(Var a) {
  return unary_elementwise(
      "relu", a, [](const Mat& x) -> Mat { return x.cwiseMax(0.0); },
      [](const Mat& x, const Mat&) -> Mat {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var clamp(Var a, double lo, double hi) {
  return unary_elementwise(
      "clamp", a,
      [lo, hi](const Mat& x) -> Mat { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](const Mat& x, const Mat&) -> Mat {
        return ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
      });
}

// --- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape("matmul", a, b);
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("matmul: shape mismatch (" + shape_of(av) +
                                " vs " + shape_of(bv) + ")");
  }
  const int aid = a.id, bid = b.id;
  Mat ac = av, bc = bv;
  return t.push(av * bv, t.requires_grad(a) || t.requires_grad(b),
                [aid, bid, ac, bc](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up * bc.transpose());
                  tp.accumulate(bid, ac.transpose() * up);
                });
}

// --- reductions -----------------------------------------------------------

Var sum(Var a) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  Mat v(1, 1);
  v(0, 0) = av.sum();
  const int aid = a.id;
  const long r = av.rows(), c = av.cols();
  return t.push(std::move(v), t.requires_grad(a),
                [aid, r, c](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, Mat::Constant(r, c, up(0, 0)));
                });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.tape->value(a).size());
  return sum(a) * (1.0 / n);
}

Var colwise_sum(Var a) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const int aid = a.id;
  const long r = av.rows();
  return t.push(av.colwise().sum(), t.requires_grad(a),
                [aid, r](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up.replicate(r, 1));
                });
}

Var rowwise_sum(Var a) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const int aid = a.id;
  const long c = av.cols();
  return t.push(av.rowwise().sum(), t.requires_grad(a),
                [aid, c](const Mat& up, Tape& tp) {
                  tp.accumulate(aid, up.replicate(1, c));
                });
}

// --- structure ------------------------------------------------------------

Var concat_cols(std::span<const Var> vars) {
  if (vars.empty()) throw std::invalid_argument("concat_cols: empty input");
  Tape& t = *vars.front().tape;
  const long rows = t.value(vars.front()).rows();
  long cols = 0;
  bool rg = false;
  for (const Var v : vars) {
    if (v.tape != &t) {
      throw std::invalid_argument("concat_cols: operands from different tapes");
    }
    if (t.value(v).rows() != rows) {
      throw std::invalid_argument("concat_cols: row count mismatch");
    }
    cols += t.value(v).cols();
    rg = rg || t.requires_grad(v);
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, std::pair<long, long>>> spans;  // id, (off, n)
  long off = 0;
  for (const Var v : vars) {
    const long n = t.value(v).cols();
    out.middleCols(off, n) = t.value(v);
    spans.push_back({v.id, {off, n}});
    off += n;
  }
  return t.push(std::move(out), rg,
                [spans = std::move(spans)](const Mat& up, Tape& tp) {
                  for (const auto& [id, s] : spans) {
                    tp.accumulate(id, up.middleCols(s.first, s.second));
                  }
                });
}

Var concat_rows(std::span<const Var> vars) {
  if (vars.empty()) throw std::invalid_argument("concat_rows: empty input");
  Tape& t = *vars.front().tape;
  const long cols = t.value(vars.front()).cols();
  long rows = 0;
  bool rg = false;
  for (const Var v : vars) {
    if (v.tape != &t) {
      throw std::invalid_argument("concat_rows: operands from different tapes");
    }
    if (t.value(v).cols() != cols) {
      throw std::invalid_argument("concat_rows: column count mismatch");
    }
    rows += t.value(v).rows();
    rg = rg || t.requires_grad(v);
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, std::pair<long, long>>> spans;
  long off = 0;
  for (const Var v : vars) {
    const long n = t.value(v).rows();
    out.middleRows(off, n) = t.value(v);
    spans.push_back({v.id, {off, n}});
    off += n;
  }
  return t.push(std::move(out), rg,
                [spans = std::move(spans)](const Mat& up, Tape& tp) {
                  for (const auto& [id, s] : spans) {
                    tp.accumulate(id, up.middleRows(s.first, s.second));
                  }
                });
}

Var pairwise_diff(Var a, Var b) {
  Tape& t = same_tape("pairwise_diff", a, b);
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.rows() != bv.rows()) {
    throw std::invalid_argument("pairwise_diff: row count mismatch (" +
                                shape_of(av) + " vs " + shape_of(bv) + ")");
  }
  const long d = av.rows(), m = av.cols(), n = bv.cols();
  Mat out(d, m * n);
  for (long i = 0; i < m; ++i) {
    out.middleCols(i * n, n) = (-bv).colwise() + av.col(i);
  }
  const int aid = a.id, bid = b.id;
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                [aid, bid, m, n](const Mat& up, Tape& tp) {
                  Mat ga(up.rows(), m);
                  Mat gb = Mat::Zero(up.rows(), n);
                  for (long i = 0; i < m; ++i) {
                    ga.col(i) = up.middleCols(i * n, n).rowwise().sum();
                    gb -= up.middleCols(i * n, n);
                  }
                  tp.accumulate(aid, ga);
                  tp.accumulate(bid, gb);
                });
}

Var col(Var a, long j) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  if (j < 0 || j >= av.cols()) {
    throw std::invalid_argument("col: index " + std::to_string(j) +
                                " out of range for " + shape_of(av));
  }
  const int aid = a.id;
  const long r = av.rows(), c = av.cols();
  return t.push(av.col(j), t.requires_grad(a),
                [aid, j, r, c](const Mat& up, Tape& tp) {
                  Mat g = Mat::Zero(r, c);
                  g.col(j) = up;
                  tp.accumulate(aid, g);
                });
}

Var add_colvec(Var m, Var v) {
  Tape& t = same_tape("add_colvec", m, v);
  const Mat& mv = t.value(m);
  const Mat& vv = t.value(v);
  if (vv.cols() != 1 || vv.rows() != mv.rows()) {
    throw std::invalid_argument("add_colvec: shape mismatch (" + shape_of(mv) +
                                " vs " + shape_of(vv) + ")");
  }
  const int mid = m.id, vid = v.id;
  return t.push(mv.colwise() + vv.col(0),
                t.requires_grad(m) || t.requires_grad(v),
                [mid, vid](const Mat& up, Tape& tp) {
                  tp.accumulate(mid, up);
                  tp.accumulate(vid, up.rowwise().sum());
                });
}

Var mul_colvec(Var m, Var v) {
  Tape& t = same_tape("mul_colvec", m, v);
  const Mat& mv = t.value(m);
  const Mat& vv = t.value(v);
  if (vv.cols() != 1 || vv.rows() != mv.rows()) {
    throw std::invalid_argument("mul_colvec: shape mismatch (" + shape_of(mv) +
                                " vs " + shape_of(vv) + ")");
  }
  const int mid = m.id, vid = v.id;
  Mat mc = mv, vc = vv;
  return t.push((mv.array().colwise() * vv.col(0).array()).matrix(),
                t.requires_grad(m) || t.requires_grad(v),
                [mid, vid, mc, vc](const Mat& up, Tape& tp) {
                  tp.accumulate(
                      mid, (up.array().colwise() * vc.col(0).array()).matrix());
                  tp.accumulate(vid, up.cwiseProduct(mc).rowwise().sum());
                });
}

// --- composites -----------------------------------------------------------

Var gaussian_log_density(Var z, Var mu, Var log_var) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  Var diff = z - mu;
  Var prec = exp(-log_var);
  Var quad = hadamard(square(diff), prec);
  return sum(quad + log_var + kLog2Pi) * -0.5;
}

Var logsumexp2(Var a, Var b) {
  Tape& t = same_tape("logsumexp2", a, b);
  Var m = t.constant(t.value(a).cwiseMax(t.value(b)));
  return log(exp(a - m) + exp(b - m)) + m;
}

Var logsumexp_rows(Var m) {
  Tape& t = *m.tape;
  const Mat& mv = t.value(m);
  Mat shift = mv.colwise().maxCoeff();  // 1xM
  Var shift_full = t.constant(shift.replicate(mv.rows(), 1));
  Var e = exp(m - shift_full);
  return log(colwise_sum(e)) + t.constant(shift);
}

}  // namespace privae::ad
