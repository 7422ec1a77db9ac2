#ifndef SQA_TENSOR_HPP
#define SQA_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sqa/errors.hpp"

namespace sqa {

// A named, trainable parameter block. Values and gradients live here,
// outside any tape, so gradients accumulate across per-example graphs
// until the optimizer consumes them.
struct Param {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), value(r * c, 0.0), grad(r * c, 0.0) {}

  std::size_t size() const { return value.size(); }

  void init_uniform(std::mt19937_64& rng, double half_range) {
    std::uniform_real_distribution<double> dist(-half_range, half_range);
    for (double& v : value) v = dist(rng);
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  void sgd_step(double lr) {
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
  }
};

// Reverse-mode autodiff tape. Forward values are computed eagerly as ops are
// recorded; backward closures run in reverse recording order, which is a
// valid topological order because every op's inputs precede it.
class Tape {
 public:
  struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
  };

  void clear() { nodes_.clear(); }
  std::size_t node_count() const { return nodes_.size(); }

  std::size_t rows(Var v) const { return nodes_[v.id].rows; }
  std::size_t cols(Var v) const { return nodes_[v.id].cols; }
  std::size_t size(Var v) const { return nodes_[v.id].rows * nodes_[v.id].cols; }

  std::span<const double> value(Var v) const {
    const Node& n = nodes_[v.id];
    return {n.val, n.rows * n.cols};
  }
  std::span<const double> gradient(Var v) const {
    const Node& n = nodes_[v.id];
    return {n.grad, n.rows * n.cols};
  }

  // Leaf view of a parameter; gradients flow straight into param.grad.
  Var leaf(Param& p) {
    Node n;
    n.rows = p.rows;
    n.cols = p.cols;
    n.val = p.value.data();
    n.grad = p.grad.data();
    return push(std::move(n));
  }

  Var input(std::vector<double> values, std::size_t rows, std::size_t cols = 1) {
    if (values.size() != rows * cols) raise(ErrorCode::InvalidConfig, "input shape mismatch");
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.own_val = std::move(values);
    return push_owned(std::move(n));
  }

  // out = W x, W is (m x n), x is a length-n vector.
  Var matvec(Var w, Var x) {
    const Node& W = nodes_[w.id];
    const Node& X = nodes_[x.id];
    if (W.cols != X.rows * X.cols)
      raise(ErrorCode::InvalidConfig, "matvec shape mismatch");
    Node n;
    n.rows = W.rows;
    n.cols = 1;
    n.own_val.resize(W.rows);
    for (std::size_t r = 0; r < W.rows; ++r) {
      double acc = 0.0;
      const double* row = W.val + r * W.cols;
      for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * X.val[c];
      n.own_val[r] = acc;
    }
    n.backward = [this, w, x](const Node& out) {
      Node& W = nodes_[w.id];
      Node& X = nodes_[x.id];
      for (std::size_t r = 0; r < W.rows; ++r) {
        const double g = out.grad[r];
        if (g == 0.0) continue;
        double* wg = W.grad + r * W.cols;
        const double* wv = W.val + r * W.cols;
        for (std::size_t c = 0; c < W.cols; ++c) {
          wg[c] += g * X.val[c];
          X.grad[c] += g * wv[c];
        }
      }
    };
    return push_owned(std::move(n));
  }

  // out = A^T y, A is (m x n), y is a length-m vector.
  Var matvec_transposed(Var a, Var y) {
    const Node& A = nodes_[a.id];
    const Node& Y = nodes_[y.id];
    if (A.rows != Y.rows * Y.cols)
      raise(ErrorCode::InvalidConfig, "matvec_transposed shape mismatch");
    Node n;
    n.rows = A.cols;
    n.cols = 1;
    n.own_val.assign(A.cols, 0.0);
    for (std::size_t r = 0; r < A.rows; ++r) {
      const double yr = Y.val[r];
      const double* row = A.val + r * A.cols;
      for (std::size_t c = 0; c < A.cols; ++c) n.own_val[c] += row[c] * yr;
    }
    n.backward = [this, a, y](const Node& out) {
      Node& A = nodes_[a.id];
      Node& Y = nodes_[y.id];
      for (std::size_t r = 0; r < A.rows; ++r) {
        const double yr = Y.val[r];
        const double* av = A.val + r * A.cols;
        double* ag = A.grad + r * A.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < A.cols; ++c) {
          ag[c] += out.grad[c] * yr;
          acc += out.grad[c] * av[c];
        }
        Y.grad[r] += acc;
      }
    };
    return push_owned(std::move(n));
  }

  Var add(Var a, Var b) {
    return binary_elementwise(
        a, b, [](double x, double y) { return x + y; },
        [](Node& A, Node& B, const Node& out) {
          for (std::size_t i = 0; i < out.rows * out.cols; ++i) {
            A.grad[i] += out.grad[i];
            B.grad[i] += out.grad[i];
          }
        });
  }

  Var mul(Var a, Var b) {
    return binary_elementwise(
        a, b, [](double x, double y) { return x * y; },
        [](Node& A, Node& B, const Node& out) {
          for (std::size_t i = 0; i < out.rows * out.cols; ++i) {
            A.grad[i] += out.grad[i] * B.val[i];
            B.grad[i] += out.grad[i] * A.val[i];
          }
        });
  }

  Var scale(Var a, double c) {
    const Node& A = nodes_[a.id];
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(A.rows * A.cols);
    for (std::size_t i = 0; i < n.own_val.size(); ++i) n.own_val[i] = c * A.val[i];
    n.backward = [this, a, c](const Node& out) {
      Node& A = nodes_[a.id];
      for (std::size_t i = 0; i < out.rows * out.cols; ++i) A.grad[i] += c * out.grad[i];
    };
    return push_owned(std::move(n));
  }

  // out = 1 - a
  Var one_minus(Var a) {
    const Node& A = nodes_[a.id];
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(A.rows * A.cols);
    for (std::size_t i = 0; i < n.own_val.size(); ++i) n.own_val[i] = 1.0 - A.val[i];
    n.backward = [this, a](const Node& out) {
      Node& A = nodes_[a.id];
      for (std::size_t i = 0; i < out.rows * out.cols; ++i) A.grad[i] -= out.grad[i];
    };
    return push_owned(std::move(n));
  }

  Var sigmoid(Var a) {
    return unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
  }

  Var tanh_op(Var a) {
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
  }

  Var concat(const std::vector<Var>& parts) {
    Node n;
    n.cols = 1;
    std::size_t total = 0;
    for (Var p : parts) total += size(p);
    n.rows = total;
    n.own_val.reserve(total);
    for (Var p : parts) {
      auto v = value(p);
      n.own_val.insert(n.own_val.end(), v.begin(), v.end());
    }
    n.backward = [this, parts](const Node& out) {
      std::size_t off = 0;
      for (Var p : parts) {
        Node& P = nodes_[p.id];
        const std::size_t len = P.rows * P.cols;
        for (std::size_t i = 0; i < len; ++i) P.grad[i] += out.grad[off + i];
        off += len;
      }
    };
    return push_owned(std::move(n));
  }

  // Stacks length-d vectors into an (L x d) matrix.
  Var stack_rows(const std::vector<Var>& rows_in) {
    if (rows_in.empty()) raise(ErrorCode::InvalidConfig, "stack_rows of nothing");
    const std::size_t d = size(rows_in.front());
    Node n;
    n.rows = rows_in.size();
    n.cols = d;
    n.own_val.reserve(rows_in.size() * d);
    for (Var r : rows_in) {
      if (size(r) != d) raise(ErrorCode::InvalidConfig, "stack_rows width mismatch");
      auto v = value(r);
      n.own_val.insert(n.own_val.end(), v.begin(), v.end());
    }
    n.backward = [this, rows_in, d](const Node& out) {
      for (std::size_t r = 0; r < rows_in.size(); ++r) {
        Node& R = nodes_[rows_in[r].id];
        for (std::size_t c = 0; c < d; ++c) R.grad[c] += out.grad[r * d + c];
      }
    };
    return push_owned(std::move(n));
  }

  // Gathers rows of an embedding table; gradients scatter-add back, so rows
  // of absent ids keep an exactly zero gradient.
  Var lookup_rows(Param& table, std::vector<std::size_t> ids) {
    for (std::size_t id : ids) {
      if (id >= table.rows)
        raise(ErrorCode::UnknownPhonemeId,
              "row id " + std::to_string(id) + " out of range for " + table.name);
    }
    Node n;
    n.rows = ids.size();
    n.cols = table.cols;
    n.own_val.resize(ids.size() * table.cols);
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (std::size_t c = 0; c < table.cols; ++c)
        n.own_val[r * table.cols + c] = table.value[ids[r] * table.cols + c];
    Param* tp = &table;
    n.backward = [tp, ids](const Node& out) {
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
          tp->grad[ids[r] * out.cols + c] += out.grad[r * out.cols + c];
    };
    return push_owned(std::move(n));
  }

  // Valid stride-1 convolution of an (l x d) embedding matrix with every
  // (k x d) filter, followed by max pooling over positions. Output has one
  // scalar per filter; gradients flow only through the argmax positions.
  Var conv_rows_max(Var e, Param& filters, std::size_t k,
                    std::vector<std::size_t>* argmax_out = nullptr) {
    const Node& E = nodes_[e.id];
    const std::size_t l = E.rows, d = E.cols;
    if (l < k) raise(ErrorCode::InvalidConfig, "conv input shorter than filter; pad first");
    if (filters.cols != k * d) raise(ErrorCode::InvalidConfig, "filter width != k*d");
    const std::size_t n_filters = filters.rows;
    const std::size_t positions = l - k + 1;

    Node n;
    n.rows = n_filters;
    n.cols = 1;
    n.own_val.resize(n_filters);
    std::vector<std::size_t> argmax(n_filters, 0);
    for (std::size_t f = 0; f < n_filters; ++f) {
      const double* w = filters.value.data() + f * filters.cols;
      double best = 0.0;
      std::size_t best_p = 0;
      for (std::size_t p = 0; p < positions; ++p) {
        double acc = 0.0;
        const double* window = E.val + p * d;
        for (std::size_t i = 0; i < k * d; ++i) acc += w[i] * window[i];
        if (p == 0 || acc > best) {
          best = acc;
          best_p = p;
        }
      }
      n.own_val[f] = best;
      argmax[f] = best_p;
    }
    if (argmax_out) *argmax_out = argmax;

    Param* fp = &filters;
    n.backward = [this, e, fp, k, argmax](const Node& out) {
      Node& E = nodes_[e.id];
      const std::size_t d = E.cols;
      for (std::size_t f = 0; f < out.rows; ++f) {
        const double g = out.grad[f];
        if (g == 0.0) continue;
        const std::size_t p = argmax[f];
        const double* w = fp->value.data() + f * fp->cols;
        double* wg = fp->grad.data() + f * fp->cols;
        const double* window = E.val + p * d;
        double* window_g = E.grad + p * d;
        for (std::size_t i = 0; i < k * d; ++i) {
          wg[i] += g * window[i];
          window_g[i] += g * w[i];
        }
      }
    };
    return push_owned(std::move(n));
  }

  Var softmax(Var a) {
    const Node& A = nodes_[a.id];
    const std::size_t len = A.rows * A.cols;
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(len);
    double mx = A.val[0];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, A.val[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      n.own_val[i] = std::exp(A.val[i] - mx);
      sum += n.own_val[i];
    }
    for (std::size_t i = 0; i < len; ++i) n.own_val[i] /= sum;
    n.backward = [this, a](const Node& out) {
      Node& A = nodes_[a.id];
      const std::size_t len = out.rows * out.cols;
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += out.grad[i] * out.val[i];
      for (std::size_t i = 0; i < len; ++i) A.grad[i] += out.val[i] * (out.grad[i] - dot);
    };
    return push_owned(std::move(n));
  }

  Var log_softmax(Var a) {
    const Node& A = nodes_[a.id];
    const std::size_t len = A.rows * A.cols;
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(len);
    double mx = A.val[0];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, A.val[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += std::exp(A.val[i] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t i = 0; i < len; ++i) n.own_val[i] = A.val[i] - lse;
    n.backward = [this, a](const Node& out) {
      Node& A = nodes_[a.id];
      const std::size_t len = out.rows * out.cols;
      double gsum = 0.0;
      for (std::size_t i = 0; i < len; ++i) gsum += out.grad[i];
      for (std::size_t i = 0; i < len; ++i)
        A.grad[i] += out.grad[i] - std::exp(out.val[i]) * gsum;
    };
    return push_owned(std::move(n));
  }

  Var pick(Var a, std::size_t index) {
    const Node& A = nodes_[a.id];
    if (index >= A.rows * A.cols) raise(ErrorCode::IndexOutOfRange, "pick index out of range");
    Node n;
    n.rows = 1;
    n.cols = 1;
    n.own_val = {A.val[index]};
    n.backward = [this, a, index](const Node& out) {
      nodes_[a.id].grad[index] += out.grad[0];
    };
    return push_owned(std::move(n));
  }

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node and
  // parameter. The loss must be scalar.
  void backward(Var loss) {
    Node& L = nodes_[loss.id];
    if (L.rows * L.cols != 1) raise(ErrorCode::InvalidConfig, "backward from non-scalar");
    L.grad[0] += 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(nodes_[i]);
    }
  }

  // Backward pass from an arbitrary upstream gradient instead of a scalar
  // loss seed.
  void backward_with_gradient(Var v, std::span<const double> upstream) {
    Node& N = nodes_[v.id];
    const std::size_t len = N.rows * N.cols;
    if (upstream.size() != len)
      raise(ErrorCode::InvalidConfig, "upstream gradient shape mismatch");
    for (std::size_t i = 0; i < len; ++i) N.grad[i] += upstream[i];
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(nodes_[i]);
    }
  }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double* val = nullptr;
    double* grad = nullptr;
    std::vector<double> own_val;
    std::vector<double> own_grad;
    std::function<void(const Node&)> backward;
  };

  template <typename FwdFn, typename BwdFn>
  Var unary(Var a, FwdFn fwd, BwdFn dydx) {
    const Node& A = nodes_[a.id];
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(A.rows * A.cols);
    for (std::size_t i = 0; i < n.own_val.size(); ++i) n.own_val[i] = fwd(A.val[i]);
    n.backward = [this, a, dydx](const Node& out) {
      Node& A = nodes_[a.id];
      for (std::size_t i = 0; i < out.rows * out.cols; ++i)
        A.grad[i] += out.grad[i] * dydx(A.val[i], out.val[i]);
    };
    return push_owned(std::move(n));
  }

  template <typename FwdFn, typename BwdFn>
  Var binary_elementwise(Var a, Var b, FwdFn fwd, BwdFn bwd) {
    const Node& A = nodes_[a.id];
    const Node& B = nodes_[b.id];
    if (A.rows != B.rows || A.cols != B.cols)
      raise(ErrorCode::InvalidConfig, "elementwise shape mismatch");
    Node n;
    n.rows = A.rows;
    n.cols = A.cols;
    n.own_val.resize(A.rows * A.cols);
    for (std::size_t i = 0; i < n.own_val.size(); ++i) n.own_val[i] = fwd(A.val[i], B.val[i]);
    n.backward = [this, a, b, bwd](const Node& out) {
      bwd(nodes_[a.id], nodes_[b.id], out);
    };
    return push_owned(std::move(n));
  }

  Var push_owned(Node&& n) {
    n.own_grad.assign(n.own_val.size(), 0.0);
    n.val = n.own_val.data();
    n.grad = n.own_grad.data();
    return push(std::move(n));
  }

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace sqa

#endif  // SQA_TENSOR_HPP
