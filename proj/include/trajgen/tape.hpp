#ifndef TRAJGEN_TAPE_HPP_
#define TRAJGEN_TAPE_HPP_

#include "trajgen/core.hpp"

#include <cmath>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace trajgen {

template <typename Scalar>
class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  Tape<Scalar>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  Scalar item() const { return value()(0, 0); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Define-by-run computation record. Forward values are computed eagerly by the
/// op functions below; each op appends one node with a backward rule that
/// scatters its output gradient into its inputs.
///
/// A tape built with `record_backward = false` keeps values only and is used
/// for inference and finite-difference probes.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool record_backward = true) : record_backward_(record_backward) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_backward_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> constant(Mat value) {
    check_finite("constant", value);
    nodes_.push_back(Node{"constant", std::move(value), {}, false, nullptr, {}, {}});
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  /// Leaf bound to a parameter; backward adds the node gradient into `p.grad`.
  Var<Scalar> parameter(Parameter<Scalar>& p) {
    check_finite("parameter", p.value);
    nodes_.push_back(Node{"parameter", p.value, {}, record_backward_, &p, {}, {}});
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  /// Append an op node. `backward` reads grad(self) and calls accumulate() on
  /// inputs. Throws NumericError if `value` has a non-finite entry.
  Var<Scalar> record(std::string_view kind, Mat value, std::initializer_list<Var<Scalar>> inputs,
                     BackwardFn backward) {
    return record(kind, std::move(value), std::vector<Var<Scalar>>(inputs), std::move(backward));
  }

  Var<Scalar> record(std::string_view kind, Mat value, const std::vector<Var<Scalar>>& inputs,
                     BackwardFn backward) {
    check_finite(kind, value);
    Node node;
    node.kind = std::string(kind);
    node.value = std::move(value);
    for (const auto& in : inputs) {
      if (in.tape() != this) throw Error("op '" + node.kind + "': input belongs to another tape");
      node.inputs.push_back(in.id());
      node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    node.requires_grad = node.requires_grad && record_backward_;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  const std::string& kind(int id) const { return nodes_[id].kind; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient of node `id` from the most recent backward pass (empty if unreached).
  const Mat& grad(int id) const { return nodes_[id].grad; }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& contribution) {
    Node& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = contribution;
    } else {
      node.grad += contribution;
    }
  }

  /// Reverse-mode sweep from a 1x1 loss. Node gradients are reset first;
  /// parameter gradients accumulate, so two calls without zero_grad give 2x.
  void backward(Var<Scalar> loss) {
    if (!record_backward_) throw Error("backward: tape was built without backward recording");
    if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ShapeError("backward: loss must be 1x1, got " + shape_string(loss.value()));
    }
    for (auto& node : nodes_) node.grad.resize(0, 0);
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad = Mat::Ones(1, 1);
    for (int id = loss.id(); id >= 0; --id) {
      Node& node = nodes_[id];
      if (node.grad.size() == 0) continue;
      if (node.backward) {
        node.backward(*this, id);
        for (int in : nodes_[id].inputs) {
          const Mat& g = nodes_[in].grad;
          if (g.size() != 0 && !g.allFinite()) {
            throw NumericError("backward: non-finite gradient produced by op '" + nodes_[id].kind +
                               "'");
          }
        }
      }
      if (node.param != nullptr) {
        Parameter<Scalar>& p = *node.param;
        if (p.grad.rows() != node.grad.rows() || p.grad.cols() != node.grad.cols()) {
          p.grad = node.grad;
        } else {
          p.grad += node.grad;
        }
      }
    }
  }

 private:
  struct Node {
    std::string kind;
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Parameter<Scalar>* param = nullptr;
    std::vector<int> inputs;
    BackwardFn backward;
  };

  static void check_finite(std::string_view kind, const Mat& value) {
    if (!value.allFinite()) {
      throw NumericError("op '" + std::string(kind) + "': non-finite output " +
                         shape_string(value));
    }
  }

  bool record_backward_;
  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
[[noreturn]] void shape_mismatch(std::string_view op, const Var<Scalar>& a, const Var<Scalar>& b) {
  throw ShapeError("op '" + std::string(op) + "': shape mismatch " + shape_string(a.value()) +
                   " vs " + shape_string(b.value()));
}

template <typename Scalar>
void same_tape(std::string_view op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw Error("op '" + std::string(op) + "': operands live on different tapes");
  }
}

enum class Broadcast { kNone, kRow };

/// Elementwise operands: equal shapes, or `b` a 1xn row repeated over a's rows.
template <typename Scalar>
Broadcast elementwise_shapes(std::string_view op, const Var<Scalar>& a, const Var<Scalar>& b) {
  same_tape(op, a, b);
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  shape_mismatch(op, a, b);
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape("matmul", a, b);
  if (a.cols() != b.rows()) detail::shape_mismatch("matmul", a, b);
  Matrix<Scalar> out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  const auto mode = detail::elementwise_shapes("add", a, b);
  Matrix<Scalar> out = a.value();
  if (mode == detail::Broadcast::kRow) {
    out.rowwise() += b.value().row(0);
  } else {
    out += b.value();
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record("add", std::move(out), {a, b}, [ia, ib, mode](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    t.accumulate(ia, g);
    if (!t.requires_grad(ib)) return;
    if (mode == detail::Broadcast::kRow) {
      t.accumulate(ib, g.colwise().sum());
    } else {
      t.accumulate(ib, g);
    }
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  const auto mode = detail::elementwise_shapes("sub", a, b);
  Matrix<Scalar> out = a.value();
  if (mode == detail::Broadcast::kRow) {
    out.rowwise() -= b.value().row(0);
  } else {
    out -= b.value();
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record("sub", std::move(out), {a, b}, [ia, ib, mode](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    t.accumulate(ia, g);
    if (!t.requires_grad(ib)) return;
    if (mode == detail::Broadcast::kRow) {
      t.accumulate(ib, -g.colwise().sum());
    } else {
      t.accumulate(ib, -g);
    }
  });
}

template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  const auto mode = detail::elementwise_shapes("mul", a, b);
  Matrix<Scalar> out;
  if (mode == detail::Broadcast::kRow) {
    out = (a.value().array().rowwise() * b.value().row(0).array()).matrix();
  } else {
    out = a.value().cwiseProduct(b.value());
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record("mul", std::move(out), {a, b}, [ia, ib, mode](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    const auto& va = t.value(ia);
    const auto& vb = t.value(ib);
    if (mode == detail::Broadcast::kRow) {
      if (t.requires_grad(ia)) t.accumulate(ia, (g.array().rowwise() * vb.row(0).array()).matrix());
      if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(va).colwise().sum());
    } else {
      if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(vb));
      if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(va));
    }
  });
}

template <typename Scalar>
Var<Scalar> div(Var<Scalar> a, Var<Scalar> b) {
  const auto mode = detail::elementwise_shapes("div", a, b);
  if (mode != detail::Broadcast::kNone) detail::shape_mismatch("div", a, b);
  Matrix<Scalar> out = a.value().cwiseQuotient(b.value());
  const int ia = a.id(), ib = b.id();
  return a.tape()->record("div", std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    const auto& vb = t.value(ib);
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseQuotient(vb));
    if (t.requires_grad(ib)) {
      t.accumulate(ib, (-g.array() * t.value(self).array() / vb.array()).matrix());
    }
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  const int ia = a.id();
  return a.tape()->record("scale", std::move(out), {a}, [ia, s](Tape<Scalar>& t, int self) {
    t.accumulate(ia, t.grad(self) * s);
  });
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> a, Scalar s) {
  Matrix<Scalar> out = (a.value().array() + s).matrix();
  const int ia = a.id();
  return a.tape()->record("add_scalar", std::move(out), {a},
                          [ia](Tape<Scalar>& t, int self) { t.accumulate(ia, t.grad(self)); });
}

/// Column-wise concatenation of operands with equal row counts.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("op 'concat': no operands");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::same_tape("concat", parts.front(), p);
    if (p.rows() != rows) detail::shape_mismatch("concat", parts.front(), p);
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return parts.front().tape()->record(
      "concat", std::move(out), parts, [layout](Tape<Scalar>& t, int self) {
        const auto& g = t.grad(self);
        for (const auto& [id, off] : layout) {
          if (t.requires_grad(id)) t.accumulate(id, g.middleCols(off, t.value(id).cols()));
        }
      });
}

/// Columns [first, first + count).
template <typename Scalar>
Var<Scalar> slice(Var<Scalar> a, Eigen::Index first, Eigen::Index count) {
  if (first < 0 || count < 0 || first + count > a.cols()) {
    throw ShapeError("op 'slice': columns [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") out of range for " +
                     shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().middleCols(first, count);
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->record("slice", std::move(out), {a},
                          [ia, first, count, rows, cols](Tape<Scalar>& t, int self) {
                            Matrix<Scalar> g = Matrix<Scalar>::Zero(rows, cols);
                            g.middleCols(first, count) = t.grad(self);
                            t.accumulate(ia, g);
                          });
}

/// Rows [first, first + count).
template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Eigen::Index first, Eigen::Index count) {
  if (first < 0 || count < 0 || first + count > a.rows()) {
    throw ShapeError("op 'slice_rows': rows [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") out of range for " +
                     shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().middleRows(first, count);
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->record("slice_rows", std::move(out), {a},
                          [ia, first, count, rows, cols](Tape<Scalar>& t, int self) {
                            Matrix<Scalar> g = Matrix<Scalar>::Zero(rows, cols);
                            g.middleRows(first, count) = t.grad(self);
                            t.accumulate(ia, g);
                          });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().tanh().matrix();
  const int ia = a.id();
  return a.tape()->record("tanh", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate(ia, (t.grad(self).array() * (Scalar(1) - y * y)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Matrix<Scalar> out = (Scalar(1) / (Scalar(1) + (-a.value().array()).exp())).matrix();
  const int ia = a.id();
  return a.tape()->record("sigmoid", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate(ia, (t.grad(self).array() * y * (Scalar(1) - y)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().exp().matrix();
  const int ia = a.id();
  return a.tape()->record("exp", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    t.accumulate(ia, t.grad(self).cwiseProduct(t.value(self)));
  });
}

template <typename Scalar>
Var<Scalar> log(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().log().matrix();
  const int ia = a.id();
  return a.tape()->record("log", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    t.accumulate(ia, t.grad(self).cwiseQuotient(t.value(ia)));
  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().square().matrix();
  const int ia = a.id();
  return a.tape()->record("square", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    t.accumulate(ia, (Scalar(2) * t.grad(self).array() * t.value(ia).array()).matrix());
  });
}

/// max(0, x); the subgradient at exactly 0 is 0.
template <typename Scalar>
Var<Scalar> hinge(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  const int ia = a.id();
  return a.tape()->record("hinge", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& x = t.value(ia).array();
    t.accumulate(ia, (x > Scalar(0)).select(t.grad(self).array(), Scalar(0)).matrix());
  });
}

/// Elementwise Huber: 0.5 x^2 for |x| <= delta, delta (|x| - 0.5 delta) beyond.
template <typename Scalar>
Var<Scalar> huber(Var<Scalar> a, Scalar delta) {
  const auto x = a.value().array();
  Matrix<Scalar> out =
      (x.abs() <= delta).select(Scalar(0.5) * x.square(), delta * (x.abs() - Scalar(0.5) * delta))
          .matrix();
  const int ia = a.id();
  return a.tape()->record("huber", std::move(out), {a}, [ia, delta](Tape<Scalar>& t, int self) {
    const auto x = t.value(ia).array();
    const auto slope = x.max(-delta).min(delta);
    t.accumulate(ia, (t.grad(self).array() * slope).matrix());
  });
}

/// Row-wise softmax with max subtraction.
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a) {
  Matrix<Scalar> out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  const int ia = a.id();
  return a.tape()->record("softmax", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    Matrix<Scalar> gy = g.cwiseProduct(y);
    Matrix<Scalar> dot = gy.rowwise().sum();
    Matrix<Scalar> out = gy - (y.array().colwise() * dot.col(0).array()).matrix();
    t.accumulate(ia, out);
  });
}

/// Row-wise log(sum(exp(x))) -> (rows x 1).
template <typename Scalar>
Var<Scalar> logsumexp(Var<Scalar> a) {
  const auto& x = a.value();
  Matrix<Scalar> out(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    out(r, 0) = m + std::log((x.row(r).array() - m).exp().sum());
  }
  const int ia = a.id();
  return a.tape()->record("logsumexp", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& x = t.value(ia);
    const auto& lse = t.value(self);
    const auto& g = t.grad(self);
    Matrix<Scalar> soft = (x.array().colwise() - lse.col(0).array()).exp().matrix();
    t.accumulate(ia, (soft.array().colwise() * g.col(0).array()).matrix());
  });
}

/// Repeat a column vector (rows x 1) into `cols` columns.
template <typename Scalar>
Var<Scalar> broadcast_cols(Var<Scalar> a, Eigen::Index cols) {
  if (a.cols() != 1) {
    throw ShapeError("op 'broadcast_cols': expected a column vector, got " +
                     shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().replicate(1, cols);
  const int ia = a.id();
  return a.tape()->record("broadcast_cols", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    t.accumulate(ia, t.grad(self).rowwise().sum());
  });
}

/// Sum of all entries -> 1x1 (accumulated in double).
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(a.value().template cast<double>().sum());
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->record("sum", std::move(out), {a}, [ia, rows, cols](Tape<Scalar>& t, int self) {
    t.accumulate(ia, Matrix<Scalar>::Constant(rows, cols, t.grad(self)(0, 0)));
  });
}

/// Mean of all entries -> 1x1 (accumulated in double).
template <typename Scalar>
Var<Scalar> mean(Var<Scalar> a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("op 'mean': empty operand");
  Matrix<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(a.value().template cast<double>().sum() / n);
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->record("mean", std::move(out), {a},
                          [ia, rows, cols, n](Tape<Scalar>& t, int self) {
                            const Scalar g = static_cast<Scalar>(t.grad(self)(0, 0) / n);
                            t.accumulate(ia, Matrix<Scalar>::Constant(rows, cols, g));
                          });
}

/// Per-row sum -> (rows x 1).
template <typename Scalar>
Var<Scalar> sum_cols(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().rowwise().sum();
  const int ia = a.id();
  const Eigen::Index cols = a.cols();
  return a.tape()->record("sum_cols", std::move(out), {a}, [ia, cols](Tape<Scalar>& t, int self) {
    t.accumulate(ia, t.grad(self).replicate(1, cols));
  });
}

/// Per-row Euclidean norm -> (rows x 1). Gradient at a zero row is zero.
template <typename Scalar>
Var<Scalar> row_norm(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().rowwise().norm();
  const int ia = a.id();
  return a.tape()->record("row_norm", std::move(out), {a}, [ia](Tape<Scalar>& t, int self) {
    const auto& x = t.value(ia);
    const auto& n = t.value(self);
    const auto& g = t.grad(self);
    Matrix<Scalar> out = Matrix<Scalar>::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (n(r, 0) > Scalar(0)) out.row(r) = x.row(r) * (g(r, 0) / n(r, 0));
    }
    t.accumulate(ia, out);
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
  return sub(a, b);
}

template <typename Scalar>
Var<Scalar> operator*(Scalar s, Var<Scalar> a) {
  return scale(a, s);
}

}  // namespace trajgen

#endif  // TRAJGEN_TAPE_HPP_
