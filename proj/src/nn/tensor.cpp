#include "scenecast/nn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace scenecast::nn {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << ", " << m.cols() << ")";
  return os.str();
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

void check_same_graph(Var a, Var b, const char* op) {
  if (a.graph() != b.graph()) throw std::invalid_argument(std::string(op) + ": vars from different graphs");
}

}  // namespace

const Matrix& Var::value() const { return graph_->value(id_); }
const Matrix& Var::grad() const { return graph_->grad(id_); }
bool Var::has_grad() const { return graph_->has_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar(): tensor has shape " + shape_string(v));
  return v(0, 0);
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
}

Var Graph::record(Matrix value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& p : parents) {
      if (nodes_[p.id()].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) shape_fail("accumulate", n.value, g);
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Graph::accumulate(Var v, Matrix&& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) shape_fail("accumulate", n.value, g);
  if (n.grad.size() == 0) {
    n.grad = std::move(g);
  } else {
    n.grad += g;
  }
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw std::invalid_argument("backward: loss from another graph");
  if (nodes_[loss.id()].value.size() != 1)
    throw ShapeError("backward: loss must be scalar, got " + shape_string(nodes_[loss.id()].value));
  if (!grad_enabled_) throw std::logic_error("backward: graph recorded without gradients");
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) {
      // The callback only touches earlier nodes, so this grad can be lent out.
      Matrix g = std::move(n.grad);
      n.backward(*this, g);
      n.grad = std::move(g);
    }
    if (n.param != nullptr) {
      if (n.param->grad) {
        *n.param->grad += n.grad;
      } else {
        n.param->grad = n.grad;
      }
    }
  }
}

Var matmul(Var a, Var b) {
  check_same_graph(a, b, "matmul");
  if (a.cols() != b.rows()) shape_fail("matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  return a.graph()->record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& og) {
    if (g.requires_grad(a)) g.accumulate(a, og * b.value().transpose());
    if (g.requires_grad(b)) g.accumulate(b, a.value().transpose() * og);
  });
}

Var matmul_nt(Var a, Var b) {
  check_same_graph(a, b, "matmul_nt");
  if (a.cols() != b.cols()) shape_fail("matmul_nt", a.value(), b.value());
  Matrix out = a.value() * b.value().transpose();
  return a.graph()->record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& og) {
    if (g.requires_grad(a)) g.accumulate(a, og * b.value());
    if (g.requires_grad(b)) g.accumulate(b, og.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  check_same_graph(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail("add", a.value(), b.value());
  return a.graph()->record(a.value() + b.value(), {a, b}, [a, b](Graph& g, const Matrix& og) {
    g.accumulate(a, og);
    g.accumulate(b, og);
  });
}

Var sub(Var a, Var b) {
  check_same_graph(a, b, "sub");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail("sub", a.value(), b.value());
  return a.graph()->record(a.value() - b.value(), {a, b}, [a, b](Graph& g, const Matrix& og) {
    g.accumulate(a, og);
    if (g.requires_grad(b)) g.accumulate(b, -og);
  });
}

Var mul(Var a, Var b) {
  check_same_graph(a, b, "mul");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail("mul", a.value(), b.value());
  Matrix out = a.value().cwiseProduct(b.value());
  return a.graph()->record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& og) {
    if (g.requires_grad(a)) g.accumulate(a, og.cwiseProduct(b.value()));
    if (g.requires_grad(b)) g.accumulate(b, og.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return a.graph()->record(a.value() * s, {a}, [a, s](Graph& g, const Matrix& og) { g.accumulate(a, og * s); });
}

Var add_scalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) { g.accumulate(a, og); });
}

Var add_bias(Var a, Var row) {
  check_same_graph(a, row, "add_bias");
  if (row.rows() != 1 || row.cols() != a.cols()) shape_fail("add_bias", a.value(), row.value());
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.graph()->record(std::move(out), {a, row}, [a, row](Graph& g, const Matrix& og) {
    g.accumulate(a, og);
    if (g.requires_grad(row)) g.accumulate(row, og.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  check_same_graph(a, row, "mul_row");
  if (row.rows() != 1 || row.cols() != a.cols()) shape_fail("mul_row", a.value(), row.value());
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return a.graph()->record(std::move(out), {a, row}, [a, row](Graph& g, const Matrix& og) {
    if (g.requires_grad(a)) {
      Matrix ga = og.array().rowwise() * row.value().row(0).array();
      g.accumulate(a, ga);
    }
    if (g.requires_grad(row)) g.accumulate(row, og.cwiseProduct(a.value()).colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  check_same_graph(a, col, "mul_col");
  if (col.cols() != 1 || col.rows() != a.rows()) shape_fail("mul_col", a.value(), col.value());
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return a.graph()->record(std::move(out), {a, col}, [a, col](Graph& g, const Matrix& og) {
    if (g.requires_grad(a)) {
      Matrix ga = og.array().colwise() * col.value().col(0).array();
      g.accumulate(a, ga);
    }
    if (g.requires_grad(col)) g.accumulate(col, og.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    Matrix ga = (a.value().array() > 0.0).select(og, 0.0);
    g.accumulate(a, ga);
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  const int out_id = static_cast<int>(a.graph()->size());
  return a.graph()->record(std::move(out), {a}, [a, out_id](Graph& g, const Matrix& og) {
    const Matrix& y = g.value(out_id);
    Matrix ga = og.array() * y.array() * (1.0 - y.array());
    g.accumulate(a, ga);
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp();
  const int out_id = static_cast<int>(a.graph()->size());
  return a.graph()->record(std::move(out), {a}, [a, out_id](Graph& g, const Matrix& og) {
    g.accumulate(a, og.cwiseProduct(g.value(out_id)));
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw std::domain_error("log: non-positive input");
  Matrix out = a.value().array().log();
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    g.accumulate(a, og.cwiseQuotient(a.value()));
  });
}

Var sqrt(Var a) {
  if ((a.value().array() < 0.0).any()) throw std::domain_error("sqrt: negative input");
  Matrix out = a.value().cwiseSqrt();
  const int out_id = static_cast<int>(a.graph()->size());
  return a.graph()->record(std::move(out), {a}, [a, out_id](Graph& g, const Matrix& og) {
    Matrix ga = og.array() / (2.0 * g.value(out_id).array());
    g.accumulate(a, ga);
  });
}

Var square(Var a) {
  Matrix out = a.value().cwiseAbs2();
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    g.accumulate(a, 2.0 * og.cwiseProduct(a.value()));
  });
}

namespace {

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// y = softmax(x) per row; dx = y * (dy - sum(dy * y)).
Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy) {
  Eigen::VectorXd dots = dy.cwiseProduct(y).rowwise().sum();
  Matrix dx = y.array() * (dy.colwise() - dots).array();
  return dx;
}

struct NormStats {
  Matrix normalized;
  Eigen::VectorXd inv_std;
};

NormStats layernorm_rows(const Matrix& x, double eps) {
  NormStats s{Matrix(x.rows(), x.cols()), Eigen::VectorXd(x.rows())};
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const auto centered = (x.row(i).array() - mu).eval();
    const double var = centered.square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + eps);
    s.normalized.row(i) = centered * inv;
    s.inv_std(i) = inv;
  }
  return s;
}

// dx = inv/n * (n*dy - sum(dy) - xhat * sum(dy * xhat)), per row.
Matrix layernorm_rows_backward(const Matrix& xhat, const Eigen::VectorXd& inv_std, const Matrix& dy) {
  const double n = static_cast<double>(xhat.cols());
  Matrix dx(xhat.rows(), xhat.cols());
  for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
    const double sdy = dy.row(i).sum();
    const double sdyx = dy.row(i).dot(xhat.row(i));
    dx.row(i) = (inv_std(i) / n) * (n * dy.row(i).array() - sdy - xhat.row(i).array() * sdyx);
  }
  return dx;
}

void check_axis(int axis, const char* op) {
  if (axis != 0 && axis != 1) throw std::invalid_argument(std::string(op) + ": axis must be 0 or 1");
}

}  // namespace

Var softmax(Var a, int axis) {
  check_axis(axis, "softmax");
  Matrix y = axis == 1 ? softmax_rows(a.value()) : Matrix(softmax_rows(a.value().transpose()).transpose());
  const int out_id = static_cast<int>(a.graph()->size());
  return a.graph()->record(std::move(y), {a}, [a, axis, out_id](Graph& g, const Matrix& og) {
    const Matrix& y = g.value(out_id);
    if (axis == 1) {
      g.accumulate(a, softmax_rows_backward(y, og));
    } else {
      Matrix dx = softmax_rows_backward(y.transpose(), og.transpose()).transpose();
      g.accumulate(a, dx);
    }
  });
}

Var layernorm(Var a, int axis, double eps) {
  check_axis(axis, "layernorm");
  if (axis == 1) {
    NormStats s = layernorm_rows(a.value(), eps);
    Matrix y = s.normalized;
    return a.graph()->record(std::move(y), {a}, [a, s = std::move(s)](Graph& g, const Matrix& og) {
      g.accumulate(a, layernorm_rows_backward(s.normalized, s.inv_std, og));
    });
  }
  NormStats s = layernorm_rows(a.value().transpose(), eps);
  Matrix y = s.normalized.transpose();
  return a.graph()->record(std::move(y), {a}, [a, s = std::move(s)](Graph& g, const Matrix& og) {
    Matrix dx = layernorm_rows_backward(s.normalized, s.inv_std, og.transpose()).transpose();
    g.accumulate(a, dx);
  });
}

Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var concat(std::span<const Var> parts, int axis) {
  check_axis(axis, "concat");
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Graph* graph = parts[0].graph();
  Eigen::Index rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const Var& p : parts) {
      if (p.cols() != cols) shape_fail("concat(axis=0)", parts[0].value(), p.value());
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const Var& p : parts) {
      if (p.rows() != rows) shape_fail("concat(axis=1)", parts[0].value(), p.value());
      cols += p.cols();
    }
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    if (axis == 0) {
      out.middleRows(off, p.rows()) = p.value();
      off += p.rows();
    } else {
      out.middleCols(off, p.cols()) = p.value();
      off += p.cols();
    }
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return graph->record(std::move(out), parts, [ps, axis](Graph& g, const Matrix& og) {
    Eigen::Index o = 0;
    for (const Var& p : ps) {
      if (axis == 0) {
        if (g.requires_grad(p)) g.accumulate(p, og.middleRows(o, p.rows()));
        o += p.rows();
      } else {
        if (g.requires_grad(p)) g.accumulate(p, og.middleCols(o, p.cols()));
        o += p.cols();
      }
    }
  });
}

Var gather(Var a, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows())
      throw ShapeError("gather: index " + std::to_string(rows[i]) + " out of range for " + shape_string(a.value()));
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return a.graph()->record(std::move(out), {a}, [a, idx = std::move(idx)](Graph& g, const Matrix& og) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += og.row(static_cast<Eigen::Index>(i));
    g.accumulate(a, ga);
  });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    g.accumulate(a, og.transpose());
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size())
    throw ShapeError("reshape: cannot view " + shape_string(a.value()) + " as (" + std::to_string(rows) + ", " +
                     std::to_string(cols) + ")");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    Matrix ga = Eigen::Map<const Matrix>(og.data(), a.rows(), a.cols());
    g.accumulate(a, ga);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph()->record(std::move(out), {a}, [a](Graph& g, const Matrix& og) {
    g.accumulate(a, Matrix::Constant(a.rows(), a.cols(), og(0, 0)));
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_axis(Var a, int axis) {
  check_axis(axis, "sum_axis");
  Matrix out = axis == 0 ? Matrix(a.value().colwise().sum()) : Matrix(a.value().rowwise().sum());
  return a.graph()->record(std::move(out), {a}, [a, axis](Graph& g, const Matrix& og) {
    Matrix ga(a.rows(), a.cols());
    if (axis == 0) {
      ga.rowwise() = og.row(0);
    } else {
      ga.colwise() = og.col(0);
    }
    g.accumulate(a, ga);
  });
}

Var mse(Var pred, Var target) {
  check_same_graph(pred, target, "mse");
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    shape_fail("mse", pred.value(), target.value());
  if (pred.value().size() == 0) throw ShapeError("mse: empty tensor");
  const double n = static_cast<double>(pred.value().size());
  Matrix out(1, 1);
  out(0, 0) = (pred.value() - target.value()).squaredNorm() / n;
  return pred.graph()->record(std::move(out), {pred, target}, [pred, target, n](Graph& g, const Matrix& og) {
    Matrix d = (pred.value() - target.value()) * (2.0 * og(0, 0) / n);
    if (g.requires_grad(pred)) g.accumulate(pred, d);
    if (g.requires_grad(target)) g.accumulate(target, -d);
  });
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const double up = f(probe);
    probe.data()[i] = orig - step;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace scenecast::nn
