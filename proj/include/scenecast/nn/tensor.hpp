#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scenecast {

/// Row-major dense storage shared by every numeric component.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixX<double>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec2d = Vec2<double>;

}  // namespace scenecast

namespace scenecast::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Matrix& m);

/// A learnable tensor that outlives computation records. `grad` is absent
/// until a backward pass reaches the parameter or zero_grad() allocates it.
struct Parameter {
  std::string name;
  Matrix value;
  std::optional<Matrix> grad;

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the
/// owning Graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] const Matrix& grad() const;
  [[nodiscard]] bool has_grad() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const;
  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] Graph* graph() const { return graph_; }
  [[nodiscard]] bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Define-by-run computation record. Every op appends one node; backward()
/// walks nodes in reverse execution order, each exactly once.
class Graph {
 public:
  /// Receives the node's output gradient and accumulates into parents.
  using BackwardFn = std::function<void(Graph&, const Matrix& out_grad)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  /// Appends a computed node. `fn` is dropped when no parent needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn fn);

  void backward(Var loss);

  void accumulate(Var v, const Matrix& g);
  void accumulate(Var v, Matrix&& g);
  [[nodiscard]] bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  [[nodiscard]] const Matrix& value(int id) const { return nodes_[id].value; }
  [[nodiscard]] const Matrix& grad(int id) const { return nodes_[id].grad; }
  [[nodiscard]] bool has_grad(int id) const { return nodes_[id].grad.size() > 0; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// Forward ops. Shapes follow plain matrix rules; no implicit broadcasting.

/// (n x k) * (k x m) -> (n x m)
Var matmul(Var a, Var b);
/// a * b^T: (n x k), (m x k) -> (n x m)
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Adds a 1 x m row to every row of an n x m input.
Var add_bias(Var a, Var row);
/// Multiplies every row of an n x m input by a 1 x m row.
Var mul_row(Var a, Var row);
/// Multiplies every row i of an n x m input by entry i of an n x 1 column.
Var mul_col(Var a, Var col);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
/// axis 0 normalizes each column, axis 1 each row.
Var softmax(Var a, int axis);
/// Zero-mean unit-variance normalization along `axis` (no affine terms).
Var layernorm(Var a, int axis, double eps = 1e-10);
Var concat(std::span<const Var> parts, int axis);
Var concat(std::initializer_list<Var> parts, int axis);
/// Selects rows; repeated indices accumulate gradient.
Var gather(Var a, std::span<const int> rows);
Var transpose(Var a);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Sum over all entries -> 1 x 1.
Var sum(Var a);
Var mean(Var a);
/// axis 0 -> 1 x m column sums, axis 1 -> n x 1 row sums.
Var sum_axis(Var a, int axis);
/// Mean of squared differences -> 1 x 1.
Var mse(Var pred, Var target);

/// Central finite-difference gradient of a scalar function of one matrix.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double step = 1e-5);

}  // namespace scenecast::nn
