#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgn/rng.hpp"

namespace mgn {

/// Column-major batch: one column per item (node or edge), one row per feature.
using Matrix = Eigen::MatrixXd;

class NnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Flat registry of learnable tensors with gradient and optimizer buffers.
class ParamStore {
 public:
  int add(const std::string& name, int rows, int cols);

  Param& operator[](int id) { return params_[id]; }
  const Param& operator[](int id) const { return params_[id]; }
  const Matrix& value(int id) const { return params_[id].value; }
  Matrix& grad(int id) { return params_[id].grad; }

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }

  void zero_grad();
  /// Bias-corrected Adam update followed by zeroing the gradients.
  /// Throws NnError if any gradient is not finite.
  void adam_step(double lr, const AdamOptions& opts = {});

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }

 private:
  std::vector<Param> params_;
  std::int64_t step_ = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights of shape (out, in) and
/// their biases; layer-norm scales start at 1 and shifts at 0.
void init_dense(ParamStore& store, int weight, int bias, Rng& rng);

/// y = (x - mean) / sqrt(var + eps) * alpha + beta over the features of each column.
Matrix layer_norm(const Matrix& x, double alpha, double beta, double eps = 1e-5);

inline constexpr double kLayerNormEps = 1e-5;

/// Dense ReLU network with an optional scalar-affine layer norm on its output.
class Mlp {
 public:
  struct Tape {
    std::vector<Matrix> inputs;  // input of each linear layer
    Matrix normalized;           // x_hat of the layer norm
    Eigen::RowVectorXd inv_std;
    bool recorded = false;
  };

  Mlp() = default;
  /// Registers `hidden_layers` hidden layers of width `hidden` and one linear
  /// output layer in `store`, named "<prefix>.l<i>.w" / ".b".
  Mlp(ParamStore& store, const std::string& prefix, int in, int hidden, int hidden_layers, int out,
      bool layer_norm);

  void init(ParamStore& store, Rng& rng) const;

  Matrix forward(const ParamStore& store, const Matrix& x, Tape* tape = nullptr) const;
  /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
  Matrix backward(ParamStore& store, const Tape& tape, const Matrix& grad_out) const;

  int in() const { return in_; }
  int out() const { return out_; }
  bool has_layer_norm() const { return alpha_ >= 0; }
  int alpha_id() const { return alpha_; }
  int beta_id() const { return beta_; }
  const std::vector<int>& weight_ids() const { return weights_; }
  const std::vector<int>& bias_ids() const { return biases_; }

 private:
  int in_ = 0, out_ = 0;
  std::vector<int> weights_, biases_;
  int alpha_ = -1, beta_ = -1;
};

}  // namespace mgn
