#include "mgn/nn.hpp"

#include <cmath>

namespace mgn {

int ParamStore::add(const std::string& name, int rows, int cols) {
  Param p;
  p.name = name;
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.m = Matrix::Zero(rows, cols);
  p.v = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParamStore::adam_step(double lr, const AdamOptions& opts) {
  for (const auto& p : params_) {
    if (!p.grad.allFinite()) throw NnError("non-finite gradient in " + p.name);
  }
  ++step_;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step_));
  for (auto& p : params_) {
    p.m = opts.beta1 * p.m + (1.0 - opts.beta1) * p.grad;
    p.v = opts.beta2 * p.v + (1.0 - opts.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + opts.eps);
    p.grad.setZero();
  }
}

void init_dense(ParamStore& store, int weight, int bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(store[weight].value.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < store[weight].value.size(); ++i) store[weight].value.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < store[bias].value.size(); ++i) store[bias].value.data()[i] = dist(rng);
}

namespace {

void layer_norm_forward(const Matrix& x, double alpha, double beta, double eps, Matrix& xhat,
                        Eigen::RowVectorXd& inv_std, Matrix& y) {
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = x.colwise().sum() / n;
  xhat = x.rowwise() - mean;
  const Eigen::RowVectorXd var = xhat.cwiseProduct(xhat).colwise().sum() / n;
  inv_std = (var.array() + eps).rsqrt().matrix();
  xhat = xhat * inv_std.asDiagonal();
  y = (alpha * xhat).array() + beta;
}

}  // namespace

Matrix layer_norm(const Matrix& x, double alpha, double beta, double eps) {
  Matrix xhat, y;
  Eigen::RowVectorXd inv_std;
  layer_norm_forward(x, alpha, beta, eps, xhat, inv_std, y);
  return y;
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, int in, int hidden, int hidden_layers, int out,
         bool layer_norm)
    : in_(in), out_(out) {
  int width = in;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int next = l < hidden_layers ? hidden : out;
    const std::string base = prefix + ".l" + std::to_string(l);
    weights_.push_back(store.add(base + ".w", next, width));
    biases_.push_back(store.add(base + ".b", next, 1));
    width = next;
  }
  if (layer_norm) {
    alpha_ = store.add(prefix + ".ln.alpha", 1, 1);
    beta_ = store.add(prefix + ".ln.beta", 1, 1);
    store[alpha_].value(0, 0) = 1.0;
  }
}

void Mlp::init(ParamStore& store, Rng& rng) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) init_dense(store, weights_[l], biases_[l], rng);
  if (has_layer_norm()) {
    store[alpha_].value(0, 0) = 1.0;
    store[beta_].value(0, 0) = 0.0;
  }
}

Matrix Mlp::forward(const ParamStore& store, const Matrix& x, Tape* tape) const {
  if (x.rows() != in_) {
    throw NnError("mlp input has " + std::to_string(x.rows()) + " features, expected " + std::to_string(in_));
  }
  if (tape) {
    tape->inputs.clear();
    tape->recorded = true;
  }
  Matrix h = x;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = store.value(weights_[l]) * h;
    z.colwise() += store.value(biases_[l]).col(0);
    if (tape) tape->inputs.push_back(std::move(h));
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  if (!has_layer_norm()) return h;
  Matrix xhat, y;
  Eigen::RowVectorXd inv_std;
  layer_norm_forward(h, store.value(alpha_)(0, 0), store.value(beta_)(0, 0), kLayerNormEps, xhat, inv_std, y);
  if (tape) {
    tape->normalized = std::move(xhat);
    tape->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix Mlp::backward(ParamStore& store, const Tape& tape, const Matrix& grad_out) const {
  if (!tape.recorded) throw NnError("backward called before forward");
  Matrix g = grad_out;
  if (has_layer_norm()) {
    const double alpha = store.value(alpha_)(0, 0);
    const Matrix& xhat = tape.normalized;
    store.grad(alpha_)(0, 0) += g.cwiseProduct(xhat).sum();
    store.grad(beta_)(0, 0) += g.sum();
    const double n = static_cast<double>(g.rows());
    const Matrix gx = alpha * g;
    const Eigen::RowVectorXd mean_g = gx.colwise().sum() / n;
    const Eigen::RowVectorXd mean_gx = gx.cwiseProduct(xhat).colwise().sum() / n;
    Matrix centered = gx.rowwise() - mean_g;
    centered -= xhat * mean_gx.asDiagonal();
    g = centered * tape.inv_std.asDiagonal();
  }
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const Matrix& input = tape.inputs[l];
    store.grad(weights_[l]).noalias() += g * input.transpose();
    store.grad(biases_[l]).col(0) += g.rowwise().sum();
    Matrix gin = store.value(weights_[l]).transpose() * g;
    // The input of layer l > 0 is a ReLU output; ReLU'(0) = 0.
    if (l > 0) gin = gin.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    g = std::move(gin);
  }
  return g;
}

}  // namespace mgn
