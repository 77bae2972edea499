#include "revtrack/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "revtrack/error.hpp"

namespace revtrack::nn {

std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

std::string_view to_string(Pool p) {
  switch (p) {
    case Pool::kMean:
      return "mean";
    case Pool::kMax:
      return "max";
    case Pool::kSum:
      break;
  }
  return "sum";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "identity") return Activation::kIdentity;
  throw ValidationError("unknown activation '" + std::string(text) + "'");
}

Pool parse_pool(std::string_view text) {
  if (text == "sum") return Pool::kSum;
  if (text == "mean") return Pool::kMean;
  if (text == "max") return Pool::kMax;
  throw ValidationError("unknown pooling '" + std::string(text) + "'");
}

std::size_t Mlp::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

Mlp Mlp::glorot(std::span<const std::size_t> dims, Activation hidden, Activation output, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("an MLP needs at least input and output dimensions");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto fan_in = static_cast<Index>(dims[i]);
    const auto fan_out = static_cast<Index>(dims[i + 1]);
    if (fan_in == 0 || fan_out == 0) throw ShapeError("MLP dimensions must be positive");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) layer.weight(r, c) = uniform(rng, -a, a);
    }
    layer.bias = Vector::Zero(fan_out);
    layer.activation = i + 2 == dims.size() ? output : hidden;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Mlp Mlp::identity(std::size_t dim) {
  const auto n = static_cast<Index>(dim);
  return Mlp{{DenseLayer{Matrix::Identity(n, n), Vector::Zero(n), Activation::kIdentity}}};
}

Mlp Mlp::zeros_like() const {
  Mlp out = *this;
  for (auto& layer : out.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return out;
}

Vector mlp_forward(const Mlp& mlp, const Vector& x) {
  if (mlp.layers.empty()) return x;
  if (static_cast<std::size_t>(x.size()) != mlp.input_dim()) {
    throw ShapeError("mlp input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(mlp.input_dim()));
  }
  const Matrix out = mlp_forward(mlp, Matrix(x.transpose()));
  return out.row(0).transpose();
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& rows, MlpTape* tape) {
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Matrix current = rows;
  for (const DenseLayer& layer : mlp.layers) {
    if (current.cols() != layer.weight.cols()) {
      throw ShapeError("layer expects " + std::to_string(layer.weight.cols()) + " inputs, got " +
                       std::to_string(current.cols()));
    }
    Matrix next = current * layer.weight.transpose();
    next.rowwise() += layer.bias.transpose();
    if (layer.activation == Activation::kRelu) next = next.cwiseMax(0.0);
    if (tape) tape->inputs.push_back(std::move(current));
    current = std::move(next);
    if (tape) tape->outputs.push_back(current);
  }
  return current;
}

Matrix mlp_backward(const Mlp& mlp, const MlpTape& tape, const Matrix& d_out, Mlp& grad) {
  Matrix delta = d_out;
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    const DenseLayer& layer = mlp.layers[i];
    if (layer.activation == Activation::kRelu) {
      delta = (tape.outputs[i].array() > 0.0).select(delta, 0.0);
    }
    grad.layers[i].weight.noalias() += delta.transpose() * tape.inputs[i];
    grad.layers[i].bias.noalias() += delta.colwise().sum().transpose();
    delta = delta * layer.weight;
  }
  return delta;
}

Matrix pool_forward(Pool pool, const Matrix& rows, std::span<const std::size_t> offsets,
                    std::vector<Index>* argmax) {
  const auto segments = static_cast<Index>(offsets.size()) - 1;
  const Index cols = rows.cols();
  Matrix out(segments, cols);
  if (pool == Pool::kMax && argmax) argmax->assign(static_cast<std::size_t>(segments * cols), 0);
  for (Index b = 0; b < segments; ++b) {
    const auto begin = static_cast<Index>(offsets[static_cast<std::size_t>(b)]);
    const auto len = static_cast<Index>(offsets[static_cast<std::size_t>(b) + 1]) - begin;
    if (len <= 0) throw ValidationError("cannot pool an empty set");
    const auto block = rows.middleRows(begin, len);
    switch (pool) {
      case Pool::kSum:
        out.row(b) = block.colwise().sum();
        break;
      case Pool::kMean:
        out.row(b) = block.colwise().sum() / static_cast<double>(len);
        break;
      case Pool::kMax:
        for (Index c = 0; c < cols; ++c) {
          Index best = 0;
          out(b, c) = block.col(c).maxCoeff(&best);
          if (argmax) (*argmax)[static_cast<std::size_t>(b * cols + c)] = begin + best;
        }
        break;
    }
  }
  return out;
}

Matrix pool_backward(Pool pool, const Matrix& d_pooled, std::span<const std::size_t> offsets,
                     std::span<const Index> argmax) {
  const auto segments = static_cast<Index>(offsets.size()) - 1;
  const Index cols = d_pooled.cols();
  Matrix d_rows = Matrix::Zero(static_cast<Index>(offsets.back()), cols);
  for (Index b = 0; b < segments; ++b) {
    const auto begin = static_cast<Index>(offsets[static_cast<std::size_t>(b)]);
    const auto len = static_cast<Index>(offsets[static_cast<std::size_t>(b) + 1]) - begin;
    switch (pool) {
      case Pool::kSum:
        d_rows.middleRows(begin, len).rowwise() = d_pooled.row(b);
        break;
      case Pool::kMean:
        d_rows.middleRows(begin, len).rowwise() = d_pooled.row(b) / static_cast<double>(len);
        break;
      case Pool::kMax:
        for (Index c = 0; c < cols; ++c) {
          d_rows(argmax[static_cast<std::size_t>(b * cols + c)], c) += d_pooled(b, c);
        }
        break;
    }
  }
  return d_rows;
}

Vector deepsets_embed(const DeepSets& params, const Matrix& elements) {
  if (elements.rows() == 0) throw ValidationError("deep sets: empty input set");
  if (static_cast<std::size_t>(elements.cols()) != params.phi.input_dim()) {
    throw ShapeError("deep sets: element dimension " + std::to_string(elements.cols()) +
                     " does not match phi input " + std::to_string(params.phi.input_dim()));
  }
  const Matrix encoded = mlp_forward(params.phi, elements);
  const std::size_t offsets[] = {0, static_cast<std::size_t>(elements.rows())};
  const Matrix pooled = pool_forward(params.pool, encoded, offsets);
  return mlp_forward(params.rho, pooled).row(0).transpose();
}

Vector bipartite_embed(const Bipartite& params, const Matrix& senders, const Matrix& receivers) {
  if (senders.rows() == 0 || receivers.rows() == 0) {
    throw ValidationError("bipartite encoder: sender and receiver sets must be nonempty");
  }
  if (senders.cols() != receivers.cols() ||
      static_cast<std::size_t>(senders.cols()) != params.node_mlp.input_dim()) {
    throw ShapeError("bipartite encoder: feature dimension mismatch");
  }
  const double self = 1.0 + params.epsilon;
  Matrix nodes(senders.rows() + receivers.rows(), senders.cols());
  nodes.topRows(senders.rows()) = self * senders;
  nodes.bottomRows(receivers.rows()) = self * receivers;
  nodes.bottomRows(receivers.rows()).rowwise() += senders.colwise().sum();
  const Matrix states = mlp_forward(params.node_mlp, nodes);
  const std::size_t offsets[] = {0, static_cast<std::size_t>(nodes.rows())};
  const Matrix pooled = pool_forward(params.readout, states, offsets);
  return mlp_forward(params.head, pooled).row(0).transpose();
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

AdamState AdamState::for_size(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace revtrack::nn
