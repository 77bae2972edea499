#pragma once

// Minimal dense-network kernel with exact reverse-mode gradients.
//
// Batches are row-major in the modelling sense: every row of a Matrix is one
// item (set element, graph node or example), columns are features.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "revtrack/random.hpp"

namespace revtrack::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Activation : std::uint8_t { kRelu, kIdentity };
enum class Pool : std::uint8_t { kSum, kMean, kMax };

std::string_view to_string(Activation a);
std::string_view to_string(Pool p);
Activation parse_activation(std::string_view text);
Pool parse_pool(std::string_view text);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kIdentity;
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;

  /// dims = {in, h_1, ..., out}. Hidden layers use `hidden`, the last layer
  /// `output`. Weights ~ U(-a, a), a = sqrt(6 / (fan_in + fan_out)); zero bias.
  static Mlp glorot(std::span<const std::size_t> dims, Activation hidden, Activation output,
                    Rng& rng);
  /// Single identity layer W = I, b = 0.
  static Mlp identity(std::size_t dim);
  /// Same shapes, all parameters zero.
  Mlp zeros_like() const;
};

/// Per-layer cached inputs and outputs of a batched forward pass.
struct MlpTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
};

/// Single-vector forward pass. Throws ShapeError on dimension mismatch.
Vector mlp_forward(const Mlp& mlp, const Vector& x);

/// Batched forward (rows are items). Records a tape when `tape` is non-null.
Matrix mlp_forward(const Mlp& mlp, const Matrix& rows, MlpTape* tape = nullptr);

/// Accumulates parameter gradients into `grad` and returns d(rows).
Matrix mlp_backward(const Mlp& mlp, const MlpTape& tape, const Matrix& d_out, Mlp& grad);

/// Segment pooling. Segment b covers rows [offsets[b], offsets[b+1]); every
/// segment must be nonempty. `argmax` receives winners for max pooling.
Matrix pool_forward(Pool pool, const Matrix& rows, std::span<const std::size_t> offsets,
                    std::vector<Index>* argmax = nullptr);
Matrix pool_backward(Pool pool, const Matrix& d_pooled, std::span<const std::size_t> offsets,
                     std::span<const Index> argmax);

/// rho(pool(phi(x) for x in set)).
struct DeepSets {
  Mlp phi;
  Pool pool = Pool::kSum;
  Mlp rho;
};

/// Embeds one set given as rows. Throws ValidationError on an empty set.
Vector deepsets_embed(const DeepSets& params, const Matrix& elements);

/// One message round on the complete directed bipartite graph S -> R,
/// GIN-style update, then a readout over all node states and a head MLP.
struct Bipartite {
  double epsilon = 0.0;
  Mlp node_mlp;
  Pool readout = Pool::kSum;
  Mlp head;
};

/// Receivers update to node_mlp((1+eps) f_r + sum_s f_s); senders have no
/// in-neighbours and update to node_mlp((1+eps) f_s).
Vector bipartite_embed(const Bipartite& params, const Matrix& senders, const Matrix& receivers);

inline constexpr double kProbabilityClamp = 1e-7;

double sigmoid(double z);

/// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(double p, int y);

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n, double lr = 1e-3);
};

/// Bias-corrected Adam update in place; increments state.step.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace revtrack::nn
