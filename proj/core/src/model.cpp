#include "revtrack/model.hpp"

#include <cmath>
#include <fstream>

#include "revtrack/error.hpp"
#include "revtrack/graph_io.hpp"

namespace revtrack {

using nn::Index;
using nn::Matrix;

std::string_view to_string(Arch arch) { return arch == Arch::kBipartite ? "bp" : "ds"; }

Arch parse_arch(std::string_view text) {
  if (text == "ds") return Arch::kDeepSets;
  if (text == "bp") return Arch::kBipartite;
  throw ValidationError("unknown architecture '" + std::string(text) + "' (expected ds or bp)");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim},
          {"hidden_dim", c.hidden_dim},
          {"mlp_layers", c.mlp_layers},
          {"pool", nn::to_string(c.pool)},
          {"readout", nn::to_string(c.readout)},
          {"epsilon", c.epsilon}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.mlp_layers = j.value("mlp_layers", c.mlp_layers);
    c.pool = nn::parse_pool(j.value("pool", std::string("sum")));
    c.readout = nn::parse_pool(j.value("readout", std::string("sum")));
    c.epsilon = j.value("epsilon", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model config: ") + e.what());
  }
  return c;
}

namespace {

std::vector<std::size_t> dims(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out) {
  std::vector<std::size_t> d{in};
  for (std::size_t i = 0; i + 1 < layers; ++i) d.push_back(hidden);
  d.push_back(out);
  return d;
}

template <typename Fn, typename MlpT>
void visit_mlp(const std::string& prefix, MlpT& mlp, Fn&& fn) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    auto& layer = mlp.layers[i];
    const std::string base = prefix + "." + std::to_string(i);
    fn(base + ".weight", layer.weight.data(), layer.weight.rows(), layer.weight.cols());
    fn(base + ".bias", layer.bias.data(), layer.bias.size(), Index{1});
  }
}

template <typename Fn, typename NetVariant>
void visit_net(NetVariant& net, Fn&& fn) {
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DeepSetsNet>) {
          visit_mlp("senders.phi", n.senders.phi, fn);
          visit_mlp("senders.rho", n.senders.rho, fn);
          visit_mlp("receivers.phi", n.receivers.phi, fn);
          visit_mlp("receivers.rho", n.receivers.rho, fn);
          visit_mlp("head", n.head, fn);
        } else {
          fn(std::string("epsilon"), &n.encoder.epsilon, Index{1}, Index{1});
          visit_mlp("node_mlp", n.encoder.node_mlp, fn);
          visit_mlp("head", n.encoder.head, fn);
        }
      },
      net);
}

struct SetTape {
  nn::MlpTape phi;
  nn::MlpTape rho;
  std::vector<Index> argmax;
};

Matrix encode_set(const nn::DeepSets& ds, const Matrix& rows, std::span<const std::size_t> offsets,
                  SetTape* tape) {
  const Matrix encoded = nn::mlp_forward(ds.phi, rows, tape ? &tape->phi : nullptr);
  const Matrix pooled = nn::pool_forward(ds.pool, encoded, offsets, tape ? &tape->argmax : nullptr);
  return nn::mlp_forward(ds.rho, pooled, tape ? &tape->rho : nullptr);
}

void backprop_set(const nn::DeepSets& ds, const SetTape& tape, const Matrix& d_embedding,
                  std::span<const std::size_t> offsets, nn::DeepSets& grad) {
  const Matrix d_pooled = nn::mlp_backward(ds.rho, tape.rho, d_embedding, grad.rho);
  const Matrix d_encoded = nn::pool_backward(ds.pool, d_pooled, offsets, tape.argmax);
  nn::mlp_backward(ds.phi, tape.phi, d_encoded, grad.phi);
}

// Node inputs of the bipartite message round. Pair b owns rows
// [offsets[b], offsets[b+1]): senders first, then receivers.
struct BipartiteInputs {
  Matrix messages;             // (1+eps) f_v + aggregated neighbours
  Matrix own;                  // f_v
  std::vector<std::size_t> offsets{0};
};

BipartiteInputs bipartite_inputs(const PairBatch& batch, double epsilon) {
  const Index total = batch.senders.rows() + batch.receivers.rows();
  const Index d = batch.senders.cols();
  BipartiteInputs in;
  in.messages.resize(total, d);
  in.own.resize(total, d);
  Index row = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto s0 = static_cast<Index>(batch.sender_offsets[b]);
    const auto ns = static_cast<Index>(batch.sender_offsets[b + 1]) - s0;
    const auto r0 = static_cast<Index>(batch.receiver_offsets[b]);
    const auto nr = static_cast<Index>(batch.receiver_offsets[b + 1]) - r0;
    if (ns == 0 || nr == 0) throw ValidationError("bipartite encoder: empty sender or receiver set");
    const auto senders = batch.senders.middleRows(s0, ns);
    const auto receivers = batch.receivers.middleRows(r0, nr);
    in.own.middleRows(row, ns) = senders;
    in.own.middleRows(row + ns, nr) = receivers;
    in.messages.middleRows(row, ns + nr) = (1.0 + epsilon) * in.own.middleRows(row, ns + nr);
    in.messages.middleRows(row + ns, nr).rowwise() += senders.colwise().sum();
    row += ns + nr;
    in.offsets.push_back(static_cast<std::size_t>(row));
  }
  return in;
}

void check_batch(const PairBatch& batch, std::size_t feature_dim) {
  if (batch.receiver_offsets.size() != batch.sender_offsets.size()) {
    throw ShapeError("pair batch: sender and receiver offsets differ in length");
  }
  if (static_cast<std::size_t>(batch.senders.cols()) != feature_dim ||
      static_cast<std::size_t>(batch.receivers.cols()) != feature_dim) {
    throw ShapeError("pair batch: feature dimension " + std::to_string(batch.senders.cols()) +
                     " does not match model input " + std::to_string(feature_dim));
  }
}

}  // namespace

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  if (config.feature_dim == 0 || config.hidden_dim == 0 || config.mlp_layers == 0) {
    throw ValidationError("model dimensions and layer count must be positive");
  }
  Rng rng(seed);
  Model m;
  m.config_ = config;
  const auto h = config.hidden_dim;
  const auto layers = config.mlp_layers;
  const auto relu = nn::Activation::kRelu;
  const auto identity = nn::Activation::kIdentity;
  if (config.arch == Arch::kDeepSets) {
    DeepSetsNet net;
    for (nn::DeepSets* ds : {&net.senders, &net.receivers}) {
      ds->pool = config.pool;
      ds->phi = nn::Mlp::glorot(dims(config.feature_dim, h, layers, h), relu, relu, rng);
      ds->rho = nn::Mlp::glorot(dims(h, h, layers, h), relu, relu, rng);
    }
    net.head = nn::Mlp::glorot(dims(2 * h, h, layers, 1), relu, identity, rng);
    m.net_ = std::move(net);
  } else {
    BipartiteNet net;
    net.encoder.epsilon = config.epsilon;
    net.encoder.readout = config.readout;
    net.encoder.node_mlp = nn::Mlp::glorot(dims(config.feature_dim, h, layers, h), relu, relu, rng);
    net.encoder.head = nn::Mlp::glorot(dims(h, h, layers, 1), relu, identity, rng);
    m.net_ = std::move(net);
  }
  return m;
}

std::vector<double> Model::logits(const PairBatch& batch) const {
  check_batch(batch, config_.feature_dim);
  Matrix out;
  if (const auto* ds = deep_sets()) {
    const Matrix hs = encode_set(ds->senders, batch.senders, batch.sender_offsets, nullptr);
    const Matrix hr = encode_set(ds->receivers, batch.receivers, batch.receiver_offsets, nullptr);
    Matrix joined(hs.rows(), hs.cols() + hr.cols());
    joined << hs, hr;
    out = nn::mlp_forward(ds->head, joined);
  } else {
    const auto& enc = bipartite()->encoder;
    const BipartiteInputs in = bipartite_inputs(batch, enc.epsilon);
    const Matrix states = nn::mlp_forward(enc.node_mlp, in.messages);
    const Matrix pooled = nn::pool_forward(enc.readout, states, in.offsets);
    out = nn::mlp_forward(enc.head, pooled);
  }
  return std::vector<double>(out.data(), out.data() + out.rows());
}

double Model::loss_and_gradient(const PairBatch& batch, std::span<const int> labels, Model& grad,
                                double positive_weight) const {
  check_batch(batch, config_.feature_dim);
  const std::size_t n = batch.size();
  if (labels.size() != n) throw ShapeError("label count does not match batch size");
  if (n == 0) return 0.0;

  // Head input and logits.
  auto loss_grad = [&](const Matrix& logits, Matrix& d_logits) {
    d_logits.resize(logits.rows(), 1);
    double loss = 0.0;
    for (Index i = 0; i < logits.rows(); ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      const double w = y == 1 ? positive_weight : 1.0;
      const double p = nn::sigmoid(logits(i, 0));
      loss += w * nn::bce_loss(p, y);
      d_logits(i, 0) = w * (p - y) / static_cast<double>(n);
    }
    return loss / static_cast<double>(n);
  };

  double loss = 0.0;
  if (const auto* ds = deep_sets()) {
    auto* g = grad.deep_sets();
    SetTape ts;
    SetTape tr;
    nn::MlpTape th;
    const Matrix hs = encode_set(ds->senders, batch.senders, batch.sender_offsets, &ts);
    const Matrix hr = encode_set(ds->receivers, batch.receivers, batch.receiver_offsets, &tr);
    Matrix joined(hs.rows(), hs.cols() + hr.cols());
    joined << hs, hr;
    const Matrix logits = nn::mlp_forward(ds->head, joined, &th);
    Matrix d_logits;
    loss = loss_grad(logits, d_logits);
    const Matrix d_joined = nn::mlp_backward(ds->head, th, d_logits, g->head);
    backprop_set(ds->senders, ts, d_joined.leftCols(hs.cols()), batch.sender_offsets, g->senders);
    backprop_set(ds->receivers, tr, d_joined.rightCols(hr.cols()), batch.receiver_offsets,
                 g->receivers);
  } else {
    const auto& enc = bipartite()->encoder;
    auto& g = grad.bipartite()->encoder;
    const BipartiteInputs in = bipartite_inputs(batch, enc.epsilon);
    nn::MlpTape tn;
    nn::MlpTape th;
    std::vector<Index> argmax;
    const Matrix states = nn::mlp_forward(enc.node_mlp, in.messages, &tn);
    const Matrix pooled = nn::pool_forward(enc.readout, states, in.offsets, &argmax);
    const Matrix logits = nn::mlp_forward(enc.head, pooled, &th);
    Matrix d_logits;
    loss = loss_grad(logits, d_logits);
    const Matrix d_pooled = nn::mlp_backward(enc.head, th, d_logits, g.head);
    const Matrix d_states = nn::pool_backward(enc.readout, d_pooled, in.offsets, argmax);
    const Matrix d_messages = nn::mlp_backward(enc.node_mlp, tn, d_states, g.node_mlp);
    g.epsilon += (d_messages.array() * in.own.array()).sum();
  }
  return loss;
}

Model Model::zeros_like() const {
  Model z = *this;
  z.for_each_tensor([](const std::string&, double* data, Index rows, Index cols) {
    std::fill(data, data + rows * cols, 0.0);
  });
  return z;
}

std::size_t Model::num_parameters() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, const double*, Index rows, Index cols) {
    n += static_cast<std::size_t>(rows * cols);
  });
  return n;
}

std::vector<double> Model::flatten() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for_each_tensor([&](const std::string&, const double* data, Index rows, Index cols) {
    out.insert(out.end(), data, data + rows * cols);
  });
  return out;
}

void Model::assign(std::span<const double> values) {
  if (values.size() != num_parameters()) throw ShapeError("parameter vector has the wrong size");
  std::size_t offset = 0;
  for_each_tensor([&](const std::string&, double* data, Index rows, Index cols) {
    const auto n = static_cast<std::size_t>(rows * cols);
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), n, data);
    offset += n;
  });
}

bool Model::all_finite() const {
  bool finite = true;
  for_each_tensor([&](const std::string&, const double* data, Index rows, Index cols) {
    for (Index i = 0; i < rows * cols; ++i) finite = finite && std::isfinite(data[i]);
  });
  return finite;
}

void Model::for_each_tensor(
    const std::function<void(const std::string&, double*, Index, Index)>& fn) {
  visit_net(net_, fn);
}

void Model::for_each_tensor(
    const std::function<void(const std::string&, const double*, Index, Index)>& fn) const {
  visit_net(const_cast<std::variant<DeepSetsNet, BipartiteNet>&>(net_),
            [&](const std::string& name, double* data, Index rows, Index cols) {
              fn(name, data, rows, cols);
            });
}

bool operator==(const Model& a, const Model& b) {
  return a.config_ == b.config_ && a.flatten() == b.flatten();
}

nlohmann::json checkpoint_to_json(const Model& model) {
  nlohmann::json weights = nlohmann::json::object();
  model.for_each_tensor([&](const std::string& name, const double* data, Index rows, Index cols) {
    auto flat = nlohmann::json::array();
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) flat.push_back(data[c * rows + r]);
    }
    weights[name] = std::move(flat);
  });
  return {{"version", kCheckpointVersion},
          {"arch", to_string(model.arch())},
          {"config", to_json(model.config())},
          {"weights", std::move(weights)}};
}

Model checkpoint_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw LoadError("unsupported checkpoint version " + std::to_string(version));
    }
    ModelConfig config = model_config_from_json(j.at("config"));
    config.arch = parse_arch(j.at("arch").get<std::string>());
    Model model = Model::create(config, 0);
    const auto& weights = j.at("weights");
    std::size_t tensors = 0;
    model.for_each_tensor([&](const std::string& name, double* data, Index rows, Index cols) {
      const auto it = weights.find(name);
      if (it == weights.end()) throw LoadError("checkpoint is missing tensor '" + name + "'");
      if (!it->is_array() || it->size() != static_cast<std::size_t>(rows * cols)) {
        throw LoadError("checkpoint tensor '" + name + "' has the wrong size");
      }
      ++tensors;
      std::size_t k = 0;
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) data[c * rows + r] = (*it)[k++].get<double>();
      }
    });
    if (weights.size() != tensors) throw LoadError("checkpoint has unexpected tensors");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(model).dump() + "\n");
}

Model load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace revtrack
