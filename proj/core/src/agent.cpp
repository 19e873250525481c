#include "kraft/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kraft/error.hpp"

namespace kraft {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("agent gamma must lie in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
    throw InputError("agent epsilon must satisfy 0 <= end <= start <= 1");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw InputError("agent epsilon_decay must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw InputError("agent learning_rate must be positive");
  if (minibatch < 1) throw InputError("agent minibatch must be at least 1");
  if (sync_period < 1) throw InputError("agent sync_period must be at least 1");
  if (replay_capacity < 1) throw InputError("agent replay_capacity must be at least 1");
  for (std::size_t h : hidden)
    if (h < 1) throw InputError("agent hidden layer sizes must be positive");
}

namespace {

std::vector<Layer> make_layers(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("QNetwork needs at least input and output sizes");
  for (std::size_t s : sizes)
    if (s == 0) throw std::invalid_argument("QNetwork layer sizes must be positive");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    layers.push_back({sizes[l], sizes[l + 1], std::vector<double>(sizes[l] * sizes[l + 1], 0.0),
                      std::vector<double>(sizes[l + 1], 0.0)});
  return layers;
}

// Pre-activations and activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
};

Trace forward_trace(const QNetwork& net, std::span<const double> input) {
  Trace t;
  t.act.emplace_back(input.begin(), input.end());
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const auto& x = t.act.back();
    std::vector<double> y(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double s = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * x[i];
      y[o] += s;
      if (l + 1 < layers.size()) y[o] = std::max(0.0, y[o]);
    }
    t.act.push_back(std::move(y));
  }
  return t;
}

double td_target(const QNetwork& target, const Transition& t, double gamma) {
  if (t.terminal) return t.r;
  const auto q = q_forward(target, t.s_next);
  return t.r + gamma * *std::max_element(q.begin(), q.end());
}

void check_batch(const QNetwork& net, std::span<const Transition> batch) {
  if (batch.empty()) throw std::invalid_argument("td step: empty batch");
  for (const auto& t : batch)
    if (t.a >= net.output_size()) throw std::invalid_argument("td step: action index out of range");
}

}  // namespace

QNetwork::QNetwork(std::vector<std::size_t> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
  layers_ = make_layers(sizes_);
  Rng rng(seed);
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
  }
}

QNetwork QNetwork::zeros(std::vector<std::size_t> sizes) {
  QNetwork net;
  net.sizes_ = std::move(sizes);
  net.layers_ = make_layers(net.sizes_);
  return net;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> QNetwork::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void QNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw std::invalid_argument("QNetwork: parameter count mismatch");
  auto it = params.begin();
  for (auto& l : layers_) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

std::vector<double> scale_state(const FeatureVector& phi, std::size_t feature_count) {
  const double k = 1.0 / (1.0 + static_cast<double>(feature_count));
  std::vector<double> x(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) x[i] = static_cast<double>(phi[i]) * k;
  return x;
}

std::vector<double> q_forward(const QNetwork& net, std::span<const double> input) {
  if (net.sizes().empty()) throw std::invalid_argument("q_forward: uninitialized network");
  if (input.size() != net.input_size())
    throw std::invalid_argument("q_forward: input has " + std::to_string(input.size()) + " entries, network expects " +
                                std::to_string(net.input_size()));
  return std::move(forward_trace(net, input).act.back());
}

double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch, double gamma) {
  check_batch(net, batch);
  double loss = 0.0;
  for (const auto& t : batch) {
    const double diff = td_target(target, t, gamma) - q_forward(net, t.s)[t.a];
    loss += diff * diff;
  }
  return loss / static_cast<double>(batch.size());
}

std::pair<double, std::vector<double>> td_gradient(const QNetwork& net, const QNetwork& target,
                                                   std::span<const Transition> batch, double gamma) {
  check_batch(net, batch);
  const auto& layers = net.layers();
  // Offsets of each layer's block in the flat parameter vector.
  std::vector<std::size_t> offset(layers.size());
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = total;
    total += layers[l].weights.size() + layers[l].bias.size();
  }
  std::vector<double> grad(total, 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;

  for (const auto& t : batch) {
    const double y = td_target(target, t, gamma);
    if (t.s.size() != net.input_size()) throw std::invalid_argument("td step: state dimension mismatch");
    const Trace tr = forward_trace(net, t.s);
    const double residual = tr.act.back()[t.a] - y;
    loss += residual * residual;

    std::vector<double> delta(layers.back().out, 0.0);
    delta[t.a] = 2.0 * residual * inv_b;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Layer& layer = layers[l];
      const auto& x = tr.act[l];
      double* gw = grad.data() + offset[l];
      double* gb = gw + layer.weights.size();
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (delta[o] == 0.0) continue;
        gb[o] += delta[o];
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) {
          gw[o * layer.in + i] += delta[o] * x[i];
          prev[i] += delta[o] * w[i];
        }
      }
      if (l > 0)
        for (std::size_t i = 0; i < layer.in; ++i)
          if (x[i] <= 0.0) prev[i] = 0.0;
      delta = std::move(prev);
    }
  }
  return {loss * inv_b, std::move(grad)};
}

double td_train_step(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                     const AgentConfig& cfg) {
  auto [loss, grad] = td_gradient(net, target, batch, cfg.gamma);
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
  net.set_parameters(params);
  return loss;
}

std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("select_action: empty q-values");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("select_action: epsilon outside [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.index(q.size());
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

double epsilon_at(std::size_t step, const AgentConfig& cfg) {
  return std::max(cfg.epsilon_end, cfg.epsilon_start * std::pow(cfg.epsilon_decay, static_cast<double>(step)));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t size, Rng& rng) const {
  if (items_.empty()) throw std::invalid_argument("ReplayBuffer: sample from empty buffer");
  if (size == 0) throw std::invalid_argument("ReplayBuffer: sample size must be positive");
  std::vector<Transition> batch;
  batch.reserve(size);
  for (std::size_t i = 0; i < size; ++i) batch.push_back(items_[rng.index(items_.size())]);
  return batch;
}

std::vector<Transition> ReplayBuffer::contents() const {
  if (items_.size() < capacity_) return items_;
  std::vector<Transition> out(items_.begin() + static_cast<std::ptrdiff_t>(next_), items_.end());
  out.insert(out.end(), items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(next_));
  return out;
}

void sync_target(const QNetwork& net, QNetwork& target) {
  if (!net.same_architecture(target)) throw std::invalid_argument("sync_target: architecture mismatch");
  target = net;
}

DqnAgent::DqnAgent(std::size_t n_inputs, std::size_t n_actions, AgentConfig cfg)
    : cfg_(std::move(cfg)), buffer_(cfg_.replay_capacity), rng_(derive_seed(cfg_.seed, 0x61637473ULL)) {
  cfg_.validate();
  std::vector<std::size_t> sizes{n_inputs};
  sizes.insert(sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  sizes.push_back(n_actions);
  net_ = QNetwork(sizes, derive_seed(cfg_.seed, 0x6e6574ULL));
  target_ = net_;
}

std::size_t DqnAgent::act(std::span<const double> input) {
  const double eps = epsilon_at(selections_++, cfg_);
  return select_action(q_forward(net_, input), eps, rng_);
}

std::size_t DqnAgent::greedy(std::span<const double> input) const {
  const auto q = q_forward(net_, input);
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::optional<double> DqnAgent::train_step() {
  if (buffer_.size() < cfg_.minibatch) return std::nullopt;
  const auto batch = buffer_.sample(cfg_.minibatch, rng_);
  const double loss = td_train_step(net_, target_, batch, cfg_);
  if (++train_steps_ % cfg_.sync_period == 0) sync_target(net_, target_);
  return loss;
}

nlohmann::json network_to_json(const QNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) layers.push_back({{"weights", l.weights}, {"bias", l.bias}});
  return {{"sizes", net.sizes()}, {"layers", layers}};
}

QNetwork network_from_json(const nlohmann::json& j) {
  try {
    auto net = QNetwork::zeros(j.at("sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != net.layers().size())
      throw InputError("network checkpoint: layer count does not match sizes");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = net.layers()[l];
      auto w = layers[l].at("weights").get<std::vector<double>>();
      auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != layer.weights.size() || b.size() != layer.bias.size())
        throw InputError("network checkpoint: layer " + std::to_string(l) + " has the wrong shape");
      layer.weights = std::move(w);
      layer.bias = std::move(b);
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("network checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("network checkpoint: ") + e.what());
  }
}

}  // namespace kraft
