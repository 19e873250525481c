#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kraft/rng.hpp"
#include "kraft/vectorize.hpp"

namespace kraft {

struct AgentConfig {
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay = 0.995;
  double learning_rate = 0.1;
  std::size_t minibatch = 32;
  std::size_t sync_period = 50;
  std::size_t replay_capacity = 10'000;
  std::vector<std::size_t> hidden = {64, 64};
  std::uint64_t seed = 0;

  /// Throws InputError on out-of-range values.
  void validate() const;
};

/// Fully connected layer; `weights` is out x in, row-major.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// ReLU hidden layers, identity output.
class QNetwork {
 public:
  QNetwork() = default;
  /// Glorot-uniform weights, zero biases.
  QNetwork(std::vector<std::size_t> sizes, std::uint64_t seed);
  static QNetwork zeros(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Flat view: each layer's weights then its biases.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  bool same_architecture(const QNetwork& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
};

/// Network input for a semantic state vector: counts divided by 1 + |F|.
std::vector<double> scale_state(const FeatureVector& phi, std::size_t feature_count);

/// Q-values for an already scaled input. Throws on dimension mismatch.
std::vector<double> q_forward(const QNetwork& net, std::span<const double> input);

/// States are stored as scaled network inputs.
struct Transition {
  std::vector<double> s;
  std::size_t a = 0;
  double r = 0.0;
  std::vector<double> s_next;
  bool terminal = false;
};

/// Mean squared TD error against the frozen target network.
double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch, double gamma);

/// td_loss and its gradient with respect to `net` (flat parameter layout).
std::pair<double, std::vector<double>> td_gradient(const QNetwork& net, const QNetwork& target,
                                                   std::span<const Transition> batch, double gamma);

/// One plain SGD step on the TD loss; returns the loss before the step.
double td_train_step(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                     const AgentConfig& cfg);

/// Greedy with probability 1-epsilon (lowest index on ties), else uniform.
std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng);

double epsilon_at(std::size_t step, const AgentConfig& cfg);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10'000);

  void push(Transition t);
  /// Uniform with replacement. Throws on an empty buffer or size 0.
  std::vector<Transition> sample(std::size_t size, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t pushed() const { return pushed_; }
  /// Contents from oldest to newest.
  std::vector<Transition> contents() const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
  std::size_t pushed_ = 0;
};

/// Copies the main parameters into the target. Throws on architecture mismatch.
void sync_target(const QNetwork& net, QNetwork& target);

/// Owns the networks, replay buffer and schedules.
class DqnAgent {
 public:
  DqnAgent(std::size_t n_inputs, std::size_t n_actions, AgentConfig cfg);

  /// Epsilon-greedy choice; advances the epsilon schedule.
  std::size_t act(std::span<const double> input);
  std::size_t greedy(std::span<const double> input) const;
  void remember(Transition t) { buffer_.push(std::move(t)); }
  /// One TD step once the buffer holds a minibatch; syncs the target every
  /// `sync_period` steps. Returns the loss when a step ran.
  std::optional<double> train_step();

  const QNetwork& network() const { return net_; }
  const QNetwork& target_network() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const AgentConfig& config() const { return cfg_; }
  std::size_t selections() const { return selections_; }
  std::size_t train_steps() const { return train_steps_; }
  double epsilon() const { return epsilon_at(selections_, cfg_); }

 private:
  AgentConfig cfg_;
  QNetwork net_;
  QNetwork target_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::size_t selections_ = 0;
  std::size_t train_steps_ = 0;
};

nlohmann::json network_to_json(const QNetwork& net);
/// Throws InputError on malformed documents.
QNetwork network_from_json(const nlohmann::json& j);

}  // namespace kraft
