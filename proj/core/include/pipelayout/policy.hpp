#ifndef PIPELAYOUT_POLICY_HPP_
#define PIPELAYOUT_POLICY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pipelayout/observe.hpp"
#include "pipelayout/rng.hpp"

namespace pipelayout {

inline constexpr int kNumActions = 6;

enum class Activation : std::uint8_t { Linear = 0, Tanh = 1 };

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::Linear;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct PolicyOutput {
  std::array<double, kNumActions> logits;
  double value = 0.0;
};

// Shared-trunk actor-critic MLP. Parameters live in one flat 64-bit vector
// (row-major weights then bias, per layer, trunk then actor then critic) so
// the optimizer and the finite-difference tests address them uniformly.
class PolicyNet {
 public:
  PolicyNet() : PolicyNet(kObservationSize, 512, 4) {}
  PolicyNet(int input_width, int hidden_width, int trunk_layers);
  explicit PolicyNet(std::vector<LayerSpec> layers);

  // Orthogonal init, gain sqrt(2) on trunk, 0.01 actor, 1.0 critic.
  void init_params(std::uint64_t seed);

  // Throws ShapeMismatch unless |obs| equals the input width.
  PolicyOutput forward(std::span<const double> obs) const;

  // Post-activation values of the input and every trunk layer, laid out
  // contiguously; enough to backpropagate (tanh' = 1 - a^2).
  struct Cache {
    std::vector<double> acts;
  };
  PolicyOutput forward_cached(std::span<const double> obs, Cache& cache) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits) and
  // d(loss)/d(value) for the sample cached in `cache`.
  void backward(const Cache& cache,
                const std::array<double, kNumActions>& dlogits, double dvalue,
                std::span<double> grad) const;

  const std::vector<LayerSpec>& layers() const { return layers_; }
  int input_width() const { return layers_.front().in; }
  int trunk_width() const { return layers_[layers_.size() - 2].in; }
  int trunk_layer_count() const { return static_cast<int>(layers_.size()) - 2; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t weight_offset(int layer) const { return weight_off_[layer]; }
  std::size_t bias_offset(int layer) const { return bias_off_[layer]; }

  // Checkpoint metadata, carried through save/load.
  std::uint64_t obs_layout_hash = 0;
  std::uint64_t trained_timesteps = 0;
  std::uint64_t train_seed = 0;

 private:
  std::vector<LayerSpec> layers_;  // trunk layers, then actor, then critic
  std::vector<double> params_;
  std::vector<std::size_t> weight_off_;
  std::vector<std::size_t> bias_off_;
};

// Probabilities over the six actions with masked entries exactly zero.
// Throws AllMasked when no action is legal.
struct MaskedDistribution {
  std::array<double, kNumActions> probs;
  double entropy = 0.0;
};
MaskedDistribution masked_distribution(
    const std::array<double, kNumActions>& logits,
    const std::array<bool, kNumActions>& mask);

enum class ActMode { Sample, Greedy };

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

// Greedy breaks probability ties toward the lowest action index; sampling
// consumes exactly one unit draw from `rng`.
ActResult act(const PolicyNet& net, std::span<const double> obs,
              const std::array<bool, kNumActions>& mask, ActMode mode,
              RngStream& rng);

// IEEE CRC32 (reflected, poly 0xEDB88320), used by the checkpoint format.
std::uint32_t crc32(const void* data, std::size_t size);

void save_checkpoint(const PolicyNet& net, const std::string& path);
PolicyNet load_checkpoint(const std::string& path);
// Additionally throws LayoutMismatch if the stored hash differs.
PolicyNet load_checkpoint(const std::string& path,
                          std::uint64_t expected_layout_hash);

}  // namespace pipelayout

#endif  // PIPELAYOUT_POLICY_HPP_
