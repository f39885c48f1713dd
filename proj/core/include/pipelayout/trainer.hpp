#ifndef PIPELAYOUT_TRAINER_HPP_
#define PIPELAYOUT_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pipelayout/mdp.hpp"
#include "pipelayout/observe.hpp"
#include "pipelayout/policy.hpp"
#include "pipelayout/rng.hpp"
#include "pipelayout/scene.hpp"

namespace pipelayout {

struct TrainConfig {
  std::uint64_t total_timesteps = 20'000'000;
  int workers = 28;
  int rollout_size = 8192;
  int minibatch = 1024;
  int epochs = 4;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  // Linear schedule target for the entropy coefficient, reached at
  // total_timesteps; negative keeps entropy_coef constant.
  double entropy_coef_final = -1.0;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;
  FeatureMask feature_mask;
  RewardWeights reward_weights;

  SceneConfig scene_config = SceneConfig::desk({20, 20, 15});
  int hidden_width = 512;
  int trunk_layers = 4;
  int checkpoint_every = 50;  // iterations
  // Stop once the trailing-500-episode success rate reaches this; < 0 runs
  // the full timestep budget.
  double success_exit = -1.0;
  std::string checkpoint_path;  // empty: keep checkpoints in memory only
  std::string log_path;         // empty: no CSV written

  void validate() const;  // throws ConfigError
};

// One iteration's worth of transitions, stored worker-major so parallel
// collection is order-deterministic.
struct RolloutBuffer {
  int obs_dim = 0;
  int size = 0;
  std::vector<double> obs;                    // size × obs_dim
  std::vector<std::uint8_t> actions;          // size
  std::vector<std::uint8_t> masks;            // size × kNumActions
  std::vector<double> log_probs;              // size
  std::vector<double> values;                 // size
  std::vector<double> rewards;                // size
  std::vector<std::uint8_t> terminals;        // Terminal after the step
  std::vector<double> next_values;            // v(s_{t+1}); 0 at true terminals
  std::vector<double> advantages;             // filled by compute_gae
  std::vector<double> returns;                // filled by compute_gae
  std::vector<std::pair<int, int>> segments;  // per-worker (start, length)

  void reset(int n, int obs_dim);
  std::span<const double> observation(int t) const {
    return {obs.data() + static_cast<std::size_t>(t) * obs_dim,
            static_cast<std::size_t>(obs_dim)};
  }
  std::array<bool, kNumActions> mask(int t) const {
    std::array<bool, kNumActions> m;
    for (int a = 0; a < kNumActions; ++a) m[a] = masks[t * kNumActions + a] != 0;
    return m;
  }
};

// GAE over each worker segment. Episodes never cross segments; the chain
// resets at every episode end, bootstrapping from next_values only for
// truncated or still-running boundaries. With normalize, advantages are
// shifted/scaled to zero mean and unit variance over the whole buffer
// (returns stay raw).
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda,
                 bool normalize = true);

struct PpoHyper {
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

struct PpoBatchStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_frac = 0.0;
};

// Mean PPO loss over the indexed samples:
//   max(-A*rho, -A*clip(rho)) + value_coef*(ret - v)^2 - entropy_coef*H.
double ppo_batch_loss(const PolicyNet& net, const RolloutBuffer& buffer,
                      std::span<const int> indices, const PpoHyper& hyper,
                      PpoBatchStats* stats = nullptr);

// Same loss; also accumulates the mean analytic gradient into `grad`
// (zeroed first). Gradients with respect to masked logits are exactly zero;
// at the clip boundary the unclipped branch's gradient is used.
double ppo_batch_loss_grad(const PolicyNet& net, const RolloutBuffer& buffer,
                           std::span<const int> indices, const PpoHyper& hyper,
                           std::span<double> grad,
                           PpoBatchStats* stats = nullptr);

struct EpisodeStat {
  double episode_return = 0.0;
  int length = 0;
  int elbows = 0;
  bool success = false;
};

struct IterStats {
  int iter = 0;
  std::uint64_t timesteps = 0;
  double mean_return = 0.0;   // over episodes finished this iteration
  double success_rate = 0.0;  // trailing 500 episodes
  double mean_length = 0.0;
  double mean_elbows = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_frac = 0.0;
  double wall_s = 0.0;
};

std::string train_log_header();
std::string train_log_row(const IterStats& s);

struct TrainResult {
  PolicyNet net;
  std::vector<IterStats> log;
  std::uint64_t timesteps = 0;
  double final_success_rate = 0.0;  // trailing 500 at exit
  bool reached_success_exit = false;
  std::uint64_t episodes = 0;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  // One collect/gae/update cycle; returns the log row.
  IterStats run_iteration();

  // Full loop with logging and checkpointing.
  TrainResult run();

  const RolloutBuffer& collect_rollouts();
  PpoBatchStats ppo_update();

  const PolicyNet& net() const { return net_; }
  PolicyNet& net() { return net_; }
  const TrainConfig& config() const { return config_; }
  const std::deque<std::uint8_t>& trailing_success() const { return trailing_; }
  double trailing_success_rate() const;
  std::uint64_t episodes_finished() const { return episodes_; }
  std::uint64_t timesteps_done() const { return timesteps_; }
  const std::vector<EpisodeStat>& last_iteration_episodes() const {
    return iter_episodes_;
  }

 private:
  struct Worker {
    PipeEnv env;
    RngStream act_rng;
    RngStream scene_rng;
    Observation obs;
    bool need_reset = true;
    std::vector<EpisodeStat> episodes;
  };

  void collect_worker(int w, int start, int quota);
  void write_checkpoint(const std::string& path);

  TrainConfig config_;
  PolicyNet net_;
  RolloutBuffer buffer_;
  std::vector<Worker> workers_;
  RngStream shuffle_rng_;

  // Adam state.
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
  std::int64_t adam_t_ = 0;

  std::uint64_t timesteps_ = 0;
  int iter_ = 0;
  std::uint64_t episodes_ = 0;
  std::deque<std::uint8_t> trailing_;
  std::vector<EpisodeStat> iter_episodes_;
};

// Convenience wrapper: build a Trainer, run it, write artifacts.
TrainResult train(const TrainConfig& config);

}  // namespace pipelayout

#endif  // PIPELAYOUT_TRAINER_HPP_
