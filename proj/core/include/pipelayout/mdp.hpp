#ifndef PIPELAYOUT_MDP_HPP_
#define PIPELAYOUT_MDP_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pipelayout/cell.hpp"
#include "pipelayout/observe.hpp"
#include "pipelayout/scene.hpp"

namespace pipelayout {

struct RewardWeights {
  double r_success = 100.0;
  double r_closer = 1.0;
  double r_further = -1.0;
  double r_base = -0.5;
  double r_elbow = -5.0;
  double w_install = 0.15;

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

enum class Terminal { Running = 0, Success, Trapped, Truncated };

const char* terminal_name(Terminal t);

// Additive reward terms of one step. total() is the reward, exactly.
struct RewardBreakdown {
  double base = 0.0;
  double closer_further = 0.0;
  double elbow = 0.0;
  double install = 0.0;
  double success = 0.0;

  double total() const { return base + closer_further + elbow + install + success; }
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  Terminal terminal = Terminal::Running;
  RewardBreakdown breakdown;
};

// Pipe head plus the cells already occupied by the pipe body.
struct AgentState {
  Cell cur;
  std::optional<Dir> prev_dir;
  std::vector<Cell> path;               // ordered, starts at scene.start
  std::vector<std::uint8_t> visited;    // bitmap over cell indices
  int steps_taken = 0;
};

Observation observe(const Scene& scene, const AgentState& state,
                    const FeatureMask& mask = {});

// Totals of one finished episode, enough to evaluate the closed-form return.
struct EpisodeSummary {
  Cell start;
  Cell end;
  int steps = 0;        // L: moves taken
  int elbows = 0;       // E: direction changes charged
  double install_sum = 0.0;  // S: sum of per-step min free distances
  Terminal terminal = Terminal::Running;
  double total_reward = 0.0;  // accumulated step rewards
};

// Closed form of the summed step rewards of a successful episode:
//   r_success + r_closer*(L+D)/2 + r_further*(L-D)/2
//     + r_base*L + r_elbow*E - w_install*S,  D = manhattan(start,end).
// Each axis move changes the Manhattan distance by exactly 1, so the
// closer/further counts are determined by L and D alone. Agreement with the
// accumulated reward is an exact arithmetic identity.
double episode_return_identity(const EpisodeSummary& summary,
                               const RewardWeights& weights = {});

// The episodic environment. One instance is single-stream; independent
// instances share nothing mutable.
class PipeEnv {
 public:
  explicit PipeEnv(RewardWeights weights = {}, FeatureMask mask = {});

  Observation reset(Scene scene);
  Observation reset(std::uint64_t seed, const SceneConfig& config);

  // mask[d] = neighbor in bounds, unblocked, not part of the pipe.
  std::array<bool, kNumDirs> action_mask() const;

  // Throws IllegalAction if the mask forbids `action`.
  StepOutcome step(int action);

  const Scene& scene() const { return scene_; }
  const AgentState& state() const { return state_; }
  Terminal terminal() const { return terminal_; }
  bool running() const { return terminal_ == Terminal::Running; }
  int max_steps() const { return max_steps_; }
  const RewardWeights& weights() const { return weights_; }
  const FeatureMask& feature_mask() const { return feature_mask_; }
  EpisodeSummary summary() const;

 private:
  RewardWeights weights_;
  FeatureMask feature_mask_;
  Scene scene_;
  std::optional<ObservationEncoder> encoder_;
  AgentState state_;
  Terminal terminal_ = Terminal::Running;
  int max_steps_ = 0;
  int elbows_ = 0;
  double install_sum_ = 0.0;
  double total_reward_ = 0.0;
};

}  // namespace pipelayout

#endif  // PIPELAYOUT_MDP_HPP_
