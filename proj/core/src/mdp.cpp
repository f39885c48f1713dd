#include "pipelayout/mdp.hpp"

#include <string>

#include "pipelayout/errors.hpp"

namespace pipelayout {

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Running: return "running";
    case Terminal::Success: return "success";
    case Terminal::Trapped: return "trapped";
    case Terminal::Truncated: return "truncated";
  }
  return "?";
}

Observation observe(const Scene& scene, const AgentState& state,
                    const FeatureMask& mask) {
  return observe(scene, state.cur, state.prev_dir, mask);
}

double episode_return_identity(const EpisodeSummary& s,
                               const RewardWeights& w) {
  if (s.terminal != Terminal::Success) {
    throw NotSuccessful("return identity needs a successful episode, got " +
                        std::string(terminal_name(s.terminal)));
  }
  double len = s.steps;
  double dist = manhattan(s.start, s.end);
  double closer = (len + dist) / 2.0;
  double further = (len - dist) / 2.0;
  return w.r_success + w.r_closer * closer + w.r_further * further +
         w.r_base * len + w.r_elbow * s.elbows - w.w_install * s.install_sum;
}

PipeEnv::PipeEnv(RewardWeights weights, FeatureMask mask)
    : weights_(weights), feature_mask_(mask) {}

Observation PipeEnv::reset(Scene scene) {
  scene_ = std::move(scene);
  encoder_.emplace(scene_, feature_mask_);
  state_.cur = scene_.start;
  state_.prev_dir.reset();
  state_.path.assign(1, scene_.start);
  state_.visited.assign(scene_.cell_count(), 0);
  state_.visited[scene_.cell_index(scene_.start)] = 1;
  state_.steps_taken = 0;
  terminal_ = Terminal::Running;
  max_steps_ = 4 * (scene_.dims.x + scene_.dims.y + scene_.dims.z);
  elbows_ = 0;
  install_sum_ = 0.0;
  total_reward_ = 0.0;
  return encoder_->encode(state_.cur, state_.prev_dir);
}

Observation PipeEnv::reset(std::uint64_t seed, const SceneConfig& config) {
  return reset(generate_scene(seed, config));
}

std::array<bool, kNumDirs> PipeEnv::action_mask() const {
  std::array<bool, kNumDirs> mask;
  for (int d = 0; d < kNumDirs; ++d) {
    Cell n = state_.cur + kDirOffsets[d];
    mask[d] = !encoder_->grid().blocked(n) &&
              !state_.visited[scene_.cell_index(n)];
  }
  return mask;
}

StepOutcome PipeEnv::step(int action) {
  if (terminal_ != Terminal::Running) {
    throw IllegalAction("step on a finished episode");
  }
  if (action < 0 || action >= kNumDirs || !action_mask()[action]) {
    throw IllegalAction("action " + std::to_string(action) + " is masked at " +
                        to_string(state_.cur));
  }
  Dir dir = static_cast<Dir>(action);
  Cell next = state_.cur + dir_offset(dir);

  StepOutcome out;
  out.breakdown.base = weights_.r_base;
  out.breakdown.closer_further =
      manhattan(next, scene_.end) < manhattan(state_.cur, scene_.end)
          ? weights_.r_closer
          : weights_.r_further;
  bool elbow = state_.prev_dir.has_value() && *state_.prev_dir != dir;
  if (elbow) {
    out.breakdown.elbow = weights_.r_elbow;
    ++elbows_;
  }
  int clearance = encoder_->grid().min_free_distance(next);
  out.breakdown.install = -weights_.w_install * clearance;
  install_sum_ += clearance;

  state_.cur = next;
  state_.prev_dir = dir;
  state_.path.push_back(next);
  state_.visited[scene_.cell_index(next)] = 1;
  ++state_.steps_taken;

  if (next == scene_.end) {
    out.breakdown.success = weights_.r_success;
    terminal_ = Terminal::Success;
  } else {
    auto mask = action_mask();
    bool any = false;
    for (bool b : mask) any = any || b;
    if (!any) {
      terminal_ = Terminal::Trapped;
    } else if (state_.steps_taken >= max_steps_) {
      terminal_ = Terminal::Truncated;
    }
  }

  out.reward = out.breakdown.total();
  total_reward_ += out.reward;
  out.terminal = terminal_;
  out.observation = encoder_->encode(state_.cur, state_.prev_dir);
  return out;
}

EpisodeSummary PipeEnv::summary() const {
  EpisodeSummary s;
  s.start = scene_.start;
  s.end = scene_.end;
  s.steps = state_.steps_taken;
  s.elbows = elbows_;
  s.install_sum = install_sum_;
  s.terminal = terminal_;
  s.total_reward = total_reward_;
  return s;
}

}  // namespace pipelayout
