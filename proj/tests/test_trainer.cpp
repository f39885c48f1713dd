#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pipelayout/errors.hpp"
#include "pipelayout/io.hpp"
#include "pipelayout/trainer.hpp"

using namespace pipelayout;

namespace {

TrainConfig tiny_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.total_timesteps = 96;
  cfg.workers = 3;
  cfg.rollout_size = 96;
  cfg.minibatch = 48;
  cfg.epochs = 2;
  cfg.seed = seed;
  cfg.scene_config = SceneConfig::desk({8, 8, 6});
  cfg.hidden_width = 8;
  cfg.trunk_layers = 2;
  return cfg;
}

RolloutBuffer random_buffer(RngStream& rng, int size,
                            const std::vector<int>& segment_lengths) {
  RolloutBuffer b;
  b.reset(size, 4);
  int start = 0;
  for (int len : segment_lengths) {
    b.segments.emplace_back(start, len);
    start += len;
  }
  REQUIRE(start == size);
  for (int t = 0; t < size; ++t) {
    for (int k = 0; k < 4; ++k) b.obs[t * 4 + k] = rng.unit();
    b.actions[t] = static_cast<std::uint8_t>(rng.bounded(kNumActions));
    b.rewards[t] = rng.gaussian() * 2.0;
    b.values[t] = rng.gaussian();
    b.log_probs[t] = -rng.unit();
    b.terminals[t] = static_cast<std::uint8_t>(Terminal::Running);
    for (int a = 0; a < kNumActions; ++a) b.masks[t * kNumActions + a] = 1;
  }
  // next_values chain like collected rollouts: v(s_{t+1}) inside a segment,
  // a fresh bootstrap estimate at segment cuts.
  for (const auto& [start, len] : b.segments) {
    for (int t = start; t < start + len - 1; ++t) b.next_values[t] = b.values[t + 1];
    b.next_values[start + len - 1] = rng.gaussian();
  }
  return b;
}

void set_terminal(RolloutBuffer& b, int t, Terminal term) {
  b.terminals[t] = static_cast<std::uint8_t>(term);
  if (term == Terminal::Success || term == Terminal::Trapped) {
    b.next_values[t] = 0.0;
  }
}

}  // namespace

TEST_CASE("train config validation") {
  CHECK_NOTHROW(tiny_config(1).validate());
  TrainConfig bad = tiny_config(1);
  bad.workers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config(1);
  bad.minibatch = 40;  // 96 % 40 != 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config(1);
  bad.minibatch = 97;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config(1);
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config(1);
  bad.total_timesteps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("gae limiting cases") {
  SUBCASE("gamma=1, lambda=1, one full episode: monte-carlo minus value") {
    RngStream rng(3);
    RolloutBuffer b = random_buffer(rng, 6, {6});
    set_terminal(b, 5, Terminal::Success);
    compute_gae(b, 1.0, 1.0, false);
    for (int t = 0; t < 6; ++t) {
      double future = 0.0;
      for (int k = t; k < 6; ++k) future += b.rewards[k];
      CHECK(b.advantages[t] ==
            doctest::Approx(future - b.values[t]).epsilon(1e-10));
      CHECK(b.returns[t] ==
            doctest::Approx(b.advantages[t] + b.values[t]).epsilon(1e-12));
    }
  }
  SUBCASE("lambda=0: one-step temporal difference") {
    RngStream rng(4);
    RolloutBuffer b = random_buffer(rng, 8, {8});
    set_terminal(b, 3, Terminal::Trapped);
    set_terminal(b, 7, Terminal::Truncated);
    compute_gae(b, 0.9, 0.0, false);
    for (int t = 0; t < 8; ++t) {
      Terminal term = static_cast<Terminal>(b.terminals[t]);
      double next_v = (term == Terminal::Success || term == Terminal::Trapped)
                          ? 0.0
                          : b.next_values[t];
      CHECK(b.advantages[t] ==
            doctest::Approx(b.rewards[t] + 0.9 * next_v - b.values[t])
                .epsilon(1e-10));
    }
  }
}

TEST_CASE("gae matches the double-loop oracle on crafted episode shapes") {
  RngStream rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    RolloutBuffer b = random_buffer(rng, 48, {17, 19, 12});
    // Episode shapes: length-1, mid-segment end, end at segment boundary,
    // truncation, and a running cut at each segment end.
    set_terminal(b, 0, Terminal::Success);              // length-1 episode
    set_terminal(b, 7, Terminal::Trapped);
    set_terminal(b, 16, Terminal::Success);             // at segment end
    set_terminal(b, 20, Terminal::Truncated);
    set_terminal(b, 30 + static_cast<int>(rng.bounded(5)), Terminal::Success);
    for (int extra = 0; extra < 3; ++extra) {
      set_terminal(b, static_cast<int>(rng.bounded(48)),
                   static_cast<Terminal>(1 + rng.bounded(3)));
    }

    RolloutBuffer reference = b;
    compute_gae(b, 0.99, 0.95, false);
    std::vector<double> adv, ret;
    oracles::gae_reference(reference, 0.99, 0.95, adv, ret);
    for (int t = 0; t < 48; ++t) {
      CHECK(b.advantages[t] == doctest::Approx(adv[t]).epsilon(1e-10));
      CHECK(b.returns[t] == doctest::Approx(ret[t]).epsilon(1e-10));
    }
  }
}

TEST_CASE("advantage normalization is zero-mean unit-variance") {
  RngStream rng(66);
  RolloutBuffer raw = random_buffer(rng, 64, {64});
  set_terminal(raw, 63, Terminal::Truncated);
  RolloutBuffer normalized = raw;
  compute_gae(raw, 0.99, 0.95, false);
  compute_gae(normalized, 0.99, 0.95, true);

  double mean = 0.0;
  for (double a : normalized.advantages) mean += a;
  mean /= normalized.size;
  CHECK(std::abs(mean) < 1e-9);
  double var = 0.0;
  for (double a : normalized.advantages) var += (a - mean) * (a - mean);
  var /= normalized.size;
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
  // Returns are left raw.
  for (int t = 0; t < raw.size; ++t) {
    CHECK(normalized.returns[t] == raw.returns[t]);
  }
}

TEST_CASE("rollout collection is deterministic and mask-sound") {
  Trainer t1(tiny_config(5));
  Trainer t2(tiny_config(5));
  const RolloutBuffer& b1 = t1.collect_rollouts();
  const RolloutBuffer& b2 = t2.collect_rollouts();

  CHECK(b1.size == 96);
  REQUIRE(b1.segments.size() == 3);
  for (const auto& [start, len] : b1.segments) CHECK(len == 32);
  CHECK(b1.obs == b2.obs);
  CHECK(b1.actions == b2.actions);
  CHECK(b1.rewards == b2.rewards);
  CHECK(b1.log_probs == b2.log_probs);
  CHECK(b1.values == b2.values);
  CHECK(b1.next_values == b2.next_values);
  CHECK(b1.terminals == b2.terminals);
  CHECK(b1.masks == b2.masks);

  for (int t = 0; t < b1.size; ++t) {
    auto mask = b1.mask(t);
    CHECK(mask[b1.actions[t]]);

    // Stored log_prob and entropy agree with a fresh evaluation.
    PolicyOutput out = t1.net().forward(b1.observation(t));
    auto dist = masked_distribution(out.logits, mask);
    CHECK(b1.log_probs[t] ==
          doctest::Approx(std::log(dist.probs[b1.actions[t]])).epsilon(1e-12));
    CHECK(b1.values[t] == out.value);
    int unmasked = 0;
    for (bool m : mask) unmasked += m;
    CHECK(dist.entropy <= std::log(static_cast<double>(unmasked)) + 1e-12);
  }

  SUBCASE("next values chain within segments") {
    for (const auto& [start, len] : b1.segments) {
      for (int t = start; t < start + len; ++t) {
        Terminal term = static_cast<Terminal>(b1.terminals[t]);
        if (term == Terminal::Success || term == Terminal::Trapped) {
          CHECK(b1.next_values[t] == 0.0);
        } else if (term == Terminal::Running && t + 1 < start + len) {
          CHECK(b1.next_values[t] == b1.values[t + 1]);
        }
      }
    }
  }
}

TEST_CASE("parallel collection equals a sequential re-execution") {
  TrainConfig cfg = tiny_config(11);
  Trainer trainer(cfg);
  const RolloutBuffer& buffer = trainer.collect_rollouts();
  const PolicyNet& net = trainer.net();

  for (int w = 0; w < cfg.workers; ++w) {
    const auto [start, quota] = buffer.segments[w];
    PipeEnv env(cfg.reward_weights, cfg.feature_mask);
    RngStream act_rng(mix_seed(cfg.seed, 2000 + w));
    RngStream scene_rng(mix_seed(cfg.seed, 1000 + w));
    Observation obs{};
    bool need_reset = true;
    for (int k = 0; k < quota; ++k) {
      const int t = start + k;
      if (need_reset) {
        obs = env.reset(scene_rng.next_u64(), cfg.scene_config);
        need_reset = false;
      }
      auto mask = env.action_mask();
      ActResult chosen = act(net, obs, mask, ActMode::Sample, act_rng);
      CHECK(static_cast<int>(buffer.actions[t]) == chosen.action);
      CHECK(buffer.values[t] == chosen.value);
      CHECK(buffer.log_probs[t] == chosen.log_prob);
      for (int i = 0; i < kObservationSize; ++i) {
        CHECK(buffer.obs[t * kObservationSize + i] == obs[i]);
      }
      StepOutcome out = env.step(chosen.action);
      CHECK(buffer.rewards[t] == out.reward);
      CHECK(static_cast<int>(buffer.terminals[t]) ==
            static_cast<int>(out.terminal));
      if (out.terminal != Terminal::Running) {
        need_reset = true;
      } else {
        obs = out.observation;
      }
    }
  }
}

TEST_CASE("ppo loss and gradient") {
  TrainConfig cfg = tiny_config(7);
  Trainer trainer(cfg);
  RolloutBuffer buffer = trainer.collect_rollouts();  // copy
  compute_gae(buffer, cfg.gamma, cfg.lambda);
  PolicyNet net = trainer.net();
  const PpoHyper hyper{0.2, 0.5, 0.01};

  std::vector<int> all(buffer.size);
  std::iota(all.begin(), all.end(), 0);

  SUBCASE("at the collection policy, ratios are one") {
    PpoBatchStats stats;
    double loss = ppo_batch_loss(net, buffer, all, hyper, &stats);
    CHECK(std::isfinite(loss));
    CHECK(stats.approx_kl == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(stats.clip_frac == 0.0);
    // Advantages are normalized over the very same samples, so the
    // surrogate collapses to their (zero) mean.
    CHECK(stats.policy_loss == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }

  SUBCASE("analytic gradient matches central finite differences") {
    std::vector<int> batch(all.begin(), all.begin() + 32);
    std::vector<double> grad(net.param_count());
    ppo_batch_loss_grad(net, buffer, batch, hyper, grad);

    auto loss_fn = [&] { return ppo_batch_loss(net, buffer, batch, hyper); };
    std::vector<double> fd = oracles::finite_diff(net, loss_fn, 1e-5);
    double worst = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      double denom = std::max({std::abs(grad[i]), std::abs(fd[i]), 1e-6});
      worst = std::max(worst, std::abs(grad[i] - fd[i]) / denom);
    }
    CHECK(worst < 1e-4);
  }

  SUBCASE("zero advantages silence the surrogate term") {
    RolloutBuffer zeroed = buffer;
    std::fill(zeroed.advantages.begin(), zeroed.advantages.end(), 0.0);
    PpoBatchStats stats;
    double loss = ppo_batch_loss(net, zeroed, all, hyper, &stats);
    CHECK(stats.policy_loss == 0.0);
    CHECK(loss == doctest::Approx(hyper.value_coef * stats.value_loss -
                                  hyper.entropy_coef * stats.entropy)
                      .epsilon(1e-12));
  }

  SUBCASE("wide clip equals the vanilla policy gradient") {
    PpoHyper wide{1e9, 0.5, 0.01};
    std::vector<double> grad_wide(net.param_count());
    ppo_batch_loss_grad(net, buffer, all, wide, grad_wide);
    // At ratio 1 the clipped and unclipped branches coincide, so the same
    // gradient must come out of the narrow clip too.
    std::vector<double> grad_narrow(net.param_count());
    ppo_batch_loss_grad(net, buffer, all, hyper, grad_narrow);
    for (std::size_t i = 0; i < grad_wide.size(); ++i) {
      CHECK(grad_wide[i] == doctest::Approx(grad_narrow[i]).epsilon(1e-12));
    }
  }

  SUBCASE("updates keep the loss finite and move parameters") {
    auto before = trainer.net().params();
    IterStats stats = trainer.run_iteration();
    CHECK(std::isfinite(stats.policy_loss));
    CHECK(std::isfinite(stats.value_loss));
    CHECK(stats.entropy > 0.0);
    CHECK(stats.timesteps == 2 * 96);  // one collect above, one here
    CHECK(trainer.net().params() != before);
  }
}

TEST_CASE("entropy coefficient schedule") {
  TrainConfig base = tiny_config(21);
  base.total_timesteps = 4 * 96;

  SUBCASE("a degenerate schedule is exactly the constant coefficient") {
    TrainConfig scheduled = base;
    scheduled.entropy_coef_final = scheduled.entropy_coef;
    Trainer a(base), b(scheduled);
    for (int i = 0; i < 4; ++i) {
      a.run_iteration();
      b.run_iteration();
    }
    CHECK(a.net().params() == b.net().params());
  }

  SUBCASE("an annealing schedule changes the update") {
    TrainConfig scheduled = base;
    scheduled.entropy_coef = 0.5;
    scheduled.entropy_coef_final = 0.0;
    TrainConfig constant = scheduled;
    constant.entropy_coef_final = -1.0;
    Trainer a(constant), b(scheduled);
    for (int i = 0; i < 2; ++i) {
      a.run_iteration();
      b.run_iteration();
    }
    CHECK(a.net().params() != b.net().params());
  }
}

TEST_CASE("non-finite losses abort with diagnostics") {
  TrainConfig cfg = tiny_config(13);
  Trainer trainer(cfg);
  trainer.run_iteration();
  for (double& p : trainer.net().params()) p = 1e200;
  CHECK_THROWS_AS(trainer.run_iteration(), NonFiniteLoss);
}

TEST_CASE("training loop accounting, logging, and checkpoints") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path();

  TrainConfig cfg = tiny_config(19);
  cfg.workers = 2;
  cfg.total_timesteps = 3 * 96;  // three iterations
  cfg.checkpoint_every = 2;
  cfg.checkpoint_path = (dir / "pipelayout_train_a.bin").string();
  cfg.log_path = (dir / "pipelayout_train_a.csv").string();

  TrainResult a = train(cfg);
  CHECK(a.timesteps == 3 * 96);
  CHECK(a.log.size() == 3);
  CHECK(a.net.trained_timesteps == 3 * 96);
  CHECK(a.net.train_seed == 19);
  CHECK(a.episodes > 0);

  CHECK(train_log_header() ==
        "iter,timesteps,mean_return,success_rate,mean_length,mean_elbows,"
        "policy_loss,value_loss,entropy,approx_kl,clip_frac,wall_s");

  SUBCASE("log file has a header and one row per iteration") {
    std::istringstream log(read_file(cfg.log_path));
    std::string line;
    REQUIRE(std::getline(log, line));
    CHECK(line == train_log_header());
    int rows = 0;
    while (std::getline(log, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 3);
  }

  SUBCASE("checkpoint loads and carries the layout hash") {
    PolicyNet net = load_checkpoint(cfg.checkpoint_path,
                                    observation_layout_hash(cfg.feature_mask));
    CHECK(net.trained_timesteps == 3 * 96);
    CHECK(net.layers() == a.net.layers());
  }

  SUBCASE("identical configs reproduce bytes, modulo wall time") {
    TrainConfig again = cfg;
    again.checkpoint_path = (dir / "pipelayout_train_b.bin").string();
    again.log_path = (dir / "pipelayout_train_b.csv").string();
    TrainResult b = train(again);
    CHECK(read_file(cfg.checkpoint_path) == read_file(again.checkpoint_path));

    auto strip_wall = [](const std::string& text) {
      std::istringstream in(text);
      std::string line, out;
      while (std::getline(in, line)) {
        auto cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
      }
      return out;
    };
    CHECK(strip_wall(read_file(cfg.log_path)) ==
          strip_wall(read_file(again.log_path)));
    CHECK(a.net.params() == b.net.params());
  }

  SUBCASE("one rollout's worth of steps is one iteration") {
    TrainConfig one = tiny_config(23);
    one.total_timesteps = one.rollout_size;
    TrainResult r = train(one);
    CHECK(r.log.size() == 1);
    CHECK(r.timesteps == static_cast<std::uint64_t>(one.rollout_size));
  }
}
