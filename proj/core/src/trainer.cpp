#include "pipelayout/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "pipelayout/errors.hpp"

namespace pipelayout {

void TrainConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (rollout_size < 1) throw ConfigError("rollout_size must be >= 1");
  if (minibatch < 1 || minibatch > rollout_size) {
    throw ConfigError("minibatch must be in [1, rollout_size]");
  }
  if (rollout_size % minibatch != 0) {
    throw ConfigError("rollout_size must be divisible by minibatch");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (total_timesteps < 1) throw ConfigError("total_timesteps must be >= 1");
  if (hidden_width < 1 || trunk_layers < 1) {
    throw ConfigError("network needs positive width and depth");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

void RolloutBuffer::reset(int n, int dim) {
  obs_dim = dim;
  size = n;
  obs.assign(static_cast<std::size_t>(n) * dim, 0.0);
  actions.assign(n, 0);
  masks.assign(static_cast<std::size_t>(n) * kNumActions, 0);
  log_probs.assign(n, 0.0);
  values.assign(n, 0.0);
  rewards.assign(n, 0.0);
  terminals.assign(n, 0);
  next_values.assign(n, 0.0);
  advantages.clear();
  returns.clear();
  segments.clear();
}

void compute_gae(RolloutBuffer& b, double gamma, double lambda, bool normalize) {
  b.advantages.assign(b.size, 0.0);
  b.returns.assign(b.size, 0.0);
  for (const auto& [start, len] : b.segments) {
    double gae = 0.0;
    for (int t = start + len - 1; t >= start; --t) {
      const auto term = static_cast<Terminal>(b.terminals[t]);
      const bool true_terminal =
          term == Terminal::Success || term == Terminal::Trapped;
      const bool chain_end = term != Terminal::Running || t == start + len - 1;
      const double next_v = true_terminal ? 0.0 : b.next_values[t];
      const double delta = b.rewards[t] + gamma * next_v - b.values[t];
      gae = delta + (chain_end ? 0.0 : gamma * lambda * gae);
      b.advantages[t] = gae;
      b.returns[t] = gae + b.values[t];
    }
  }
  if (normalize && b.size > 0) {
    double mean = 0.0;
    for (double a : b.advantages) mean += a;
    mean /= b.size;
    double var = 0.0;
    for (double a : b.advantages) var += (a - mean) * (a - mean);
    var /= b.size;
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : b.advantages) a = (a - mean) * inv;
  }
}

namespace {

template <bool WithGrad>
double ppo_batch_impl(const PolicyNet& net, const RolloutBuffer& b,
                      std::span<const int> indices, const PpoHyper& h,
                      std::span<double> grad, PpoBatchStats* stats) {
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0, policy_loss = 0.0, value_loss = 0.0, entropy = 0.0,
         kl = 0.0;
  int clipped = 0;
  PolicyNet::Cache cache;
  for (int t : indices) {
    const PolicyOutput out = net.forward_cached(b.observation(t), cache);
    const auto mask = b.mask(t);
    const MaskedDistribution dist = masked_distribution(out.logits, mask);
    const int action = b.actions[t];
    const double logp_new = std::log(dist.probs[action]);
    const double ratio = std::exp(logp_new - b.log_probs[t]);
    const double adv = b.advantages[t];
    const double pg1 = -adv * ratio;
    const double pg2 = -adv * std::clamp(ratio, 1.0 - h.clip, 1.0 + h.clip);
    const double pg = std::max(pg1, pg2);
    const double verr = b.returns[t] - out.value;
    const double vloss = verr * verr;

    loss += pg + h.value_coef * vloss - h.entropy_coef * dist.entropy;
    policy_loss += pg;
    value_loss += vloss;
    entropy += dist.entropy;
    kl += (ratio - 1.0) - (logp_new - b.log_probs[t]);
    if (std::abs(ratio - 1.0) > h.clip) ++clipped;

    if constexpr (WithGrad) {
      // Ties at the clip boundary take the unclipped branch's gradient.
      const bool unclipped = pg1 >= pg2;
      std::array<double, kNumActions> dlogits{};
      for (int j = 0; j < kNumActions; ++j) {
        if (!mask[j]) continue;  // exactly zero gradient on masked logits
        const double p = dist.probs[j];
        double d = 0.0;
        if (unclipped) d += -adv * ratio * ((j == action ? 1.0 : 0.0) - p);
        if (p > 0.0) d += h.entropy_coef * p * (std::log(p) + dist.entropy);
        dlogits[j] = d * inv_n;
      }
      const double dvalue = h.value_coef * -2.0 * verr * inv_n;
      net.backward(cache, dlogits, dvalue, grad);
    }
  }
  if (stats) {
    stats->policy_loss = policy_loss * inv_n;
    stats->value_loss = value_loss * inv_n;
    stats->entropy = entropy * inv_n;
    stats->approx_kl = kl * inv_n;
    stats->clip_frac = clipped * inv_n;
  }
  return loss * inv_n;
}

}  // namespace

double ppo_batch_loss(const PolicyNet& net, const RolloutBuffer& buffer,
                      std::span<const int> indices, const PpoHyper& hyper,
                      PpoBatchStats* stats) {
  return ppo_batch_impl<false>(net, buffer, indices, hyper, {}, stats);
}

double ppo_batch_loss_grad(const PolicyNet& net, const RolloutBuffer& buffer,
                           std::span<const int> indices, const PpoHyper& hyper,
                           std::span<double> grad, PpoBatchStats* stats) {
  std::fill(grad.begin(), grad.end(), 0.0);
  return ppo_batch_impl<true>(net, buffer, indices, hyper, grad, stats);
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      net_(kObservationSize, config_.hidden_width, config_.trunk_layers),
      shuffle_rng_(mix_seed(config_.seed, 3000)) {
  config_.validate();
  net_.init_params(config_.seed);
  net_.obs_layout_hash = observation_layout_hash(config_.feature_mask);
  net_.train_seed = config_.seed;
  adam_m_.assign(net_.param_count(), 0.0);
  adam_v_.assign(net_.param_count(), 0.0);
  for (int w = 0; w < config_.workers; ++w) {
    workers_.push_back(Worker{
        PipeEnv(config_.reward_weights, config_.feature_mask),
        RngStream(mix_seed(config_.seed, 2000 + w)),
        RngStream(mix_seed(config_.seed, 1000 + w)),
        Observation{},
        true,
        {},
    });
  }
}

void Trainer::collect_worker(int w, int start, int quota) {
  Worker& wk = workers_[w];
  int pending = -1;  // slot waiting for the next state's value
  for (int k = 0; k < quota; ++k) {
    const int t = start + k;
    if (wk.need_reset) {
      wk.obs = wk.env.reset(wk.scene_rng.next_u64(), config_.scene_config);
      wk.need_reset = false;
    }
    const auto mask = wk.env.action_mask();
    const ActResult chosen =
        act(net_, wk.obs, mask, ActMode::Sample, wk.act_rng);
    if (pending >= 0) buffer_.next_values[pending] = chosen.value;

    std::copy(wk.obs.begin(), wk.obs.end(),
              buffer_.obs.begin() + static_cast<std::size_t>(t) * buffer_.obs_dim);
    for (int a = 0; a < kNumActions; ++a) {
      buffer_.masks[t * kNumActions + a] = mask[a] ? 1 : 0;
    }
    buffer_.actions[t] = static_cast<std::uint8_t>(chosen.action);
    buffer_.log_probs[t] = chosen.log_prob;
    buffer_.values[t] = chosen.value;

    const StepOutcome out = wk.env.step(chosen.action);
    buffer_.rewards[t] = out.reward;
    buffer_.terminals[t] = static_cast<std::uint8_t>(out.terminal);

    if (out.terminal != Terminal::Running) {
      const EpisodeSummary summary = wk.env.summary();
      wk.episodes.push_back({summary.total_reward, summary.steps,
                             summary.elbows,
                             out.terminal == Terminal::Success});
      buffer_.next_values[t] = out.terminal == Terminal::Truncated
                                   ? net_.forward(out.observation).value
                                   : 0.0;
      wk.need_reset = true;
      pending = -1;
    } else {
      wk.obs = out.observation;
      pending = t;
    }
  }
  // Rollout cut mid-episode: bootstrap from the state the episode paused in.
  if (pending >= 0) buffer_.next_values[pending] = net_.forward(wk.obs).value;
}

const RolloutBuffer& Trainer::collect_rollouts() {
  const int n = config_.rollout_size;
  const int n_workers = config_.workers;
  buffer_.reset(n, kObservationSize);
  for (Worker& w : workers_) w.episodes.clear();

  const int base = n / n_workers;
  const int rem = n % n_workers;
  int start = 0;
  for (int w = 0; w < n_workers; ++w) {
    const int quota = base + (w < rem ? 1 : 0);
    buffer_.segments.emplace_back(start, quota);
    start += quota;
  }

  if (n_workers == 1) {
    collect_worker(0, 0, n);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      const auto [seg_start, quota] = buffer_.segments[w];
      threads.emplace_back([this, w, seg_start = seg_start, quota = quota] {
        collect_worker(w, seg_start, quota);
      });
    }
    for (auto& th : threads) th.join();
  }

  iter_episodes_.clear();
  for (const Worker& w : workers_) {
    for (const EpisodeStat& e : w.episodes) {
      iter_episodes_.push_back(e);
      trailing_.push_back(e.success ? 1 : 0);
      if (trailing_.size() > 500) trailing_.pop_front();
      ++episodes_;
    }
  }
  timesteps_ += static_cast<std::uint64_t>(n);
  return buffer_;
}

PpoBatchStats Trainer::ppo_update() {
  const int n = buffer_.size;
  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<double> grad(net_.param_count());
  double entropy_coef = config_.entropy_coef;
  if (config_.entropy_coef_final >= 0.0 && config_.total_timesteps > 0) {
    const double progress =
        std::min(1.0, static_cast<double>(timesteps_) /
                          static_cast<double>(config_.total_timesteps));
    entropy_coef += (config_.entropy_coef_final - entropy_coef) * progress;
  }
  const PpoHyper hyper{config_.clip, config_.value_coef, entropy_coef};

  PpoBatchStats total;
  int updates = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng_.bounded(i + 1));
      std::swap(indices[i], indices[j]);
    }
    for (int off = 0; off + config_.minibatch <= n; off += config_.minibatch) {
      std::span<const int> batch(indices.data() + off,
                                 static_cast<std::size_t>(config_.minibatch));
      PpoBatchStats stats;
      const double loss =
          ppo_batch_loss_grad(net_, buffer_, batch, hyper, grad, &stats);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("loss became non-finite at iteration " +
                            std::to_string(iter_ + 1) + ", epoch " +
                            std::to_string(epoch) + ", offset " +
                            std::to_string(off));
      }
      ++adam_t_;
      const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
      const double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
      double* p = net_.params().data();
      for (std::size_t i = 0; i < grad.size(); ++i) {
        adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * grad[i];
        adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * grad[i] * grad[i];
        p[i] -= config_.learning_rate * (adam_m_[i] / bc1) /
                (std::sqrt(adam_v_[i] / bc2) + eps);
      }

      total.policy_loss += stats.policy_loss;
      total.value_loss += stats.value_loss;
      total.entropy += stats.entropy;
      total.approx_kl += stats.approx_kl;
      total.clip_frac += stats.clip_frac;
      ++updates;
    }
  }
  total.policy_loss /= updates;
  total.value_loss /= updates;
  total.entropy /= updates;
  total.approx_kl /= updates;
  total.clip_frac /= updates;
  return total;
}

double Trainer::trailing_success_rate() const {
  if (trailing_.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint8_t s : trailing_) sum += s;
  return sum / static_cast<double>(trailing_.size());
}

IterStats Trainer::run_iteration() {
  const auto t0 = std::chrono::steady_clock::now();
  collect_rollouts();
  compute_gae(buffer_, config_.gamma, config_.lambda);
  const PpoBatchStats update = ppo_update();
  ++iter_;

  IterStats stats;
  stats.iter = iter_;
  stats.timesteps = timesteps_;
  double ret = 0.0, len = 0.0, elbows = 0.0;
  for (const EpisodeStat& e : iter_episodes_) {
    ret += e.episode_return;
    len += e.length;
    elbows += e.elbows;
  }
  const double n_ep = static_cast<double>(iter_episodes_.size());
  stats.mean_return = iter_episodes_.empty() ? std::nan("") : ret / n_ep;
  stats.mean_length = iter_episodes_.empty() ? std::nan("") : len / n_ep;
  stats.mean_elbows = iter_episodes_.empty() ? std::nan("") : elbows / n_ep;
  stats.success_rate = trailing_success_rate();
  stats.policy_loss = update.policy_loss;
  stats.value_loss = update.value_loss;
  stats.entropy = update.entropy;
  stats.approx_kl = update.approx_kl;
  stats.clip_frac = update.clip_frac;
  stats.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return stats;
}

std::string train_log_header() {
  return "iter,timesteps,mean_return,success_rate,mean_length,mean_elbows,"
         "policy_loss,value_loss,entropy,approx_kl,clip_frac,wall_s";
}

std::string train_log_row(const IterStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f",
                s.iter, static_cast<unsigned long long>(s.timesteps),
                s.mean_return, s.success_rate, s.mean_length, s.mean_elbows,
                s.policy_loss, s.value_loss, s.entropy, s.approx_kl,
                s.clip_frac, s.wall_s);
  return buf;
}

void Trainer::write_checkpoint(const std::string& path) {
  net_.trained_timesteps = timesteps_;
  save_checkpoint(net_, path);
}

TrainResult Trainer::run() {
  std::ofstream log;
  if (!config_.log_path.empty()) {
    log.open(config_.log_path, std::ios::trunc);
    if (!log) throw ConfigError("cannot open log file: " + config_.log_path);
    log << train_log_header() << '\n';
    log.flush();
  }

  TrainResult result;
  while (timesteps_ < config_.total_timesteps) {
    const IterStats stats = run_iteration();
    result.log.push_back(stats);
    if (log.is_open()) {
      log << train_log_row(stats) << '\n';
      log.flush();
    }
    if (!config_.checkpoint_path.empty() &&
        iter_ % config_.checkpoint_every == 0) {
      write_checkpoint(config_.checkpoint_path);
    }
    if (config_.success_exit >= 0.0 &&
        trailing_.size() >= 500 &&
        trailing_success_rate() >= config_.success_exit) {
      result.reached_success_exit = true;
      break;
    }
  }
  if (!config_.checkpoint_path.empty()) write_checkpoint(config_.checkpoint_path);

  net_.trained_timesteps = timesteps_;
  result.net = net_;
  result.timesteps = timesteps_;
  result.final_success_rate = trailing_success_rate();
  result.episodes = episodes_;
  return result;
}

TrainResult train(const TrainConfig& config) { return Trainer(config).run(); }

}  // namespace pipelayout
