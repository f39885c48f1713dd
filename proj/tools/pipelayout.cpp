// Command-line front end: scene generation, routing, training, evaluation,
// benchmarking and rendering. Exit codes: 0 success, 1 domain failure
// (no path, generation exhausted), 2 usage or configuration error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipelayout/bench.hpp"
#include "pipelayout/errors.hpp"
#include "pipelayout/io.hpp"
#include "pipelayout/mdp.hpp"
#include "pipelayout/observe.hpp"
#include "pipelayout/planner.hpp"
#include "pipelayout/policy.hpp"
#include "pipelayout/scene.hpp"
#include "pipelayout/trainer.hpp"

namespace {

using namespace pipelayout;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

Cell parse_dims(const std::string& text) {
  Cell dims;
  if (std::sscanf(text.c_str(), "%d,%d,%d", &dims.x, &dims.y, &dims.z) != 3) {
    throw ConfigError("dims must be x,y,z integers, got '" + text + "'");
  }
  return dims;
}

FeatureMask parse_feature_mask(const std::string& list) {
  FeatureMask mask;
  std::string token;
  auto apply = [&] {
    if (token.empty()) return;
    if (token == "relative") mask.relative = true;
    else if (token == "direction") mask.direction = true;
    else if (token == "cube_edge") mask.cube_edge = true;
    else if (token == "angle") mask.angle = true;
    else if (token == "cross") mask.cross = true;
    else if (token == "distance") mask.distance = true;
    else throw ConfigError("unknown feature block: " + token);
    token.clear();
  };
  for (char c : list) {
    if (c == ',') apply();
    else if (c != ' ') token += c;
  }
  apply();
  return mask;
}

std::vector<ConstraintSet> parse_constraint_sets(const std::string& list) {
  std::vector<ConstraintSet> sets;
  std::string token;
  for (char c : list) {
    if (c == ';') {
      sets.push_back(ConstraintSet::parse(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) sets.push_back(ConstraintSet::parse(token));
  if (sets.empty()) throw ConfigError("no constraint sets given");
  return sets;
}

int cmd_gen_scene(std::uint64_t seed, const std::string& min_dims,
                  const std::string& max_dims, const std::string& out) {
  SceneConfig config;
  bool fixed_requested = !min_dims.empty() || !max_dims.empty();
  if (fixed_requested) {
    Cell lo = parse_dims(min_dims.empty() ? max_dims : min_dims);
    Cell hi = parse_dims(max_dims.empty() ? min_dims : max_dims);
    config = SceneConfig::desk(lo);
    config.min_dims = lo;
    config.max_dims = hi;
  }
  Scene scene = generate_scene(seed, config);
  write_file_atomic(out, serialize_scene(scene) + "\n");
  std::printf("scene seed=%llu dims=%d,%d,%d obstacles=%zu -> %s\n",
              static_cast<unsigned long long>(seed), scene.dims.x,
              scene.dims.y, scene.dims.z, scene.obstacles.size(), out.c_str());
  return kExitOk;
}

int cmd_route(const std::string& scene_file, const std::string& algo,
              const std::string& constraints, const std::string& model,
              const std::string& out, const std::string& render_format,
              const std::string& render_out) {
  const Scene scene = parse_scene(read_file(scene_file));
  const ConstraintSet cs = ConstraintSet::parse(constraints);
  std::optional<Path> path;
  if (algo == "dijkstra") {
    path = plan_dijkstra(scene, cs).path;
  } else if (algo == "astar") {
    path = plan_astar(scene, cs).path;
  } else {
    const PolicyNet net =
        load_checkpoint(model, observation_layout_hash(FeatureMask{}));
    path = route_drl(scene, net, cs);
  }
  if (!path.has_value()) {
    std::fprintf(stderr, "error: no path found (algo=%s constraints=%s)\n",
                 algo.c_str(), cs.label().c_str());
    return kExitDomain;
  }
  write_file_atomic(out, serialize_path(*path) + "\n");
  const Metrics m = path_metrics(scene, *path);
  std::printf("path algo=%s constraints=%s length=%d elbows=%d install=%.3f "
              "cost=%.2f expanded=%lld -> %s\n",
              algo.c_str(), cs.label().c_str(), m.length_cells, m.elbows,
              m.install_distance_cells, path->cost,
              static_cast<long long>(path->expanded_nodes), out.c_str());
  if (!render_format.empty()) {
    const std::string art = render_format == "svg"
                                ? render_svg(scene, path->cells)
                                : render_ascii(scene, path->cells);
    write_file_atomic(render_out, art);
  }
  return kExitOk;
}

int cmd_train(std::uint64_t timesteps, std::uint64_t seed, int workers,
              const std::string& out, const std::string& log,
              const std::string& mask_features, double reward_elbow,
              const std::string& scene_dims, int hidden_width,
              double success_exit) {
  TrainConfig config;
  config.total_timesteps = timesteps;
  config.seed = seed;
  config.workers = workers;
  config.checkpoint_path = out;
  config.log_path = log;
  config.hidden_width = hidden_width;
  config.success_exit = success_exit;
  if (!mask_features.empty()) config.feature_mask = parse_feature_mask(mask_features);
  if (reward_elbow != 0.0) config.reward_weights.r_elbow = reward_elbow;
  if (!scene_dims.empty()) config.scene_config = SceneConfig::desk(parse_dims(scene_dims));
  const TrainResult result = train(config);
  std::printf("trained timesteps=%llu iterations=%zu episodes=%llu "
              "success_rate=%.3f -> %s\n",
              static_cast<unsigned long long>(result.timesteps),
              result.log.size(),
              static_cast<unsigned long long>(result.episodes),
              result.final_success_rate, out.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& scene_file, const std::string& path_file) {
  const Scene scene = parse_scene(read_file(scene_file));
  const Path path = parse_path(read_file(path_file));
  const Metrics m = path_metrics(scene, path);
  std::printf("length_cells,elbows,install_distance_cells,cost,cells_unique\n");
  std::printf("%d,%d,%.4f,%.2f,%d\n", m.length_cells, m.elbows,
              m.install_distance_cells,
              path_cost(scene, path.constraints, path.cells),
              m.cells_unique ? 1 : 0);
  return kExitOk;
}

int cmd_bench(int scenes, std::uint64_t seed, const std::string& algos,
              const std::string& constraints, const std::string& model_1,
              const std::string& model_12, const std::string& model_123,
              const std::string& scene_dims, const std::string& out) {
  BenchConfig config;
  config.scenes = scenes;
  config.seed = seed;
  config.algos.clear();
  std::string token;
  for (char c : algos + ",") {
    if (c == ',') {
      if (!token.empty()) config.algos.push_back(token);
      token.clear();
    } else if (c != ' ') {
      token += c;
    }
  }
  config.constraint_sets = parse_constraint_sets(constraints);
  if (!model_1.empty()) config.drl_models["1"] = model_1;
  if (!model_12.empty()) config.drl_models["1,2"] = model_12;
  if (!model_123.empty()) config.drl_models["1,2,3"] = model_123;
  if (!scene_dims.empty()) config.scene_config = SceneConfig::desk(parse_dims(scene_dims));
  const Report report = run_benchmark(config);
  write_file_atomic(out, report_csv(report));
  std::fputs(report_table(report).c_str(), stdout);
  return kExitOk;
}

int cmd_render(const std::string& scene_file, const std::string& path_file,
               const std::string& format, const std::string& out) {
  const Scene scene = parse_scene(read_file(scene_file));
  std::vector<Cell> cells;
  if (!path_file.empty()) {
    const Path path = parse_path(read_file(path_file));
    validate_path(path, scene);
    cells = path.cells;
  }
  const std::string art =
      format == "svg" ? render_svg(scene, cells) : render_ascii(scene, cells);
  write_file_atomic(out, art);
  std::printf("rendered %s -> %s\n", format.c_str(), out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D pipe routing: procedural scenes, search baselines, PPO"};
  app.require_subcommand(1);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Generate a random scene file");
  std::uint64_t gen_seed = 0;
  std::string gen_min_dims, gen_max_dims, gen_out;
  gen->add_option("--seed", gen_seed, "Scene seed")->required();
  gen->add_option("--min-dims", gen_min_dims, "Minimum dims x,y,z");
  gen->add_option("--max-dims", gen_max_dims, "Maximum dims x,y,z");
  gen->add_option("--out", gen_out, "Output scene JSON")->required();

  // route
  auto* route = app.add_subcommand("route", "Plan a path through a scene");
  std::string route_scene, route_algo, route_constraints = "1", route_model;
  std::string route_out, route_render, route_render_out;
  route->add_option("--scene", route_scene, "Scene JSON")->required();
  route->add_option("--algo", route_algo, "dijkstra|astar|drl")
      ->required()
      ->check(CLI::IsMember({"dijkstra", "astar", "drl"}));
  route->add_option("--constraints", route_constraints, "e.g. 1,2,3");
  route->add_option("--model", route_model, "Checkpoint (drl only)");
  route->add_option("--out", route_out, "Output path JSON")->required();
  route->add_option("--render", route_render, "svg|ascii")
      ->check(CLI::IsMember({"svg", "ascii"}));
  route->add_option("--render-out", route_render_out, "Render output file");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a PPO policy");
  std::uint64_t train_timesteps = 3'000'000, train_seed = 0;
  int train_workers = 1, train_hidden = 128;
  double train_reward_elbow = 0.0, train_success_exit = -1.0;
  std::string train_out, train_log, train_mask, train_scene_dims;
  train_cmd->add_option("--timesteps", train_timesteps, "Timestep budget");
  train_cmd->add_option("--seed", train_seed, "Training seed")->required();
  train_cmd->add_option("--workers", train_workers, "Rollout workers");
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train_log, "Training log CSV");
  train_cmd->add_option("--mask-features", train_mask,
                        "Blocks to zero, e.g. angle");
  train_cmd->add_option("--reward-elbow", train_reward_elbow,
                        "Override elbow reward, e.g. -20");
  train_cmd->add_option("--scene-dims", train_scene_dims,
                        "Training scene dims x,y,z (default 20,20,15)");
  train_cmd->add_option("--hidden-width", train_hidden, "Trunk width");
  train_cmd->add_option("--success-exit", train_success_exit,
                        "Stop at this trailing-500 success rate");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Metrics of a stored path");
  std::string eval_scene, eval_path;
  eval_cmd->add_option("--scene", eval_scene, "Scene JSON")->required();
  eval_cmd->add_option("--path", eval_path, "Path JSON")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Compare algorithms");
  int bench_scenes = 100;
  std::uint64_t bench_seed = 0;
  std::string bench_algos = "dijkstra,astar";
  std::string bench_constraints = "1;1,2;1,2,3";
  std::string bench_model_1, bench_model_12, bench_model_123;
  std::string bench_scene_dims, bench_out;
  bench_cmd->add_option("--scenes", bench_scenes, "Scene count");
  bench_cmd->add_option("--seed", bench_seed, "Stream seed")->required();
  bench_cmd->add_option("--algos", bench_algos, "Comma list");
  bench_cmd->add_option("--constraints", bench_constraints,
                        "Semicolon-separated sets, e.g. 1;1,2;1,2,3");
  bench_cmd->add_option("--model-1", bench_model_1, "Checkpoint for {1}");
  bench_cmd->add_option("--model-12", bench_model_12, "Checkpoint for {1,2}");
  bench_cmd->add_option("--model-123", bench_model_123, "Checkpoint for {1,2,3}");
  bench_cmd->add_option("--scene-dims", bench_scene_dims, "Scene dims x,y,z");
  bench_cmd->add_option("--out", bench_out, "Report CSV")->required();

  // render
  auto* render_cmd = app.add_subcommand("render", "Render scene and path");
  std::string render_scene, render_path, render_fmt = "ascii", render_out_file;
  render_cmd->add_option("--scene", render_scene, "Scene JSON")->required();
  render_cmd->add_option("--path", render_path, "Path JSON");
  render_cmd->add_option("--format", render_fmt, "svg|ascii")
      ->check(CLI::IsMember({"svg", "ascii"}));
  render_cmd->add_option("--out", render_out_file, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_scene(gen_seed, gen_min_dims, gen_max_dims, gen_out);
    }
    if (route->parsed()) {
      if (route_algo == "drl" && route_model.empty()) {
        std::fprintf(stderr, "error: --model is required with --algo drl\n");
        return kExitUsage;
      }
      if (!route_render.empty() && route_render_out.empty()) {
        std::fprintf(stderr, "error: --render-out is required with --render\n");
        return kExitUsage;
      }
      return cmd_route(route_scene, route_algo, route_constraints, route_model,
                       route_out, route_render, route_render_out);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_timesteps, train_seed, train_workers, train_out,
                       train_log, train_mask, train_reward_elbow,
                       train_scene_dims, train_hidden, train_success_exit);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_scene, eval_path);
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_scenes, bench_seed, bench_algos,
                       bench_constraints, bench_model_1, bench_model_12,
                       bench_model_123, bench_scene_dims, bench_out);
    }
    if (render_cmd->parsed()) {
      return cmd_render(render_scene, render_path, render_fmt, render_out_file);
    }
  } catch (const GenerationExhausted& e) {
    std::fprintf(stderr, "error: generation exhausted: %s\n", e.what());
    return kExitDomain;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: parse: %s\n", e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: validation: %s\n", e.what());
    return kExitUsage;
  } catch (const LayoutMismatch& e) {
    std::fprintf(stderr, "error: layout: %s\n", e.what());
    return kExitUsage;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: format: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidPath& e) {
    std::fprintf(stderr, "error: invalid path: %s\n", e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
