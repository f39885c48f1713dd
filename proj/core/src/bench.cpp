#include "pipelayout/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pipelayout/errors.hpp"
#include "pipelayout/mdp.hpp"
#include "pipelayout/rng.hpp"

namespace pipelayout {

Metrics path_metrics(const Scene& scene, const Path& path) {
  validate_path(path, scene);
  Metrics m;
  m.success = true;
  m.length_cells = static_cast<int>(path.cells.size()) - 1;
  m.cells_unique = cells_unique(path.cells);
  std::optional<Dir> prev;
  double install = 0.0;
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    const Dir dir = *move_direction(path.cells[i - 1], path.cells[i]);
    if (prev.has_value() && *prev != dir) ++m.elbows;
    prev = dir;
    install += min_free_distance(scene, path.cells[i]);
  }
  m.install_distance_cells =
      m.length_cells > 0 ? install / m.length_cells : 0.0;
  return m;
}

std::optional<Path> route_drl(const Scene& scene, const PolicyNet& net,
                              const ConstraintSet& cs,
                              const FeatureMask& mask) {
  PipeEnv env(RewardWeights{}, mask);
  Observation obs = env.reset(scene);
  RngStream unused(0);  // greedy mode draws nothing
  while (env.running()) {
    const auto action_mask = env.action_mask();
    bool any = false;
    for (bool b : action_mask) any = any || b;
    if (!any) return std::nullopt;
    const ActResult chosen =
        act(net, obs, action_mask, ActMode::Greedy, unused);
    obs = env.step(chosen.action).observation;
  }
  if (env.terminal() != Terminal::Success) return std::nullopt;
  Path path;
  path.algorithm = "drl";
  path.constraints = cs;
  path.cells = env.state().path;
  path.cost = path_cost(scene, cs, path.cells);
  path.expanded_nodes = 0;
  return path;
}

namespace {

struct LayoutSample {
  double time_s = 0.0;
  bool success = false;
  Metrics metrics;
  std::int64_t expanded = 0;
  double cost = 0.0;
};

double nearest_rank_p95(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t rank = (values.size() * 95 + 99) / 100;  // ceil(0.95 n)
  return values[std::min(rank, values.size()) - 1];
}

}  // namespace

Report run_benchmark(const BenchConfig& config) {
  if (config.scenes < 1) throw ConfigError("bench needs at least one scene");
  if (config.algos.empty()) throw ConfigError("bench needs at least one algorithm");
  for (const std::string& algo : config.algos) {
    if (algo != "dijkstra" && algo != "astar" && algo != "drl") {
      throw ConfigError("unknown algorithm: " + algo);
    }
  }

  // Load checkpoints up front so a bad configuration fails before work.
  std::map<std::string, PolicyNet> models;
  const bool wants_drl =
      std::find(config.algos.begin(), config.algos.end(), "drl") !=
      config.algos.end();
  if (wants_drl) {
    const std::uint64_t expected_hash =
        observation_layout_hash(config.feature_mask);
    for (const ConstraintSet& cs : config.constraint_sets) {
      const auto it = config.drl_models.find(cs.label());
      if (it == config.drl_models.end()) {
        throw ConfigError("drl requested but no model for constraints " +
                          cs.label());
      }
      models.emplace(cs.label(), load_checkpoint(it->second, expected_hash));
    }
  }

  Report report;
  report.scenes = config.scenes;
  report.seed = config.seed;
  std::vector<Scene> scenes;
  scenes.reserve(config.scenes);
  for (int i = 0; i < config.scenes; ++i) {
    const std::uint64_t scene_seed = mix_seed(config.seed, i);
    report.scene_seeds.push_back(scene_seed);
    scenes.push_back(generate_scene(scene_seed, config.scene_config));
  }

  using clock = std::chrono::steady_clock;
  for (const std::string& algo : config.algos) {
    for (const ConstraintSet& cs : config.constraint_sets) {
      std::vector<LayoutSample> samples;
      samples.reserve(scenes.size());
      for (const Scene& scene : scenes) {
        LayoutSample sample;
        std::optional<Path> path;
        std::int64_t expanded = 0;
        const auto t0 = clock::now();
        if (algo == "dijkstra") {
          PlanResult r = plan_dijkstra(scene, cs);
          path = std::move(r.path);
          expanded = r.expanded_nodes;
        } else if (algo == "astar") {
          PlanResult r = plan_astar(scene, cs);
          path = std::move(r.path);
          expanded = r.expanded_nodes;
        } else {
          path = route_drl(scene, models.at(cs.label()), cs,
                           config.feature_mask);
        }
        sample.time_s =
            std::chrono::duration<double>(clock::now() - t0).count();
        sample.expanded = expanded;
        if (path.has_value()) {
          sample.success = true;
          sample.metrics = path_metrics(scene, *path);
          sample.cost = path->cost;
        }
        samples.push_back(std::move(sample));
      }

      ReportRow row;
      row.algo = algo;
      row.constraints = cs;
      row.n = static_cast<int>(samples.size());
      std::vector<double> times;
      double length = 0, elbows = 0, install = 0, expanded = 0, cost = 0;
      int successes = 0;
      for (const LayoutSample& s : samples) {
        times.push_back(s.time_s);
        expanded += static_cast<double>(s.expanded);
        if (s.success) {
          ++successes;
          length += s.metrics.length_cells;
          elbows += s.metrics.elbows;
          install += s.metrics.install_distance_cells;
          cost += s.cost;
        }
      }
      row.failures = row.n - successes;
      row.success_rate = static_cast<double>(successes) / row.n;
      row.mean_length = successes ? length / successes : 0.0;
      row.mean_elbows = successes ? elbows / successes : 0.0;
      row.mean_install = successes ? install / successes : 0.0;
      row.mean_cost = successes ? cost / successes : 0.0;
      double time_sum = 0;
      for (double t : times) time_sum += t;
      row.mean_time_s = time_sum / row.n;
      row.p95_time_s = nearest_rank_p95(times);
      row.mean_expanded_nodes = expanded / row.n;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string report_csv(const Report& report) {
  std::string out =
      "algo,constraints,n,success_rate,mean_length,mean_elbows,mean_install,"
      "mean_time_s,p95_time_s,mean_expanded_nodes\n";
  char buf[512];
  for (const ReportRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s,\"%s\",%d,%.4f,%.4f,%.4f,%.4f,%.6f,%.6f,%.1f\n",
                  r.algo.c_str(), r.constraints.label().c_str(), r.n,
                  r.success_rate, r.mean_length, r.mean_elbows, r.mean_install,
                  r.mean_time_s, r.p95_time_s, r.mean_expanded_nodes);
    out += buf;
  }
  return out;
}

std::string report_table(const Report& report) {
  std::ostringstream out;
  char buf[512];
  out << "metrics in cells (x0.1 m), times in seconds\n";
  std::snprintf(buf, sizeof(buf), "%-9s %-11s %5s %8s %8s %8s %9s %10s %10s %10s\n",
                "algo", "constraints", "n", "success", "length", "elbows",
                "install", "mean_t_s", "p95_t_s", "expanded");
  out << buf;
  for (const ReportRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-9s %-11s %5d %8.2f %8.2f %8.2f %9.2f %10.6f %10.6f %10.1f\n",
                  r.algo.c_str(), r.constraints.label().c_str(), r.n,
                  r.success_rate, r.mean_length, r.mean_elbows, r.mean_install,
                  r.mean_time_s, r.p95_time_s, r.mean_expanded_nodes);
    out << buf;
  }
  return std::move(out).str();
}

namespace {

constexpr int kCellPx = 6;
constexpr int kMarginPx = 12;
constexpr int kLabelPx = 16;

struct Projection {
  const char* label;
  int ax;  // horizontal axis index (0=x,1=y,2=z)
  int ay;  // vertical axis index, drawn upward
};

int axis_of(const Cell& c, int axis) { return axis == 0 ? c.x : axis == 1 ? c.y : c.z; }

void render_projection(std::ostringstream& svg, const Scene& scene,
                       const std::vector<Cell>& path, const Projection& proj,
                       int offset_x) {
  const int w = axis_of(scene.dims, proj.ax);
  const int h = axis_of(scene.dims, proj.ay);
  const int x0 = offset_x;
  const int y0 = kMarginPx + kLabelPx;
  auto px = [&](int cell_x) { return x0 + cell_x * kCellPx; };
  auto py = [&](int cell_y) { return y0 + (h - 1 - cell_y) * kCellPx; };

  svg << "<text x=\"" << x0 << "\" y=\"" << kMarginPx + 10 << "\" class=\"lbl\">"
      << proj.label << "</text>\n";
  svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w * kCellPx
      << "\" height=\"" << h * kCellPx << "\" class=\"room\"/>\n";
  for (const ObstacleBox& b : scene.obstacles) {
    const int bx = axis_of(b.min, proj.ax);
    const int by = axis_of(b.min, proj.ay);
    const int bw = axis_of(b.max, proj.ax) - bx;
    const int bh = axis_of(b.max, proj.ay) - by;
    svg << "<rect x=\"" << px(bx) << "\" y=\"" << py(by + bh - 1) << "\" width=\""
        << bw * kCellPx << "\" height=\"" << bh * kCellPx
        << "\" class=\"obstacle\"/>\n";
  }
  if (!path.empty()) {
    svg << "<polyline class=\"pipe\" points=\"";
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) svg << " ";
      svg << px(axis_of(path[i], proj.ax)) + kCellPx / 2 << ","
          << py(axis_of(path[i], proj.ay)) + kCellPx / 2;
    }
    svg << "\"/>\n";
  }
  auto marker = [&](const Cell& c, const char* cls) {
    svg << "<circle cx=\"" << px(axis_of(c, proj.ax)) + kCellPx / 2 << "\" cy=\""
        << py(axis_of(c, proj.ay)) + kCellPx / 2 << "\" r=\"" << kCellPx / 2
        << "\" class=\"" << cls << "\"/>\n";
  };
  marker(scene.start, "start");
  marker(scene.end, "end");
}

}  // namespace

std::string render_svg(const Scene& scene, const std::vector<Cell>& path) {
  const Projection projections[3] = {
      {"plan (x-y)", 0, 1}, {"elevation (x-z)", 0, 2}, {"elevation (y-z)", 1, 2}};
  int total_w = kMarginPx;
  int max_h = 0;
  int offsets[3];
  for (int i = 0; i < 3; ++i) {
    offsets[i] = total_w;
    total_w += axis_of(scene.dims, projections[i].ax) * kCellPx + kMarginPx;
    max_h = std::max(max_h, axis_of(scene.dims, projections[i].ay) * kCellPx);
  }
  const int total_h = max_h + 2 * kMarginPx + kLabelPx;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w
      << "\" height=\"" << total_h << "\" viewBox=\"0 0 " << total_w << " "
      << total_h << "\">\n";
  svg << "<style>.room{fill:white;stroke:black;stroke-width:1}"
         ".obstacle{fill:#9e9e9e;stroke:#616161;stroke-width:0.5}"
         ".pipe{fill:none;stroke:#d32f2f;stroke-width:2}"
         ".start{fill:#2e7d32}.end{fill:#1565c0}"
         ".lbl{font:10px monospace;fill:black}</style>\n";
  for (int i = 0; i < 3; ++i) {
    render_projection(svg, scene, path, projections[i], offsets[i]);
  }
  svg << "</svg>\n";
  return std::move(svg).str();
}

std::string render_ascii(const Scene& scene, const std::vector<Cell>& path) {
  OccupancyGrid grid(scene);
  std::vector<std::uint8_t> on_path(scene.cell_count(), 0);
  for (const Cell& c : path) on_path[scene.cell_index(c)] = 1;
  std::string out;
  for (int z = scene.dims.z - 1; z >= 0; --z) {
    out += "z=" + std::to_string(z) + "\n";
    for (int y = scene.dims.y - 1; y >= 0; --y) {
      for (int x = 0; x < scene.dims.x; ++x) {
        const Cell c{x, y, z};
        char ch = '.';
        if (grid.blocked(c)) ch = '#';
        if (on_path[scene.cell_index(c)]) ch = '*';
        if (c == scene.start) ch = 'S';
        if (c == scene.end) ch = 'E';
        out += ch;
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

}  // namespace pipelayout
