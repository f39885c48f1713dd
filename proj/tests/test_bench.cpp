#include <filesystem>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "pipelayout/bench.hpp"
#include "pipelayout/errors.hpp"
#include "pipelayout/io.hpp"
#include "pipelayout/mdp.hpp"

using namespace pipelayout;

namespace {

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t p = text.find(needle); p != std::string::npos;
       p = text.find(needle, p + 1)) {
    ++n;
  }
  return n;
}

Path straight_path(const Scene& s) {
  Path p;
  p.algorithm = "dijkstra";
  p.constraints = ConstraintSet::length_only();
  for (int x = s.start.x; x <= s.end.x; ++x) p.cells.push_back({x, s.start.y, s.start.z});
  p.cost = 0.5 * (p.cells.size() - 1);
  return p;
}

}  // namespace

TEST_CASE("path metrics") {
  SUBCASE("five-step corridor") {
    Scene s = oracles::empty_scene({6, 6, 6}, {0, 0, 0}, {5, 0, 0});
    Metrics m = path_metrics(s, straight_path(s));
    CHECK(m.length_cells == 5);
    CHECK(m.elbows == 0);
    CHECK(m.success);
    CHECK(m.cells_unique);
    // Mean clearance over the five cells after the start.
    double want = 0.0;
    for (int x = 1; x <= 5; ++x) want += oracles::min_free_distance(s, {x, 0, 0});
    want /= 5;
    CHECK(m.install_distance_cells == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("an L of 4+3 moves has one elbow") {
    Scene s = oracles::empty_scene({8, 8, 8}, {0, 0, 0}, {4, 3, 0});
    Path p;
    p.algorithm = "astar";
    p.constraints = ConstraintSet::length_elbow();
    for (int x = 0; x <= 4; ++x) p.cells.push_back({x, 0, 0});
    for (int y = 1; y <= 3; ++y) p.cells.push_back({4, y, 0});
    Metrics m = path_metrics(s, p);
    CHECK(m.length_cells == 7);
    CHECK(m.elbows == 1);
  }
  SUBCASE("install metric mirrors the reward term exactly") {
    Scene s = generate_scene(31, SceneConfig::desk({12, 12, 9}));
    auto r = plan_dijkstra(s, ConstraintSet::all());
    REQUIRE(r.path.has_value());
    Metrics m = path_metrics(s, *r.path);

    PipeEnv env;
    env.reset(s);
    for (std::size_t i = 1; i < r.path->cells.size(); ++i) {
      env.step(static_cast<int>(
          *move_direction(r.path->cells[i - 1], r.path->cells[i])));
    }
    EpisodeSummary sum = env.summary();
    REQUIRE(sum.terminal == Terminal::Success);
    CHECK(m.length_cells == sum.steps);
    CHECK(m.elbows == sum.elbows);
    CHECK(m.install_distance_cells * m.length_cells ==
          doctest::Approx(sum.install_sum).epsilon(1e-9));
  }
  SUBCASE("invalid paths are rejected") {
    Scene s = oracles::empty_scene({6, 6, 6}, {0, 0, 0}, {5, 0, 0});
    Path p = straight_path(s);
    p.cells[2] = {2, 3, 0};  // gap
    CHECK_THROWS_AS(path_metrics(s, p), InvalidPath);
  }
}

TEST_CASE("greedy drl routing") {
  PolicyNet net(kObservationSize, 8, 2);  // zero params: lowest legal index
  SUBCASE("walks a clear corridor") {
    Scene s = oracles::empty_scene({6, 6, 6}, {0, 0, 0}, {5, 0, 0});
    auto path = route_drl(s, net, ConstraintSet::all());
    REQUIRE(path.has_value());
    CHECK(path->algorithm == "drl");
    CHECK(path->cells.size() == 6);
    CHECK(path->cells.front() == s.start);
    CHECK(path->cells.back() == s.end);
    CHECK(path->cost ==
          doctest::Approx(path_cost(s, ConstraintSet::all(), path->cells))
              .epsilon(1e-12));
    CHECK(path->constraints == ConstraintSet::all());
  }
  SUBCASE("reports no path when the greedy walk traps itself") {
    Scene s = oracles::empty_scene({4, 3, 1}, {0, 0, 0}, {2, 2, 0});
    oracles::add_box(s, ObstacleKind::Column, {3, 0, 0}, {4, 3, 1});
    oracles::add_box(s, ObstacleKind::Column, {1, 1, 0}, {3, 2, 1});
    REQUIRE(is_solvable(s));
    auto path = route_drl(s, net, ConstraintSet::length_only());
    CHECK(!path.has_value());
    auto planned = plan_dijkstra(s, ConstraintSet::length_only());
    CHECK(planned.path.has_value());
  }
}

TEST_CASE("benchmark harness") {
  BenchConfig cfg;
  cfg.scenes = 6;
  cfg.seed = 77;
  cfg.scene_config = SceneConfig::desk({12, 12, 9});

  SUBCASE("planner-only report") {
    Report report = run_benchmark(cfg);
    CHECK(report.scenes == 6);
    CHECK(report.scene_seeds.size() == 6);
    REQUIRE(report.rows.size() == 6);  // 2 algos x 3 constraint sets

    for (const auto& row : report.rows) {
      CHECK(row.n == 6);
      CHECK(row.success_rate == 1.0);
      CHECK(row.mean_time_s > 0.0);
      CHECK(row.p95_time_s > 0.0);
      CHECK(row.mean_expanded_nodes > 0.0);
      CHECK(row.mean_length > 0.0);
    }
    // Equal mean cost per constraint set across the two planners.
    for (int c = 0; c < 3; ++c) {
      const ReportRow& d = report.rows[c];
      const ReportRow& a = report.rows[3 + c];
      REQUIRE(d.algo == "dijkstra");
      REQUIRE(a.algo == "astar");
      CHECK(d.constraints == a.constraints);
      CHECK(d.mean_cost == doctest::Approx(a.mean_cost).epsilon(1e-9));
      CHECK(a.mean_expanded_nodes <= d.mean_expanded_nodes);
    }

    SUBCASE("csv is stable and quoted") {
      std::string csv = report_csv(report);
      CHECK(csv.rfind("algo,constraints,n,success_rate,mean_length,"
                      "mean_elbows,mean_install,mean_time_s,p95_time_s,"
                      "mean_expanded_nodes\n",
                      0) == 0);
      CHECK(count_occurrences(csv, "\n") == 7);  // header + 6 rows
      CHECK(count_occurrences(csv, "dijkstra,\"1\",6,") == 1);
      CHECK(count_occurrences(csv, "astar,\"1,2,3\",6,") == 1);
    }
    SUBCASE("table mentions the cell unit") {
      std::string table = report_table(report);
      CHECK(table.find("x0.1 m") != std::string::npos);
      CHECK(table.find("dijkstra") != std::string::npos);
      CHECK(table.find("astar") != std::string::npos);
    }
  }

  SUBCASE("scene stream is identical across runs") {
    Report r1 = run_benchmark(cfg);
    Report r2 = run_benchmark(cfg);
    CHECK(r1.scene_seeds == r2.scene_seeds);
    for (int i = 0; i < cfg.scenes; ++i) {
      CHECK(serialize_scene(generate_scene(r1.scene_seeds[i], cfg.scene_config)) ==
            serialize_scene(generate_scene(r2.scene_seeds[i], cfg.scene_config)));
    }
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
      CHECK(r1.rows[i].mean_cost == r2.rows[i].mean_cost);
      CHECK(r1.rows[i].mean_length == r2.rows[i].mean_length);
    }
  }

  SUBCASE("drl requires a matching checkpoint per constraint set") {
    BenchConfig drl = cfg;
    drl.algos = {"dijkstra", "drl"};
    CHECK_THROWS_AS(run_benchmark(drl), ConfigError);

    PolicyNet net(kObservationSize, 8, 2);
    net.init_params(1);
    net.obs_layout_hash = observation_layout_hash(FeatureMask{});
    auto dir = std::filesystem::temp_directory_path();
    auto ckpt = (dir / "pipelayout_bench_net.bin").string();
    save_checkpoint(net, ckpt);
    drl.drl_models = {{"1", ckpt}, {"1,2", ckpt}, {"1,2,3", ckpt}};
    Report report = run_benchmark(drl);
    CHECK(report.rows.size() == 6);
    bool saw_drl = false;
    for (const auto& row : report.rows) {
      if (row.algo != "drl") continue;
      saw_drl = true;
      CHECK(row.n == 6);
      CHECK(row.mean_expanded_nodes == 0.0);
      CHECK(row.mean_time_s > 0.0);
    }
    CHECK(saw_drl);

    SUBCASE("layout mismatch is caught before any scene work") {
      PolicyNet masked(kObservationSize, 8, 2);
      masked.obs_layout_hash = observation_layout_hash(FeatureMask::angle_only());
      auto bad = (dir / "pipelayout_bench_masked.bin").string();
      save_checkpoint(masked, bad);
      BenchConfig mismatched = drl;
      mismatched.drl_models["1,2"] = bad;
      CHECK_THROWS_AS(run_benchmark(mismatched), LayoutMismatch);
    }
  }

  SUBCASE("unknown algorithm is a config error") {
    BenchConfig bad = cfg;
    bad.algos = {"dijkstra", "rrt"};
    CHECK_THROWS_AS(run_benchmark(bad), ConfigError);
  }
}

TEST_CASE("svg rendering") {
  Scene s = oracles::empty_scene({6, 6, 6}, {0, 0, 0}, {5, 0, 0});
  Path p = straight_path(s);
  std::string svg = render_svg(s, p.cells);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_occurrences(svg, "<polyline") == 3);  // one per projection
  CHECK(count_occurrences(svg, "<circle") == 6);    // start+end per projection
  CHECK(render_svg(s, p.cells) == svg);

  // Start/end markers come from the scene, so they stay without a path.
  std::string no_path = render_svg(s, {});
  CHECK(count_occurrences(no_path, "<polyline") == 0);
  CHECK(count_occurrences(no_path, "<circle") == 6);

  Scene cluttered = generate_scene(7, SceneConfig::desk({12, 12, 9}));
  auto r = plan_astar(cluttered, ConstraintSet::all());
  REQUIRE(r.path.has_value());
  std::string full = render_svg(cluttered, r.path->cells);
  CHECK(count_occurrences(full, "<polyline") == 3);
  CHECK(count_occurrences(full, "class=\"obstacle\"") > 0);
}

TEST_CASE("ascii rendering against a frozen golden") {
  Scene s;
  s.dims = {4, 2, 2};
  s.start = {0, 0, 0};
  s.end = {3, 0, 0};
  s.obstacles.push_back({ObstacleKind::Column, {1, 1, 0}, {2, 2, 1}});
  std::vector<Cell> path{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const std::string golden =
      "z=1\n"
      "....\n"
      "....\n"
      "\n"
      "z=0\n"
      ".#..\n"
      "S**E\n"
      "\n";
  CHECK(render_ascii(s, path) == golden);
  CHECK(render_ascii(s, path) == render_ascii(s, path));
}
