#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "oracles.hpp"
#include "pipelayout/bench.hpp"
#include "pipelayout/errors.hpp"
#include "pipelayout/io.hpp"
#include "pipelayout/planner.hpp"
#include "pipelayout/policy.hpp"
#include "pipelayout/scene.hpp"

using namespace pipelayout;

namespace {

namespace fs = std::filesystem;

const fs::path kWorkDir = fs::temp_directory_path() / "pipelayout_cli";

// Runs the CLI binary with stdout/stderr captured; returns the exit code.
int run_cli(const std::string& args) {
  fs::create_directories(kWorkDir);
  std::string cmd = std::string(PIPELAYOUT_CLI_PATH) + " " + args + " >" +
                    (kWorkDir / "stdout.txt").string() + " 2>" +
                    (kWorkDir / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string captured_stdout() { return read_file((kWorkDir / "stdout.txt").string()); }
std::string captured_stderr() { return read_file((kWorkDir / "stderr.txt").string()); }

std::string path_in(const char* name) { return (kWorkDir / name).string(); }

}  // namespace

TEST_CASE("cli: gen-scene determinism and validation") {
  fs::create_directories(kWorkDir);
  CHECK(run_cli("gen-scene --seed 7 --min-dims 12,12,9 --max-dims 12,12,9 "
                "--out " + path_in("s1.json")) == 0);
  CHECK(run_cli("gen-scene --seed 7 --min-dims 12,12,9 --max-dims 12,12,9 "
                "--out " + path_in("s2.json")) == 0);
  CHECK(read_file(path_in("s1.json")) == read_file(path_in("s2.json")));

  Scene s = parse_scene(read_file(path_in("s1.json")));
  CHECK_NOTHROW(validate_scene(s));
  CHECK(s.dims == Cell{12, 12, 9});

  SUBCASE("missing required flag is a usage error") {
    CHECK(run_cli("gen-scene --out " + path_in("x.json")) == 2);
  }
  SUBCASE("unknown subcommand is a usage error") {
    CHECK(run_cli("frobnicate") == 2);
  }
}

TEST_CASE("cli: route produces a valid path file") {
  fs::create_directories(kWorkDir);
  REQUIRE(run_cli("gen-scene --seed 11 --min-dims 12,12,9 --max-dims 12,12,9 "
                  "--out " + path_in("scene.json")) == 0);
  Scene s = parse_scene(read_file(path_in("scene.json")));

  CHECK(run_cli("route --scene " + path_in("scene.json") +
                " --algo astar --constraints 1,2 --out " +
                path_in("path.json")) == 0);
  Path p = parse_path(read_file(path_in("path.json")));
  CHECK(p.algorithm == "astar");
  CHECK(p.constraints == ConstraintSet::length_elbow());
  CHECK_NOTHROW(validate_path(p, s));
  auto want = plan_astar(s, ConstraintSet::length_elbow());
  REQUIRE(want.path.has_value());
  CHECK(p.cells == want.path->cells);
  CHECK(p.cost == want.path->cost);

  SUBCASE("drl without a model names the missing flag") {
    CHECK(run_cli("route --scene " + path_in("scene.json") +
                  " --algo drl --out " + path_in("p2.json")) == 2);
    CHECK(captured_stderr().find("--model") != std::string::npos);
  }
  SUBCASE("unknown algorithm is a usage error") {
    CHECK(run_cli("route --scene " + path_in("scene.json") +
                  " --algo rrt --out " + path_in("p3.json")) == 2);
  }
  SUBCASE("bad constraint list is a usage error") {
    CHECK(run_cli("route --scene " + path_in("scene.json") +
                  " --algo astar --constraints 9 --out " +
                  path_in("p4.json")) == 2);
  }
  SUBCASE("missing scene file fails") {
    CHECK(run_cli("route --scene " + path_in("absent.json") +
                  " --algo astar --out " + path_in("p5.json")) != 0);
  }
  SUBCASE("unsolvable scene exits with the domain code") {
    Scene blocked = oracles::empty_scene({9, 9, 9}, {0, 4, 4}, {8, 4, 4});
    oracles::add_box(blocked, ObstacleKind::Column, {4, 0, 0}, {5, 9, 9});
    write_file_atomic(path_in("blocked.json"), serialize_scene(blocked));
    CHECK(run_cli("route --scene " + path_in("blocked.json") +
                  " --algo dijkstra --out " + path_in("p6.json")) == 1);
  }
}

TEST_CASE("cli: eval prints a metrics row") {
  fs::create_directories(kWorkDir);
  REQUIRE(run_cli("gen-scene --seed 13 --min-dims 12,12,9 --max-dims 12,12,9 "
                  "--out " + path_in("es.json")) == 0);
  REQUIRE(run_cli("route --scene " + path_in("es.json") +
                  " --algo dijkstra --constraints 1,2,3 --out " +
                  path_in("ep.json")) == 0);
  CHECK(run_cli("eval --scene " + path_in("es.json") + " --path " +
                path_in("ep.json")) == 0);
  std::string out = captured_stdout();
  CHECK(out.find("length_cells,elbows,install_distance_cells,cost,"
                 "cells_unique") != std::string::npos);

  Scene s = parse_scene(read_file(path_in("es.json")));
  Path p = parse_path(read_file(path_in("ep.json")));
  Metrics m = path_metrics(s, p);
  CHECK(out.find("\n" + std::to_string(m.length_cells) + "," +
                 std::to_string(m.elbows) + ",") != std::string::npos);
}

TEST_CASE("cli: render writes both formats") {
  fs::create_directories(kWorkDir);
  REQUIRE(run_cli("gen-scene --seed 17 --min-dims 12,12,9 --max-dims 12,12,9 "
                  "--out " + path_in("rs.json")) == 0);
  REQUIRE(run_cli("route --scene " + path_in("rs.json") +
                  " --algo astar --out " + path_in("rp.json")) == 0);
  CHECK(run_cli("render --scene " + path_in("rs.json") + " --path " +
                path_in("rp.json") + " --format svg --out " +
                path_in("r.svg")) == 0);
  CHECK(read_file(path_in("r.svg")).rfind("<svg", 0) == 0);
  CHECK(run_cli("render --scene " + path_in("rs.json") + " --path " +
                path_in("rp.json") + " --format ascii --out " +
                path_in("r.txt")) == 0);
  CHECK(read_file(path_in("r.txt")).find("z=") != std::string::npos);
}

TEST_CASE("cli: tiny train run writes a checkpoint and log") {
  fs::create_directories(kWorkDir);
  CHECK(run_cli("train --timesteps 128 --seed 3 --workers 1 --hidden-width 8 "
                "--scene-dims 8,8,6 --out " + path_in("ck.bin") + " --log " +
                path_in("train.csv")) == 0);
  PolicyNet net = load_checkpoint(path_in("ck.bin"),
                                  observation_layout_hash(FeatureMask{}));
  CHECK(net.trained_timesteps >= 128);
  CHECK(net.train_seed == 3);
  std::string log = read_file(path_in("train.csv"));
  CHECK(log.rfind("iter,timesteps,", 0) == 0);

  SUBCASE("masked training stamps a different layout hash") {
    CHECK(run_cli("train --timesteps 128 --seed 3 --workers 1 "
                  "--hidden-width 8 --scene-dims 8,8,6 "
                  "--mask-features angle --out " + path_in("ckm.bin")) == 0);
    CHECK_THROWS_AS(load_checkpoint(path_in("ckm.bin"),
                                    observation_layout_hash(FeatureMask{})),
                    LayoutMismatch);
    CHECK_NOTHROW(load_checkpoint(
        path_in("ckm.bin"),
        observation_layout_hash(FeatureMask::angle_only())));
  }
}

TEST_CASE("cli: bench writes the report csv") {
  fs::create_directories(kWorkDir);
  CHECK(run_cli("bench --scenes 3 --seed 5 --scene-dims 10,10,8 --out " +
                path_in("bench.csv")) == 0);
  std::string csv = read_file(path_in("bench.csv"));
  CHECK(csv.rfind("algo,constraints,n,", 0) == 0);
  CHECK(csv.find("dijkstra,\"1\",3,") != std::string::npos);
  CHECK(csv.find("astar,\"1,2,3\",3,") != std::string::npos);
  CHECK(captured_stdout().find("x0.1 m") != std::string::npos);

  SUBCASE("drl in the algo list requires models") {
    CHECK(run_cli("bench --scenes 2 --seed 5 --scene-dims 10,10,8 "
                  "--algos dijkstra,drl --out " + path_in("b2.csv")) == 2);
  }
}
