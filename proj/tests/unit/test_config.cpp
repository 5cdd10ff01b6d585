#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hss/config.hpp"

using namespace hss;

namespace {

SimConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

TraceProfile profile(const std::string& text) {
  std::istringstream in(text);
  return parse_profile(in);
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const SimConfig c = parse("");
  CHECK(c.hss.size() == 2);
  CHECK(c.hss.fast().name == "H");
  CHECK(c.knobs.migration_queue_size == 10);
  CHECK(c.knobs.reward.n == 50);
  CHECK(c.knobs.reward.x == 10);
  CHECK(c.knobs.placement.gamma == 0.9);
  CHECK(c.knobs.migration.gamma == 0.1);
  CHECK(c.knobs.migration.batch_size == 256);
}

TEST_CASE("sections set their fields") {
  const SimConfig c = parse(
      "preset = tri_hss\n"
      "[devices.0]\nread_base_us = 12\ncapacity_pages = 64\n"
      "[agents.placement]\nlearning_rate = 0.01\nnum_atoms = 1\noptimizer = sgd\n"
      "[agents.migration]\nreward_horizon_n = 250\nbeta = 0.5\nbootstrap = inference\n"
      "[engine]\nmigration_queue_size = 0\nidle_window_us = 100\nlow_priority_fast_path = false\n");
  CHECK(c.hss.size() == 3);
  CHECK(c.hss.devices[0].read_base_us == 12.0);
  CHECK(*c.hss.devices[0].capacity_pages == 64);
  CHECK(c.knobs.placement.learning_rate == 0.01);
  CHECK(c.knobs.placement.num_atoms == 1);
  CHECK(c.knobs.placement.optimizer == rl::OptimizerKind::Sgd);
  CHECK(c.knobs.reward.n == 250);
  CHECK(c.knobs.reward.beta == 0.5);
  CHECK(c.knobs.migration.bootstrap == rl::BootstrapNet::Inference);
  CHECK(c.knobs.migration_queue_size == 0);
  CHECK(*c.knobs.idle_window_us == 100.0);
  CHECK_FALSE(c.knobs.low_priority_fast_path);
}

TEST_CASE("devices can be appended in order") {
  const SimConfig c = parse(
      "[devices.2]\nname = slow\nread_base_us = 9000\nwrite_base_us = 9000\nread_bw_mbps = 100\n"
      "write_bw_mbps = 100\n");
  CHECK(c.hss.size() == 3);
  CHECK(c.hss.devices[2].name == "slow");
  CHECK_THROWS_AS(parse("[devices.5]\nname = x\n"), InputError);
}

TEST_CASE("unknown keys, sections and bad values are errors") {
  CHECK_THROWS_AS(parse("[engine]\nqueue = 3\n"), InputError);
  CHECK_THROWS_AS(parse("[nope]\na = 1\n"), InputError);
  CHECK_THROWS_AS(parse("colour = blue\n"), InputError);
  CHECK_THROWS_AS(parse("[engine]\nmigration_queue_size = ten\n"), InputError);
  CHECK_THROWS_AS(parse("[engine]\nmigration_queue_size = -1\n"), InputError);
  CHECK_THROWS_AS(parse("[agents.placement]\noptimizer = rmsprop\n"), InputError);
  CHECK_THROWS_AS(parse("[agents.placement]\ngamma = 2\n"), InputError);
  CHECK_THROWS_AS(parse("[engine]\nscan_window = 1\nscan_window = 2\n"), InputError);
  CHECK_THROWS_AS(parse("[devices.0]\nread_base_us = 500\n"), InputError);  // slower than device 1
  CHECK_THROWS_AS(parse("preset = warp\n"), InputError);
  try {
    parse("[engine]\nbogus = 1\n");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("knobs: aliases and dotted names") {
  SimConfig c;
  set_knob(c, "queue_size", "20");
  set_knob(c, "n", "5");
  set_knob(c, "x", "3");
  set_knob(c, "beta", "0.2");
  set_knob(c, "atoms", "1");
  set_knob(c, "agents.migration.learning_rate", "0.5");
  set_knob(c, "devices.1.write_bw_mbps", "300");
  CHECK(c.knobs.migration_queue_size == 20);
  CHECK(c.knobs.reward.n == 5);
  CHECK(c.knobs.reward.x == 3);
  CHECK(c.knobs.reward.beta == 0.2);
  CHECK(c.knobs.placement.num_atoms == 1);
  CHECK(c.knobs.migration.num_atoms == 1);
  CHECK(c.knobs.migration.learning_rate == 0.5);
  CHECK(c.hss.devices[1].write_bw_mbps == 300.0);
}

TEST_CASE("unknown knob lists the valid ones") {
  SimConfig c;
  try {
    set_knob(c, "warp_factor", "9");
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("queue_size") != std::string::npos);
    CHECK(msg.find("engine.scan_window") != std::string::npos);
  }
  CHECK_THROWS_AS(set_knob(c, "engine.warp", "1"), InputError);
  CHECK_THROWS_AS(set_knob(c, "queue_size", "many"), InputError);
}

TEST_CASE("profiles") {
  const TraceProfile p = profile(
      "read_fraction = 0.8\nfootprint_pages = 500\nrequest_sizes = 1:0.5, 8:0.5\nphase_length_requests = 5000\n");
  CHECK(p.read_fraction == 0.8);
  CHECK(p.footprint_pages == 500);
  CHECK(p.request_size_distribution.size() == 2);
  CHECK(p.request_size_distribution[1].first == 8);
  CHECK(*p.phase_length_requests == 5000);
  CHECK_THROWS_AS(profile("read_fraction = 2\n"), InputError);
  CHECK_THROWS_AS(profile("speed = 1\n"), InputError);
  CHECK_THROWS_AS(profile("[x]\na = 1\n"), InputError);
  CHECK_THROWS_AS(profile("request_sizes = 1:0.5\n"), InputError);
}
