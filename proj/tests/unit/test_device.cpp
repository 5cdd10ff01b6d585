#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hss/device.hpp"

using namespace hss;

TEST_CASE("service time: base plus transfer") {
  DeviceSpec d{"X", 100, 5.0, 7.0, 1.0, 2.0, std::nullopt};
  // 1 MiB/s moves 1.048576 bytes per microsecond.
  CHECK(service_time(d, Op::Read, 1) == doctest::Approx(5.0 + 4096.0 / 1.048576));
  CHECK(service_time(d, Op::Write, 2) == doctest::Approx(7.0 + 8192.0 / 2.097152));
}

TEST_CASE("service time: IOPS ceiling is a floor on service time") {
  DeviceSpec d{"X", 100, 0.0, 0.0, 1e6, 1e6, 1000};
  CHECK(service_time(d, Op::Read, 1) == doctest::Approx(1000.0));
  d.max_iops.reset();
  CHECK(service_time(d, Op::Read, 1) < 1.0);
}

TEST_CASE("service time: mid-range SSD reads are bounded by its IOPS") {
  const HssConfig h = preset("perf_opt");
  CHECK(service_time(h.devices[1], Op::Read, 1) == doctest::Approx(80.0 + 4096.0 / (560.0 * 1.048576)));
  CHECK(service_time(h.devices[0], Op::Read, 1) == doctest::Approx(10.0 + 4096.0 / (2400.0 * 1.048576)));
}

TEST_CASE("presets: all valid, fastest first") {
  for (const std::string& name : preset_names()) {
    const HssConfig h = preset(name);
    CHECK_NOTHROW(h.validate());
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(speed_score(h.devices[i - 1]) < speed_score(h.devices[i]));
  }
  CHECK(preset("tri_hss").size() == 3);
  CHECK(preset("quad_hss").size() == 4);
  CHECK(preset("pmem_hss").fast().name == "PMEM");
  CHECK(preset("quad_hss").devices[1].name == "L_SSD");
  CHECK_THROWS_AS(preset("nope"), InputError);
}

TEST_CASE("config validation") {
  HssConfig h = preset("perf_opt");
  std::swap(h.devices[0], h.devices[1]);
  CHECK_THROWS_AS(h.validate(), InputError);
  h = preset("perf_opt");
  h.devices.pop_back();
  CHECK_THROWS_AS(h.validate(), InputError);
  h = preset("perf_opt");
  h.devices[1].read_bw_mbps = 0;
  CHECK_THROWS_AS(h.validate(), InputError);
  h = preset("perf_opt");
  h.devices[0].capacity_pages = 0;
  CHECK_THROWS_AS(h.validate(), InputError);
  h = preset("perf_opt");
  while (h.devices.size() <= HssConfig::kMaxDevices) {
    DeviceSpec d = h.devices.back();
    d.read_base_us += 1000.0;
    h.devices.push_back(d);
  }
  CHECK_THROWS_AS(h.validate(), InputError);
}

TEST_CASE("capacities: fast fraction rounds up, others hold the footprint") {
  const HssConfig h = with_capacities(preset("tri_hss"), 1005, 0.1);
  CHECK(*h.devices[0].capacity_pages == 101);
  CHECK(*h.devices[1].capacity_pages == 1005);
  CHECK(*h.devices[2].capacity_pages == 1005);
  HssConfig fixed = preset("perf_opt");
  fixed.devices[0].capacity_pages = 7;
  CHECK(*with_capacities(fixed, 1000, 0.1).devices[0].capacity_pages == 7);
  CHECK(*with_capacities(preset("perf_opt"), 3, 0.1).devices[0].capacity_pages == 1);
  CHECK_THROWS_AS(with_capacities(preset("perf_opt"), 3, 0.0), InputError);
}

TEST_CASE("device channel is FIFO") {
  const DeviceSpec d{"X", 10, 10.0, 10.0, 1e9, 1e9, std::nullopt};
  DeviceState s(10);
  const Completion a = request_latency(s, d, Op::Read, 1, 0.0);
  CHECK(a.completion_us == doctest::Approx(10.0));
  const Completion b = request_latency(s, d, Op::Read, 1, 5.0);  // waits for a
  CHECK(b.completion_us == doctest::Approx(20.0));
  CHECK(b.latency_us == doctest::Approx(15.0));
  const Completion c = request_latency(s, d, Op::Write, 1, 100.0);  // idle channel
  CHECK(c.latency_us == doctest::Approx(10.0));
  CHECK(s.busy_until() == doctest::Approx(110.0));
}

TEST_CASE("residency bookkeeping") {
  DeviceState s(2);
  s.insert(1);
  s.insert(2);
  CHECK(s.free_pages() == 0);
  CHECK_THROWS_AS(s.insert(3), InvariantError);
  CHECK_THROWS_AS(s.erase(9), InvariantError);
  s.erase(1);
  CHECK_THROWS_AS(s.insert(2), InvariantError);
  CHECK(s.holds(2));
  CHECK_FALSE(s.holds(1));
}
