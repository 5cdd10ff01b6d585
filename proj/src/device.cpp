#include "hss/device.hpp"

#include <algorithm>
#include <cmath>

namespace hss {

namespace {

constexpr double kBytesPerMiB = 1048576.0;

DeviceSpec high_end_ssd() {
  // Optane P4800X: R/W 2.4/2 GB/s, 550k/500k random IOPS.
  return {"H", std::nullopt, 10.0, 10.0, 2400.0, 2000.0, 500000};
}

DeviceSpec mid_range_ssd() {
  // D3-S4510: R/W 560/510 MB/s, 21k random write IOPS bounds the channel.
  return {"M", std::nullopt, 80.0, 80.0, 560.0, 510.0, 21000};
}

DeviceSpec low_end_hdd() {
  // ST1000DM010, 210 MB/s sustained; base covers seek plus rotation.
  return {"L", std::nullopt, 4000.0, 4000.0, 210.0, 210.0, std::nullopt};
}

DeviceSpec low_end_ssd() {
  // SU630: R/W 520/450 MB/s.
  return {"L_SSD", std::nullopt, 60.0, 60.0, 520.0, 450.0, std::nullopt};
}

DeviceSpec pmem() {
  // Optane PMem 200, memory mode: R/W 7.45/2.25 GB/s.
  return {"PMEM", std::nullopt, 1.0, 1.0, 7450.0, 2250.0, std::nullopt};
}

}  // namespace

void DeviceSpec::validate() const {
  if (capacity_pages && *capacity_pages == 0)
    throw InputError("device " + name + ": capacity_pages must be positive");
  if (!(read_base_us >= 0.0) || !(write_base_us >= 0.0))
    throw InputError("device " + name + ": base latencies must be non-negative");
  if (!(read_bw_mbps > 0.0) || !(write_bw_mbps > 0.0))
    throw InputError("device " + name + ": bandwidths must be positive");
  if (max_iops && *max_iops == 0) throw InputError("device " + name + ": max_iops must be positive");
}

double service_time(const DeviceSpec& spec, Op op, std::uint32_t size_pages) {
  const double base = op == Op::Read ? spec.read_base_us : spec.write_base_us;
  const double bw = op == Op::Read ? spec.read_bw_mbps : spec.write_bw_mbps;
  const double bytes_per_us = bw * kBytesPerMiB / 1e6;
  double t = base + static_cast<double>(size_pages) * static_cast<double>(kPageBytes) / bytes_per_us;
  if (spec.max_iops) t = std::max(t, 1e6 / static_cast<double>(*spec.max_iops));
  return t;
}

double speed_score(const DeviceSpec& spec) { return service_time(spec, Op::Read, 1); }

void HssConfig::validate() const {
  if (devices.size() < kMinDevices || devices.size() > kMaxDevices)
    throw InputError("an HSS needs between 2 and 16 devices, got " + std::to_string(devices.size()));
  for (const auto& d : devices) d.validate();
  for (std::size_t i = 1; i < devices.size(); ++i) {
    if (!(speed_score(devices[i - 1]) < speed_score(devices[i])))
      throw InputError("devices must be listed fastest first: " + devices[i - 1].name +
                       " is not faster than " + devices[i].name);
  }
}

HssConfig preset(std::string_view name) {
  HssConfig cfg;
  if (name == "perf_opt") {
    cfg.devices = {high_end_ssd(), mid_range_ssd()};
  } else if (name == "cost_opt") {
    cfg.devices = {high_end_ssd(), low_end_hdd()};
  } else if (name == "pmem_hss") {
    cfg.devices = {pmem(), high_end_ssd()};
  } else if (name == "tri_hss") {
    cfg.devices = {high_end_ssd(), mid_range_ssd(), low_end_hdd()};
  } else if (name == "quad_hss") {
    cfg.devices = {high_end_ssd(), mid_range_ssd(), low_end_ssd(), low_end_hdd()};
  } else {
    throw InputError("unknown HSS preset '" + std::string(name) + "'");
  }
  // With the default base latencies the low-end SSD outruns the mid-range one
  // on a 1-page read, so the quad preset is reordered by speed.
  std::stable_sort(cfg.devices.begin(), cfg.devices.end(),
                   [](const DeviceSpec& a, const DeviceSpec& b) { return speed_score(a) < speed_score(b); });
  cfg.validate();
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"perf_opt", "cost_opt", "pmem_hss", "tri_hss", "quad_hss"};
}

HssConfig with_capacities(HssConfig config, std::uint64_t footprint, double fast_fraction) {
  if (!(fast_fraction > 0.0 && fast_fraction <= 1.0))
    throw InputError("fast capacity fraction must lie in (0,1]");
  const std::uint64_t whole = std::max<std::uint64_t>(footprint, 1);
  for (std::size_t i = 0; i < config.devices.size(); ++i) {
    auto& cap = config.devices[i].capacity_pages;
    if (cap) continue;
    if (i == 0) {
      cap = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::ceil(fast_fraction * static_cast<double>(footprint))));
    } else {
      cap = whole;
    }
  }
  return config;
}

void DeviceState::insert(PageAddr page) {
  if (used() >= capacity_)
    throw InvariantError("device capacity exceeded while inserting page " + std::to_string(page));
  if (!resident_.insert(page).second)
    throw InvariantError("page " + std::to_string(page) + " already resident");
}

void DeviceState::erase(PageAddr page) {
  if (resident_.erase(page) != 1)
    throw InvariantError("page " + std::to_string(page) + " not resident");
}

Completion request_latency(DeviceState& state, const DeviceSpec& spec, Op op,
                           std::uint32_t size_pages, double now_us) {
  const double start = std::max(now_us, state.busy_until());
  const double done = start + service_time(spec, op, size_pages);
  state.set_busy_until(done);
  return {done, done, done - now_us};
}

}  // namespace hss
