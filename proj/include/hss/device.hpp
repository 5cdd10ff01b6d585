#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hss/types.hpp"

namespace hss {

// Latency/bandwidth model of one storage device. Bandwidths are in MiB/s
// (1 MB = 2^20 bytes), so a 4 KiB page at 2000 MB/s takes 4096/2097.152 us.
struct DeviceSpec {
  std::string name;
  // nullopt means "size me from the trace footprint at run time".
  std::optional<std::uint64_t> capacity_pages;
  double read_base_us = 0.0;
  double write_base_us = 0.0;
  double read_bw_mbps = 1.0;
  double write_bw_mbps = 1.0;
  std::optional<std::uint64_t> max_iops;

  void validate() const;
};

double service_time(const DeviceSpec& spec, Op op, std::uint32_t size_pages);

// 1-page read service time; devices are ordered by it.
double speed_score(const DeviceSpec& spec);

struct HssConfig {
  std::vector<DeviceSpec> devices;  // index 0 is the fast device

  static constexpr std::size_t kMinDevices = 2;
  static constexpr std::size_t kMaxDevices = 16;

  std::size_t size() const { return devices.size(); }
  const DeviceSpec& fast() const { return devices.front(); }

  // Device count in [2,16], every spec valid, strictly increasing 1-page read
  // time along the list.
  void validate() const;
};

HssConfig preset(std::string_view name);
std::vector<std::string> preset_names();

// Copy of `config` with every unset capacity resolved for a trace touching
// `footprint` distinct pages: the fast device gets ceil(fraction * footprint),
// every other device the whole footprint.
HssConfig with_capacities(HssConfig config, std::uint64_t footprint, double fast_fraction);

struct Completion {
  double completion_us;
  double busy_until_us;
  double latency_us;
};

// Single service channel per device: a request starts once the channel frees.
class DeviceState {
 public:
  explicit DeviceState(std::uint64_t capacity_pages = 0) : capacity_(capacity_pages) {}

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t used() const { return resident_.size(); }
  std::uint64_t free_pages() const { return capacity_ - used(); }
  double busy_until() const { return busy_until_; }
  void set_busy_until(double t) { busy_until_ = t; }

  bool holds(PageAddr page) const { return resident_.contains(page); }
  const std::unordered_set<PageAddr>& resident() const { return resident_; }

  // Both throw InvariantError on capacity overflow or double insert/remove.
  void insert(PageAddr page);
  void erase(PageAddr page);

 private:
  std::uint64_t capacity_;
  double busy_until_ = 0.0;
  std::unordered_set<PageAddr> resident_;
};

// Schedules one request on the device channel and advances busy_until.
Completion request_latency(DeviceState& state, const DeviceSpec& spec, Op op,
                           std::uint32_t size_pages, double now_us);

}  // namespace hss
