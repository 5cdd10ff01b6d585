#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>

#include "hss/types.hpp"

namespace hss {

// Binned per-request state shared by both agents.
struct Observation {
  std::uint8_t req_type_bin = 0;   // 0 read, 1 write
  std::uint8_t req_size_bin = 0;   // 0..7
  std::uint8_t acc_intr_bin = 0;   // 0..63
  std::uint8_t acc_freq_bin = 0;   // 0..63
  std::uint8_t fast_cap_bin = 0;   // 0..7, 7 = most free
  std::uint8_t curr_dev_bin = 0;   // 0 fast (or not yet placed), 1 anything slower
  std::uint8_t migr_intr_bin = 0;  // 0..63

  bool operator==(const Observation&) const = default;
};

inline constexpr std::size_t kStateDim = 7;
using StateVector = std::array<double, kStateDim>;

// Bit layout (LSB first): type:1 size:3 acc_intr:8 acc_freq:8 fast_cap:3 curr_dev:1 migr_intr:8.
std::uint32_t pack(const Observation& obs);
Observation unpack(std::uint32_t bits);

// Each component scaled to bin / (bins - 1).
StateVector to_network_input(const Observation& obs);

std::uint8_t size_bin(std::uint64_t size_pages);
std::uint8_t log_bin(std::uint64_t value);
std::uint8_t cap_bin(double free_fraction);

struct PageMeta {
  std::optional<DeviceIndex> curr_dev;
  std::uint64_t acc_freq = 0;
  std::optional<std::uint64_t> last_access_seq;
  std::optional<std::uint64_t> last_migr_seq;
  std::uint64_t last_touch_seq = 0;
  std::uint32_t size_pages_last = 1;
  Op op_last = Op::Read;
};

// Raw (unbinned) intervals of a page as seen at the current sequence numbers.
struct PageIntervals {
  std::uint64_t acc_intr = 0;
  std::uint64_t migr_intr = 0;
};

// Per-page counters behind the observation. Intervals are counted in requests
// (accesses) and migrations, never in wall time.
class MetadataStore {
 public:
  // Starts a new request: the access sequence advances by exactly one.
  std::uint64_t begin_request() { return ++access_seq_; }
  std::uint64_t access_seq() const { return access_seq_; }
  std::uint64_t migration_seq() const { return migration_seq_; }

  // Touches one page with the current sequence number and returns the access
  // interval measured before the update (0 on the first access).
  std::uint64_t record_access(PageAddr page, Op op, std::uint32_t size_pages);

  // Notes a completed migration of `page` to `device`.
  void record_migration(PageAddr page, DeviceIndex device);

  void set_device(PageAddr page, DeviceIndex device);

  const PageMeta* find(PageAddr page) const;
  PageMeta& at(PageAddr page);
  std::size_t size() const { return pages_.size(); }

  PageIntervals intervals(PageAddr page) const;

  // Pure: reads counters only. The page's own last request supplies op/size
  // when the caller is the migration scanner.
  Observation observe(PageAddr page, Op op, std::uint32_t size_pages, double fast_free_fraction) const;

  // CSV dump: page,device,acc_freq,last_access_seq (rows sorted by page).
  void dump(std::ostream& out) const;

 private:
  std::uint64_t access_seq_ = 0;
  std::uint64_t migration_seq_ = 0;
  std::unordered_map<PageAddr, PageMeta> pages_;
};

}  // namespace hss
