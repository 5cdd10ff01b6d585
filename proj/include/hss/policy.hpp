#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hss/trace.hpp"

namespace hss {

enum class PolicyKind { Harmonia, HarmoniaNoCoord, Sibyl, CDE, CdeRlMigr, SAPM, Oracle, FastOnly };

std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);
std::span<const PolicyKind> all_policies();

enum class PlacementSource { Agent, Cde, Oracle, FastOnly };
enum class MigrationSource { None, Agent, IdleOnlyAgent, OracleReshuffle };

// What happens when the chosen device has no room for a request.
enum class OverflowRule {
  EvictLru,      // LRU victims move one tier down, charged to the request
  NextDevice,    // place on the next slower device with room
  FreeDisplace,  // farthest-reused fast pages move down at no cost
  Unbounded,     // fast device sized to hold everything
};

struct PolicyTraits {
  PlacementSource placement;
  MigrationSource migration;
  OverflowRule overflow;
  bool coordinated_reward;  // migration reward from placement latencies
  bool shared_agent;        // one network for placement and migration
};

PolicyTraits traits(PolicyKind kind);

struct CdeThresholds {
  std::uint64_t hot_accesses = 4;
  std::uint32_t random_max_pages = 2;
};

// Hot (often accessed) or random (small) data goes to the fast device, the
// rest to the slowest one. acc_freq counts accesses before this request.
DeviceIndex cde_place(std::uint64_t acc_freq, std::uint32_t size_pages, std::size_t num_devices,
                      const CdeThresholds& thresholds);

inline constexpr std::uint64_t kNeverUsed = ~std::uint64_t{0};

// For every request i and every page it touches, the index of the next
// request touching that page (kNeverUsed if none).
class NextUseIndex {
 public:
  explicit NextUseIndex(std::span<const IORequest> trace);

  std::uint64_t next_use(std::size_t request, std::uint32_t offset) const {
    return next_[starts_[request] + offset];
  }
  // Like next_use, but only a read counts, and a write in between hides it:
  // data about to be overwritten has no reason to sit on a fast device.
  std::uint64_t next_read(std::size_t request, std::uint32_t offset) const {
    return next_read_[starts_[request] + offset];
  }
  // Index of the first request touching `page`, kNeverUsed if none.
  std::uint64_t first_use(PageAddr page) const;

 private:
  std::vector<std::size_t> starts_;
  std::vector<std::uint64_t> next_;
  std::vector<std::uint64_t> next_read_;
  std::unordered_map<PageAddr, std::uint64_t> first_;
};

// Future-knowledge bookkeeping for the Oracle: every resident page keyed by
// its next use, split into fast and slow residents.
class OracleBook {
 public:
  void set_next_use(PageAddr page, std::uint64_t next);
  std::uint64_t next_use(PageAddr page) const;
  void set_fast(PageAddr page, bool fast);
  void forget(PageAddr page);

  std::size_t fast_count() const { return fast_.size(); }
  // Fast page reused farthest in the future, skipping the pages in `except`.
  std::optional<std::pair<std::uint64_t, PageAddr>> farthest_fast(std::span<const PageAddr> except = {}) const;
  // Slow page reused soonest.
  std::optional<std::pair<std::uint64_t, PageAddr>> soonest_slow() const;

 private:
  using Key = std::pair<std::uint64_t, PageAddr>;
  std::unordered_map<PageAddr, std::uint64_t> next_;
  std::unordered_map<PageAddr, bool> is_fast_;
  std::set<Key> fast_;
  std::set<Key> slow_;
};

}  // namespace hss
