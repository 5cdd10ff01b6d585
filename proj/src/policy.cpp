#include "hss/policy.hpp"

#include <algorithm>
#include <array>

namespace hss {

namespace {

constexpr std::array<PolicyKind, 8> kAll{PolicyKind::Harmonia, PolicyKind::HarmoniaNoCoord, PolicyKind::Sibyl,
                                         PolicyKind::CDE,      PolicyKind::CdeRlMigr,       PolicyKind::SAPM,
                                         PolicyKind::Oracle,   PolicyKind::FastOnly};

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Harmonia: return "harmonia";
    case PolicyKind::HarmoniaNoCoord: return "harmonia-nocoord";
    case PolicyKind::Sibyl: return "sibyl";
    case PolicyKind::CDE: return "cde";
    case PolicyKind::CdeRlMigr: return "cde-rl-migr";
    case PolicyKind::SAPM: return "sapm";
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::FastOnly: return "fast-only";
  }
  throw InvariantError("unknown policy kind");
}

PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind k : kAll)
    if (policy_name(k) == name) return k;
  std::string valid;
  for (PolicyKind k : kAll) {
    if (!valid.empty()) valid += ", ";
    valid += policy_name(k);
  }
  throw InputError("unknown policy '" + std::string(name) + "' (valid: " + valid + ")");
}

std::span<const PolicyKind> all_policies() { return kAll; }

PolicyTraits traits(PolicyKind kind) {
  using P = PlacementSource;
  using M = MigrationSource;
  using O = OverflowRule;
  switch (kind) {
    case PolicyKind::Harmonia: return {P::Agent, M::Agent, O::NextDevice, true, false};
    case PolicyKind::HarmoniaNoCoord: return {P::Agent, M::Agent, O::NextDevice, false, false};
    case PolicyKind::Sibyl: return {P::Agent, M::None, O::EvictLru, false, false};
    case PolicyKind::CDE: return {P::Cde, M::None, O::EvictLru, false, false};
    case PolicyKind::CdeRlMigr: return {P::Cde, M::Agent, O::EvictLru, true, false};
    case PolicyKind::SAPM: return {P::Agent, M::IdleOnlyAgent, O::NextDevice, true, true};
    case PolicyKind::Oracle: return {P::Oracle, M::OracleReshuffle, O::FreeDisplace, false, false};
    case PolicyKind::FastOnly: return {P::FastOnly, M::None, O::Unbounded, false, false};
  }
  throw InvariantError("unknown policy kind");
}

DeviceIndex cde_place(std::uint64_t acc_freq, std::uint32_t size_pages, std::size_t num_devices,
                      const CdeThresholds& thresholds) {
  if (num_devices == 0) throw InputError("cde: no devices");
  if (acc_freq >= thresholds.hot_accesses || size_pages <= thresholds.random_max_pages) return 0;
  return num_devices - 1;
}

NextUseIndex::NextUseIndex(std::span<const IORequest> trace) {
  starts_.reserve(trace.size() + 1);
  std::size_t total = 0;
  for (const IORequest& r : trace) {
    starts_.push_back(total);
    total += r.size_pages;
  }
  starts_.push_back(total);
  next_.assign(total, kNeverUsed);
  next_read_.assign(total, kNeverUsed);
  std::unordered_map<PageAddr, std::uint64_t> upcoming;
  std::unordered_map<PageAddr, std::uint64_t> upcoming_read;  // kNeverUsed behind a write
  for (std::size_t i = trace.size(); i-- > 0;) {
    const IORequest& r = trace[i];
    for (std::uint32_t k = 0; k < r.size_pages; ++k) {
      const PageAddr page = r.page_addr + k;
      auto [it, inserted] = upcoming.try_emplace(page, i);
      if (!inserted) {
        next_[starts_[i] + k] = it->second;
        it->second = i;
      }
      auto [rd, fresh] = upcoming_read.try_emplace(page, kNeverUsed);
      if (!fresh) next_read_[starts_[i] + k] = rd->second;
      rd->second = r.op == Op::Read ? i : kNeverUsed;
    }
  }
  first_ = std::move(upcoming);
}

std::uint64_t NextUseIndex::first_use(PageAddr page) const {
  auto it = first_.find(page);
  return it == first_.end() ? kNeverUsed : it->second;
}

void OracleBook::set_next_use(PageAddr page, std::uint64_t next) {
  auto it = next_.find(page);
  if (it != next_.end()) {
    const bool fast = is_fast_.at(page);
    (fast ? fast_ : slow_).erase({it->second, page});
    it->second = next;
    (fast ? fast_ : slow_).insert({next, page});
    return;
  }
  next_.emplace(page, next);
  is_fast_.emplace(page, false);
  slow_.insert({next, page});
}

std::uint64_t OracleBook::next_use(PageAddr page) const {
  auto it = next_.find(page);
  return it == next_.end() ? kNeverUsed : it->second;
}

void OracleBook::set_fast(PageAddr page, bool fast) {
  const std::uint64_t next = next_.at(page);
  bool& flag = is_fast_.at(page);
  if (flag == fast) return;
  (flag ? fast_ : slow_).erase({next, page});
  flag = fast;
  (flag ? fast_ : slow_).insert({next, page});
}

void OracleBook::forget(PageAddr page) {
  auto it = next_.find(page);
  if (it == next_.end()) return;
  (is_fast_.at(page) ? fast_ : slow_).erase({it->second, page});
  is_fast_.erase(page);
  next_.erase(it);
}

std::optional<std::pair<std::uint64_t, PageAddr>> OracleBook::farthest_fast(std::span<const PageAddr> except) const {
  for (auto it = fast_.rbegin(); it != fast_.rend(); ++it)
    if (std::find(except.begin(), except.end(), it->second) == except.end()) return *it;
  return std::nullopt;
}

std::optional<std::pair<std::uint64_t, PageAddr>> OracleBook::soonest_slow() const {
  if (slow_.empty()) return std::nullopt;
  return *slow_.begin();
}

}  // namespace hss
