#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "../support/belady.hpp"
#include "../support/oracles.hpp"
#include "hss/policy.hpp"
#include "hss/random.hpp"

using namespace hss;

TEST_CASE("names round-trip and unknown names list the valid ones") {
  for (PolicyKind k : all_policies()) CHECK(parse_policy(policy_name(k)) == k);
  CHECK(all_policies().size() == 8);
  try {
    parse_policy("lru");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("harmonia") != std::string::npos);
  }
}

TEST_CASE("each policy binds one placement source and one migration source") {
  CHECK(traits(PolicyKind::Harmonia).migration == MigrationSource::Agent);
  CHECK(traits(PolicyKind::Harmonia).coordinated_reward);
  CHECK_FALSE(traits(PolicyKind::HarmoniaNoCoord).coordinated_reward);
  CHECK(traits(PolicyKind::Sibyl).migration == MigrationSource::None);
  CHECK(traits(PolicyKind::Sibyl).overflow == OverflowRule::EvictLru);
  CHECK(traits(PolicyKind::CDE).placement == PlacementSource::Cde);
  CHECK(traits(PolicyKind::CdeRlMigr).migration == MigrationSource::Agent);
  CHECK(traits(PolicyKind::SAPM).shared_agent);
  CHECK(traits(PolicyKind::SAPM).migration == MigrationSource::IdleOnlyAgent);
  CHECK(traits(PolicyKind::Oracle).overflow == OverflowRule::FreeDisplace);
  CHECK(traits(PolicyKind::FastOnly).overflow == OverflowRule::Unbounded);
}

TEST_CASE("CDE thresholds") {
  const CdeThresholds th;
  CHECK(cde_place(4, 64, 2, th) == 0);  // hot
  CHECK(cde_place(0, 2, 3, th) == 0);   // random (8 KiB)
  CHECK(cde_place(3, 3, 3, th) == 2);   // cold sequential goes to the slowest device
  CHECK(cde_place(0, 1, 2, CdeThresholds{4, 0}) == 1);
}

TEST_CASE("next-use index matches a forward scan") {
  Rng rng(1);
  std::vector<IORequest> trace;
  for (int i = 0; i < 300; ++i)
    trace.push_back({static_cast<std::uint64_t>(i), rng.bernoulli(0.3) ? Op::Write : Op::Read, rng.below(20),
                     static_cast<std::uint32_t>(1 + rng.below(3))});
  const NextUseIndex idx(trace);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    for (std::uint32_t k = 0; k < trace[i].size_pages; ++k) {
      const PageAddr p = trace[i].page_addr + k;
      std::uint64_t want = kNeverUsed;
      for (std::size_t j = i + 1; j < trace.size() && want == kNeverUsed; ++j)
        if (p >= trace[j].page_addr && p < trace[j].page_addr + trace[j].size_pages) want = j;
      CHECK(idx.next_use(i, k) == want);
      // next read only when the next touch is a read
      const std::uint64_t read = want != kNeverUsed && trace[want].op == Op::Read ? want : kNeverUsed;
      CHECK(idx.next_read(i, k) == read);
    }
  }
  CHECK(idx.first_use(1000) == kNeverUsed);
}

TEST_CASE("oracle book ordering") {
  OracleBook b;
  b.set_next_use(1, 10);
  b.set_next_use(2, 50);
  b.set_next_use(3, 5);
  b.set_fast(1, true);
  b.set_fast(2, true);
  b.set_fast(3, false);
  CHECK(b.fast_count() == 2);
  CHECK(b.farthest_fast()->second == 2);
  const std::vector<PageAddr> keep = {2};
  CHECK(b.farthest_fast(keep)->second == 1);
  CHECK(b.soonest_slow()->second == 3);
  b.set_next_use(1, 100);
  CHECK(b.farthest_fast()->second == 1);
  b.forget(1);
  CHECK(b.fast_count() == 1);
}

TEST_CASE("Belady admission reaches the exhaustive minimum miss count") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const int footprint = 2 + static_cast<int>(rng.below(7));  // 2..8 pages
    const int capacity = 1 + static_cast<int>(rng.below(3));
    const int n = 5 + static_cast<int>(rng.below(36));  // up to 40 requests
    std::vector<int> acc;
    for (int i = 0; i < n; ++i) acc.push_back(static_cast<int>(rng.below(footprint)));
    CHECK(fixture::belady_misses(acc, capacity) == oracle::min_misses(acc, capacity));
  }
}
