#include "hss/metadata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <vector>

namespace hss {

std::uint8_t size_bin(std::uint64_t size_pages) {
  const auto lg = std::bit_width(std::max<std::uint64_t>(size_pages, 1)) - 1;
  return static_cast<std::uint8_t>(std::min<std::uint64_t>(lg, 7));
}

std::uint8_t log_bin(std::uint64_t value) {
  const auto lg = std::bit_width(std::max<std::uint64_t>(value, 1)) - 1;
  return static_cast<std::uint8_t>(std::min<std::uint64_t>(lg, 63));
}

std::uint8_t cap_bin(double free_fraction) {
  const double scaled = std::floor(8.0 * free_fraction);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 7.0));
}

std::uint32_t pack(const Observation& o) {
  return static_cast<std::uint32_t>(o.req_type_bin & 0x1u) |
         static_cast<std::uint32_t>(o.req_size_bin & 0x7u) << 1 |
         static_cast<std::uint32_t>(o.acc_intr_bin) << 4 |
         static_cast<std::uint32_t>(o.acc_freq_bin) << 12 |
         static_cast<std::uint32_t>(o.fast_cap_bin & 0x7u) << 20 |
         static_cast<std::uint32_t>(o.curr_dev_bin & 0x1u) << 23 |
         static_cast<std::uint32_t>(o.migr_intr_bin) << 24;
}

Observation unpack(std::uint32_t bits) {
  Observation o;
  o.req_type_bin = bits & 0x1u;
  o.req_size_bin = (bits >> 1) & 0x7u;
  o.acc_intr_bin = (bits >> 4) & 0xFFu;
  o.acc_freq_bin = (bits >> 12) & 0xFFu;
  o.fast_cap_bin = (bits >> 20) & 0x7u;
  o.curr_dev_bin = (bits >> 23) & 0x1u;
  o.migr_intr_bin = (bits >> 24) & 0xFFu;
  return o;
}

StateVector to_network_input(const Observation& o) {
  return {o.req_type_bin / 1.0,  o.req_size_bin / 7.0,  o.acc_intr_bin / 63.0, o.acc_freq_bin / 63.0,
          o.fast_cap_bin / 7.0, o.curr_dev_bin / 1.0, o.migr_intr_bin / 63.0};
}

std::uint64_t MetadataStore::record_access(PageAddr page, Op op, std::uint32_t size_pages) {
  PageMeta& m = pages_[page];
  const std::uint64_t interval = m.last_access_seq ? access_seq_ - *m.last_access_seq : 0;
  ++m.acc_freq;
  m.last_access_seq = access_seq_;
  m.last_touch_seq = access_seq_;
  m.size_pages_last = size_pages;
  m.op_last = op;
  return interval;
}

void MetadataStore::record_migration(PageAddr page, DeviceIndex device) {
  PageMeta& m = pages_[page];
  m.curr_dev = device;
  m.last_migr_seq = ++migration_seq_;
}

void MetadataStore::set_device(PageAddr page, DeviceIndex device) { pages_[page].curr_dev = device; }

const PageMeta* MetadataStore::find(PageAddr page) const {
  auto it = pages_.find(page);
  return it == pages_.end() ? nullptr : &it->second;
}

PageMeta& MetadataStore::at(PageAddr page) { return pages_[page]; }

PageIntervals MetadataStore::intervals(PageAddr page) const {
  PageIntervals iv;
  const PageMeta* m = find(page);
  if (m == nullptr || !m->last_access_seq) return iv;
  iv.acc_intr = access_seq_ - *m->last_access_seq;
  // A page that never moved counts every migration so far.
  iv.migr_intr = migration_seq_ - m->last_migr_seq.value_or(0);
  return iv;
}

Observation MetadataStore::observe(PageAddr page, Op op, std::uint32_t size_pages,
                                   double fast_free_fraction) const {
  Observation o;
  o.req_type_bin = op == Op::Write ? 1 : 0;
  o.req_size_bin = size_bin(size_pages);
  o.fast_cap_bin = cap_bin(fast_free_fraction);
  if (const PageMeta* m = find(page); m != nullptr && m->last_access_seq) {
    const PageIntervals iv = intervals(page);
    o.acc_intr_bin = log_bin(iv.acc_intr);
    o.acc_freq_bin = log_bin(m->acc_freq);
    o.migr_intr_bin = log_bin(iv.migr_intr);
    o.curr_dev_bin = m->curr_dev.value_or(0) == 0 ? 0 : 1;
  }
  return o;
}

void MetadataStore::dump(std::ostream& out) const {
  std::vector<PageAddr> order;
  order.reserve(pages_.size());
  for (const auto& [page, meta] : pages_) order.push_back(page);
  std::sort(order.begin(), order.end());
  out << "page,device,acc_freq,last_access_seq\n";
  for (PageAddr p : order) {
    const PageMeta& m = pages_.at(p);
    out << p << ',';
    if (m.curr_dev) out << *m.curr_dev;
    out << ',' << m.acc_freq << ',';
    if (m.last_access_seq) out << *m.last_access_seq;
    out << '\n';
  }
}

}  // namespace hss
