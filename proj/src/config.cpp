#include "hss/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

namespace hss {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw InputError("'" + std::string(key) + "': expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw InputError("'" + std::string(key) + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("'" + std::string(key) + "': expected true or false, got '" + v + "'");
}

template <class T>
using Setter = std::function<void(T&, std::string_view key, std::string_view value)>;

template <class T>
using FieldTable = std::vector<std::pair<std::string, Setter<T>>>;

const FieldTable<rl::Hyperparameters>& hyper_fields() {
  using H = rl::Hyperparameters;
  static const FieldTable<H> table = {
      {"gamma", [](H& h, auto k, auto v) { h.gamma = to_double(k, v); }},
      {"learning_rate", [](H& h, auto k, auto v) { h.learning_rate = to_double(k, v); }},
      {"epsilon", [](H& h, auto k, auto v) { h.epsilon = to_double(k, v); }},
      {"batch_size", [](H& h, auto k, auto v) { h.batch_size = to_uint(k, v); }},
      {"buffer_size", [](H& h, auto k, auto v) { h.buffer_size = to_uint(k, v); }},
      {"num_atoms", [](H& h, auto k, auto v) { h.num_atoms = to_uint(k, v); }},
      {"v_min", [](H& h, auto k, auto v) { h.v_min = to_double(k, v); }},
      {"v_max", [](H& h, auto k, auto v) { h.v_max = to_double(k, v); }},
      {"sync_interval", [](H& h, auto k, auto v) { h.sync_interval = to_uint(k, v); }},
      {"train_every", [](H& h, auto k, auto v) { h.train_every = to_uint(k, v); }},
      {"optimizer",
       [](H& h, auto k, auto v) {
         const std::string s = trim(v);
         if (s == "adam") h.optimizer = rl::OptimizerKind::Adam;
         else if (s == "sgd") h.optimizer = rl::OptimizerKind::Sgd;
         else throw InputError("'" + std::string(k) + "': expected adam or sgd, got '" + s + "'");
       }},
      {"bootstrap",
       [](H& h, auto k, auto v) {
         const std::string s = trim(v);
         if (s == "training") h.bootstrap = rl::BootstrapNet::Training;
         else if (s == "inference") h.bootstrap = rl::BootstrapNet::Inference;
         else throw InputError("'" + std::string(k) + "': expected training or inference, got '" + s + "'");
       }},
  };
  return table;
}

const FieldTable<MigrationRewardConfig>& reward_fields() {
  using R = MigrationRewardConfig;
  static const FieldTable<R> table = {
      {"reward_horizon_n", [](R& r, auto k, auto v) { r.n = to_uint(k, v); }},
      {"reward_batch_x", [](R& r, auto k, auto v) { r.x = to_uint(k, v); }},
      {"beta", [](R& r, auto k, auto v) { r.beta = to_double(k, v); }},
  };
  return table;
}

const FieldTable<EngineKnobs>& engine_fields() {
  using E = EngineKnobs;
  static const FieldTable<E> table = {
      {"migration_queue_size", [](E& e, auto k, auto v) { e.migration_queue_size = to_uint(k, v); }},
      {"scan_window", [](E& e, auto k, auto v) { e.scan_window = to_uint(k, v); }},
      {"scan_per_request", [](E& e, auto k, auto v) { e.scan_per_request = to_bool(k, v); }},
      {"idle_window_us",
       [](E& e, auto k, auto v) {
         if (trim(v) == "auto") e.idle_window_us.reset();
         else e.idle_window_us = to_double(k, v);
       }},
      {"low_priority_fast_path", [](E& e, auto k, auto v) { e.low_priority_fast_path = to_bool(k, v); }},
      {"fast_capacity_fraction", [](E& e, auto k, auto v) { e.fast_capacity_fraction = to_double(k, v); }},
      {"cde_hot_accesses", [](E& e, auto k, auto v) { e.cde.hot_accesses = to_uint(k, v); }},
      {"cde_random_max_pages",
       [](E& e, auto k, auto v) { e.cde.random_max_pages = static_cast<std::uint32_t>(to_uint(k, v)); }},
      {"training_enabled", [](E& e, auto k, auto v) { e.training_enabled = to_bool(k, v); }},
      {"check_invariants", [](E& e, auto k, auto v) { e.check_invariants = to_bool(k, v); }},
  };
  return table;
}

const FieldTable<DeviceSpec>& device_fields() {
  using D = DeviceSpec;
  static const FieldTable<D> table = {
      {"name", [](D& d, auto, auto v) { d.name = trim(v); }},
      {"capacity_pages",
       [](D& d, auto k, auto v) {
         if (trim(v) == "auto") d.capacity_pages.reset();
         else d.capacity_pages = to_uint(k, v);
       }},
      {"read_base_us", [](D& d, auto k, auto v) { d.read_base_us = to_double(k, v); }},
      {"write_base_us", [](D& d, auto k, auto v) { d.write_base_us = to_double(k, v); }},
      {"read_bw_mbps", [](D& d, auto k, auto v) { d.read_bw_mbps = to_double(k, v); }},
      {"write_bw_mbps", [](D& d, auto k, auto v) { d.write_bw_mbps = to_double(k, v); }},
      {"max_iops",
       [](D& d, auto k, auto v) {
         if (trim(v) == "none") d.max_iops.reset();
         else d.max_iops = to_uint(k, v);
       }},
  };
  return table;
}

template <class T>
bool apply(const FieldTable<T>& table, T& target, const std::string& full_key, std::string_view key,
           std::string_view value) {
  for (const auto& [name, set] : table) {
    if (name == key) {
      set(target, full_key, value);
      return true;
    }
  }
  return false;
}

const std::map<std::string, std::vector<std::string>>& aliases() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"queue_size", {"engine.migration_queue_size"}},
      {"n", {"agents.migration.reward_horizon_n"}},
      {"x", {"agents.migration.reward_batch_x"}},
      {"beta", {"agents.migration.beta"}},
      {"atoms", {"agents.placement.num_atoms", "agents.migration.num_atoms"}},
      {"scan_window", {"engine.scan_window"}},
      {"idle_window_us", {"engine.idle_window_us"}},
      {"fast_capacity_fraction", {"engine.fast_capacity_fraction"}},
  };
  return table;
}

// Returns the device index for a `devices.N` section name, nullopt otherwise.
std::optional<std::size_t> device_section(std::string_view section) {
  constexpr std::string_view prefix = "devices.";
  if (section.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string_view idx = section.substr(prefix.size());
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), out);
  if (ec != std::errc() || p != idx.data() + idx.size() || idx.empty())
    throw InputError("bad device section [" + std::string(section) + "]");
  return out;
}

DeviceSpec& device_slot(HssConfig& hss, std::size_t index) {
  if (index < hss.devices.size()) return hss.devices[index];
  if (index == hss.devices.size()) {
    DeviceSpec d;
    d.name = "dev" + std::to_string(index);
    hss.devices.push_back(d);
    return hss.devices.back();
  }
  throw InputError("device " + std::to_string(index) + " defined before device " +
                   std::to_string(hss.devices.size()));
}

void set_in_section(SimConfig& c, const std::string& section, const std::string& key, std::string_view value) {
  const std::string full = section + "." + key;
  bool ok = false;
  if (section == "engine") {
    ok = apply(engine_fields(), c.knobs, full, key, value);
  } else if (section == "agents.placement") {
    ok = apply(hyper_fields(), c.knobs.placement, full, key, value);
  } else if (section == "agents.migration") {
    ok = apply(hyper_fields(), c.knobs.migration, full, key, value) ||
         apply(reward_fields(), c.knobs.reward, full, key, value);
  } else if (auto idx = device_section(section)) {
    ok = apply(device_fields(), device_slot(c.hss, *idx), full, key, value);
  } else {
    throw InputError("unknown config section [" + section + "]");
  }
  if (!ok) throw InputError("unknown config key '" + key + "' in [" + section + "]");
}

}  // namespace

void SimConfig::validate() const {
  hss.validate();
  knobs.validate();
}

SimConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError("config: " + e.message() + " at line " + std::to_string(e.line()));
  }

  SimConfig c;
  // Top-level keys first, so the preset is in place before device overrides.
  for (const auto& [key, node] : tree) {
    if (!node.empty()) continue;
    if (key == "preset") c.hss = preset(trim(node.data()));
    else throw InputError("unknown top-level config key '" + key + "'");
  }

  // Device sections in index order so appends are contiguous.
  std::vector<std::pair<std::size_t, const pt::ptree*>> devices;
  for (const auto& [name, node] : tree) {
    if (node.empty()) continue;
    if (auto idx = device_section(name)) devices.emplace_back(*idx, &node);
  }
  std::sort(devices.begin(), devices.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [idx, node] : devices)
    for (const auto& [key, leaf] : *node) set_in_section(c, "devices." + std::to_string(idx), key, leaf.data());

  for (const auto& [name, node] : tree) {
    if (node.empty() || device_section(name)) continue;
    for (const auto& [key, leaf] : node) set_in_section(c, name, key, leaf.data());
  }
  c.validate();
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  try {
    return parse_config(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void set_knob(SimConfig& c, std::string_view knob, std::string_view value) {
  const std::string name(knob);
  if (auto it = aliases().find(name); it != aliases().end()) {
    for (const std::string& target : it->second) set_knob(c, target, value);
    return;
  }
  const auto dot = name.rfind('.');
  bool known = false;
  if (dot != std::string::npos) {
    try {
      set_in_section(c, name.substr(0, dot), name.substr(dot + 1), value);
      known = true;
    } catch (const InputError& e) {
      const std::string msg = e.what();
      if (msg.rfind("unknown config", 0) != 0) throw;
    }
  }
  if (!known) {
    std::string list;
    for (const std::string& k : knob_names()) list += (list.empty() ? "" : ", ") + k;
    throw InputError("unknown knob '" + name + "'; valid knobs: " + list);
  }
}

std::vector<std::string> knob_names() {
  std::vector<std::string> out;
  for (const auto& [alias, targets] : aliases()) out.push_back(alias);
  for (const auto& [k, set] : engine_fields()) out.push_back("engine." + k);
  for (const char* agent : {"placement", "migration"})
    for (const auto& [k, set] : hyper_fields()) out.push_back(std::string("agents.") + agent + "." + k);
  for (const auto& [k, set] : reward_fields()) out.push_back("agents.migration." + k);
  for (const auto& [k, set] : device_fields()) out.push_back("devices.<N>." + k);
  return out;
}

TraceProfile parse_profile(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError("profile: " + e.message() + " at line " + std::to_string(e.line()));
  }
  TraceProfile p;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw InputError("profile: sections are not allowed ([" + key + "])");
    const std::string v = node.data();
    if (key == "read_fraction") p.read_fraction = to_double(key, v);
    else if (key == "mean_inter_request_us") p.mean_inter_request_us = to_double(key, v);
    else if (key == "footprint_pages") p.footprint_pages = to_uint(key, v);
    else if (key == "hot_fraction") p.hot_fraction = to_double(key, v);
    else if (key == "hot_skew") p.hot_skew = to_double(key, v);
    else if (key == "phase_length_requests") {
      if (trim(v) == "none") p.phase_length_requests.reset();
      else p.phase_length_requests = to_uint(key, v);
    } else if (key == "request_sizes") {
      p.request_size_distribution.clear();
      std::string_view rest = v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InputError("request_sizes: expected size:probability, got '" + item + "'");
        p.request_size_distribution.emplace_back(
            static_cast<std::uint32_t>(to_uint("request_sizes", item.substr(0, colon))),
            to_double("request_sizes", item.substr(colon + 1)));
      }
    } else {
      throw InputError("unknown profile key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

TraceProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open profile file " + path.string());
  try {
    return parse_profile(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace hss
