#include "hss/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hss/config.hpp"
#include "hss/engine.hpp"
#include "hss/runner.hpp"

namespace hss {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw InputError("empty list '" + s + "'");
  return out;
}

Trace read_trace(const std::string& path) {
  try {
    return load_trace(path);
  } catch (const TraceParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

SimConfig read_config(const std::string& path, std::optional<std::size_t> atoms) {
  SimConfig c = path.empty() ? SimConfig{} : load_config(path);
  if (atoms) set_knob(c, "atoms", std::to_string(*atoms));
  c.validate();
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path + "'");
  return f;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f = open_out(path);
  write(f);
  if (!f) throw InputError("write failed for '" + path + "'");
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-driven hybrid storage simulator", "hss-sim"};
  app.require_subcommand(1);

  std::string trace_path, config_path, out_path, policy = "harmonia", events_path, loss_path, migr_loss_path;
  std::uint64_t seed = 42;
  std::optional<std::size_t> atoms;

  auto* run_cmd = app.add_subcommand("run", "Replay a trace under one policy");
  run_cmd->add_option("--trace", trace_path, "trace CSV")->required();
  run_cmd->add_option("--config", config_path, "INI config");
  run_cmd->add_option("--policy", policy, "policy name");
  run_cmd->add_option("--seed", seed, "RNG seed");
  run_cmd->add_option("--out", out_path, "report CSV (stdout if omitted)");
  run_cmd->add_option("--atoms", atoms, "atoms per action for both agents");
  run_cmd->add_option("--debug-events", events_path, "event log CSV");
  run_cmd->add_option("--loss-log", loss_path, "placement agent training loss CSV");
  run_cmd->add_option("--migration-loss-log", migr_loss_path, "migration agent training loss CSV");

  std::string policies = "fast-only,harmonia,harmonia-nocoord,sibyl,cde,cde-rl-migr,sapm,oracle";
  auto* cmp_cmd = app.add_subcommand("compare", "Run several policies, normalized to Fast-Only");
  cmp_cmd->add_option("--trace", trace_path, "trace CSV")->required();
  cmp_cmd->add_option("--config", config_path, "INI config");
  cmp_cmd->add_option("--policies", policies, "comma-separated policy names");
  cmp_cmd->add_option("--seed", seed, "RNG seed");
  cmp_cmd->add_option("--out", out_path, "report CSV (stdout if omitted)");
  cmp_cmd->add_option("--atoms", atoms, "atoms per action for both agents");

  std::string knob, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one policy over values of a knob");
  sweep_cmd->add_option("--trace", trace_path, "trace CSV")->required();
  sweep_cmd->add_option("--config", config_path, "INI config");
  sweep_cmd->add_option("--policy", policy, "policy name");
  sweep_cmd->add_option("--knob", knob, "knob name")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  sweep_cmd->add_option("--seed", seed, "RNG seed");
  sweep_cmd->add_option("--out", out_path, "report CSV (stdout if omitted)");
  sweep_cmd->add_option("--atoms", atoms, "atoms per action for both agents");

  std::string profile_path;
  std::uint64_t requests = 0;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Generate a synthetic trace");
  gen_cmd->add_option("--profile", profile_path, "profile file")->required();
  gen_cmd->add_option("--requests", requests, "number of requests")->required();
  gen_cmd->add_option("--seed", seed, "RNG seed");
  gen_cmd->add_option("--out", out_path, "trace CSV (stdout if omitted)");

  std::string inputs;
  auto* merge_cmd = app.add_subcommand("merge", "Interleave traces by timestamp, one address range each");
  merge_cmd->add_option("--inputs", inputs, "comma-separated trace CSVs")->required();
  merge_cmd->add_option("--out", out_path, "trace CSV (stdout if omitted)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  bool seeded = false;
  try {
    if (*run_cmd) {
      const PolicyKind kind = parse_policy(policy);
      const SimConfig cfg = read_config(config_path, atoms);
      const Trace trace = read_trace(trace_path);
      seeded = true;
      const RunOutput res = simulate(trace, cfg.hss, kind, seed, cfg.knobs, !events_path.empty());
      if (!res.report.invariant_violations.empty())
        throw InvariantError("invariant violated: " + res.report.invariant_violations.front());
      emit(out_path, out, [&](std::ostream& o) { write_report_csv(std::span(&res.report, 1), o); });
      if (!events_path.empty()) emit(events_path, out, [&](std::ostream& o) { write_event_log(res.events, o); });
      if (!loss_path.empty()) emit(loss_path, out, [&](std::ostream& o) { write_loss_csv(res.report.placement_loss, o); });
      if (!migr_loss_path.empty())
        emit(migr_loss_path, out, [&](std::ostream& o) { write_loss_csv(res.report.migration_loss, o); });
    } else if (*cmp_cmd) {
      std::vector<PolicyKind> kinds;
      for (const std::string& p : split_list(policies)) kinds.push_back(parse_policy(p));
      const SimConfig cfg = read_config(config_path, atoms);
      const Trace trace = read_trace(trace_path);
      seeded = true;
      const auto reports = compare(trace, cfg, kinds, seed);
      emit(out_path, out, [&](std::ostream& o) { write_report_csv(reports, o); });
    } else if (*sweep_cmd) {
      const PolicyKind kind = parse_policy(policy);
      const SimConfig cfg = read_config(config_path, atoms);
      const std::vector<std::string> vals = split_list(values);
      const Trace trace = read_trace(trace_path);
      seeded = true;
      const auto reports = sweep(trace, cfg, kind, knob, vals, seed);
      emit(out_path, out, [&](std::ostream& o) { write_report_csv(reports, o); });
    } else if (*gen_cmd) {
      if (requests == 0) throw InputError("--requests must be positive");
      const TraceProfile profile = load_profile(profile_path);
      seeded = true;
      const Trace trace = generate_trace(profile, requests, seed);
      emit(out_path, out, [&](std::ostream& o) { write_trace(trace, o); });
    } else if (*merge_cmd) {
      std::vector<Trace> traces;
      for (const std::string& p : split_list(inputs)) traces.push_back(read_trace(p));
      const Trace merged = merge_traces(traces);
      emit(out_path, out, [&](std::ostream& o) { write_trace(merged, o); });
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  // Printed only on success so failures stay a single line.
  if (seeded) err << "seed " << seed << '\n';
  return 0;
}

}  // namespace hss
