#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "engine.hpp"

namespace gridflood {

inline constexpr int kTraceFormatVersion = 1;

using ordered_json = nlohmann::ordered_json;

// JSON-lines trace format. First record is a header carrying the full
// SimConfig and seed; one record per event; optional position records; a
// final record with the finishing time. Round-trips are byte-exact.

namespace detail {

inline ordered_json config_to_json(const SimConfig& c) {
  ordered_json j;
  j["d"] = c.spec.d;
  j["n"] = c.spec.n;
  j["m"] = c.m;
  j["rule"] = rule_name(c.rule);
  j["gamma"] = c.gamma;
  j["meeting_distance"] = c.meeting_distance;
  j["seed"] = c.seed;
  j["max_steps"] = c.max_steps;
  j["log_positions"] = c.log_positions;
  j["log_stride"] = c.log_stride;
  return j;
}

inline SimConfig config_from_json(const ordered_json& j) {
  SimConfig c;
  c.spec.d = j.at("d").get<int>();
  c.spec.n = j.at("n").get<int>();
  c.m = j.at("m").get<int>();
  c.rule = rule_from_name(j.at("rule").get<std::string>());
  c.gamma = j.at("gamma").get<double>();
  c.meeting_distance = j.at("meeting_distance").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_steps = j.at("max_steps").get<std::int64_t>();
  c.log_positions = j.at("log_positions").get<bool>();
  c.log_stride = j.at("log_stride").get<int>();
  return c;
}

}  // namespace detail

inline std::string trace_to_jsonl(const DiffusionTrace& trace) {
  std::ostringstream out;
  ordered_json header;
  header["kind"] = "header";
  header["format_version"] = kTraceFormatVersion;
  header["config"] = detail::config_to_json(trace.config);
  out << header.dump() << '\n';

  std::size_t pos_idx = 0;
  auto flush_positions_through = [&](std::int64_t t) {
    while (pos_idx < trace.log_times.size() && trace.log_times[pos_idx] <= t) {
      ordered_json p;
      p["kind"] = "positions";
      p["t"] = trace.log_times[pos_idx];
      p["coords"] = trace.log_positions[pos_idx];
      out << p.dump() << '\n';
      ++pos_idx;
    }
  };

  for (const Event& e : trace.events) {
    flush_positions_through(e.t - 1);
    ordered_json j;
    j["kind"] = "event";
    j["t"] = e.t;
    j["infectee"] = e.infectee;
    j["cause_kind"] = e.cause == CauseKind::Direct ? "direct" : "island_closure";
    j["cause_agent"] = e.cause_agent;
    out << j.dump() << '\n';
  }
  flush_positions_through(trace.log_times.empty() ? -1 : trace.log_times.back());

  ordered_json fin;
  fin["kind"] = "final";
  fin["final_time"] = trace.final_time;
  fin["timed_out"] = trace.timed_out();
  out << fin.dump() << '\n';
  return out.str();
}

inline DiffusionTrace trace_from_jsonl(std::istream& in) {
  DiffusionTrace trace;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "header") {
      if (j.at("format_version").get<int>() != kTraceFormatVersion)
        throw std::invalid_argument("trace: unsupported format_version");
      trace.config = detail::config_from_json(j.at("config"));
      have_header = true;
    } else if (kind == "event") {
      Event e;
      e.t = j.at("t").get<std::int64_t>();
      e.infectee = j.at("infectee").get<std::int32_t>();
      const std::string ck = j.at("cause_kind").get<std::string>();
      if (ck == "direct")
        e.cause = CauseKind::Direct;
      else if (ck == "island_closure")
        e.cause = CauseKind::IslandClosure;
      else
        throw std::invalid_argument("trace: unknown cause_kind " + ck);
      e.cause_agent = j.at("cause_agent").get<std::int32_t>();
      trace.events.push_back(e);
    } else if (kind == "positions") {
      trace.log_times.push_back(j.at("t").get<std::int64_t>());
      trace.log_positions.push_back(j.at("coords").get<std::vector<Coord>>());
    } else if (kind == "final") {
      trace.final_time = j.at("final_time").get<std::int64_t>();
    } else {
      throw std::invalid_argument("trace: unknown record kind " + kind);
    }
  }
  if (!have_header) throw std::invalid_argument("trace: missing header record");
  return trace;
}

inline DiffusionTrace trace_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return trace_from_jsonl(in);
}

inline void write_trace_file(const DiffusionTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out << trace_to_jsonl(trace);
}

inline DiffusionTrace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return trace_from_jsonl(in);
}

}  // namespace gridflood
