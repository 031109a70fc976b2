#include "whipflow/run_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "whipflow/errors.hpp"

namespace whipflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

[[noreturn]] void parse_fail(const fs::path& file, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << file.string() << ":" << line << ": " << what;
  throw ParseError(msg.str());
}

double parse_double(std::string_view text, const fs::path& file, std::size_t line) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    // from_chars rejects a leading '+' and some spellings of inf/nan.
    const std::string copy(text);
    char* stop = nullptr;
    value = std::strtod(copy.c_str(), &stop);
    if (copy.empty() || stop != copy.c_str() + copy.size()) {
      parse_fail(file, line, "invalid number '" + copy + "'");
    }
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_header(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += ',';
    s += cols[i];
  }
  return s;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail(path, 0, "missing or unreadable file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Every file we write ends in a newline; a missing one means truncation.
  in.clear();
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::streamoff>(in.tellg());
  if (size > 0) {
    in.seekg(size - 1);
    char last = 0;
    in.get(last);
    if (last != '\n') parse_fail(path, lines.size(), "truncated line (no terminating newline)");
  }
  return lines;
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail(path, 0, "missing or unreadable file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i < upto; ++i) line += text[i] == '\n';
    parse_fail(path, line, e.what());
  }
}

void check_schema(const json& doc, const fs::path& path) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    parse_fail(path, 1, "missing schema_version");
  }
  const json& v = doc.at("schema_version");
  if (!v.is_string() || v.get<std::string>() != kSchemaVersion) {
    throw SchemaVersionError(path.string() + ": unsupported schema_version " + v.dump() +
                             " (this build reads \"" + kSchemaVersion + "\")");
  }
}

std::vector<double> row_values(const SeriesRow& r) {
  const EnergyReport& e = r.report;
  return {e.t,         e.E,         e.E_alt,         e.E_rel,         e.E_rel_back, e.E_eps, e.D,
          e.cos_alpha, e.max_stretch, e.constraint_L1, e.sigma_at_1, r.dt};
}

template <typename T>
T json_field(const json& obj, const char* key, const fs::path& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    parse_fail(path, 1, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string snapshot_filename(double t) { return "snapshot_t" + format_double(t) + ".csv"; }

const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols = {
      "t",           "E",           "E_alt",         "E_rel",      "E_rel_back", "E_eps",       "D",
      "cos_alpha",   "max_stretch", "constraint_L1", "sigma_at_1", "dt",         "newton_iters"};
  return cols;
}

bool same_record(const RunRecord& a, const RunRecord& b) {
  if (a.config != b.config || a.rows != b.rows || !(a.stats == b.stats) || a.summary != b.summary) return false;
  if (a.snapshots.size() != b.snapshots.size()) return false;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const Snapshot& x = a.snapshots[k];
    const Snapshot& y = b.snapshots[k];
    if (!same_state(x.state, y.state) || !(x.tension.grid == y.tension.grid) ||
        x.tension.values != y.tension.values) {
      return false;
    }
  }
  return true;
}

void write_run(const RunRecord& record, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory.string() + "': " + ec.message());

  {
    const fs::path path = directory / "config.json";
    auto out = open_out(path);
    out << json{{"schema_version", kSchemaVersion}, {"config", record.config}}.dump(2) << '\n';
    finish(out, path);
  }
  {
    const fs::path path = directory / "timeseries.csv";
    auto out = open_out(path);
    out << join_header(timeseries_columns()) << '\n';
    for (const SeriesRow& r : record.rows) {
      for (double v : row_values(r)) out << format_double(v) << ',';
      out << r.newton_iters << '\n';
    }
    finish(out, path);
  }
  json snaps = json::array();
  for (const Snapshot& snap : record.snapshots) {
    const std::string name = snapshot_filename(snap.state.time);
    const fs::path path = directory / name;
    auto out = open_out(path);
    const int d = snap.state.dim();
    out << 's';
    for (int k = 0; k < d; ++k) out << ",x" << k;
    out << ",sigma\n";
    for (std::size_t i = 0; i < snap.state.positions.size(); ++i) {
      out << format_double(snap.state.grid.node(i));
      for (int k = 0; k < d; ++k) out << ',' << format_double(snap.state.positions[i][k]);
      out << ',' << format_double(snap.tension.values[i]) << '\n';
    }
    finish(out, path);
    snaps.push_back({{"t", snap.state.time}, {"file", name}, {"n_cells", snap.state.grid.n_cells()}});
  }
  {
    const fs::path path = directory / "summary.json";
    const SolverStats& s = record.stats;
    json doc{{"schema_version", kSchemaVersion},
             {"snapshots", snaps},
             {"solver_stats",
              {{"accepted", s.accepted},
               {"rejected", s.rejected},
               {"dt_history", s.dt_history},
               {"newton_history", s.newton_history},
               {"failed", s.failed},
               {"failure_message", s.failure_message}}},
             {"summary", record.summary}};
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
  }
}

RunRecord read_run(const fs::path& directory) {
  RunRecord record;
  {
    const fs::path path = directory / "config.json";
    const json doc = read_json(path);
    check_schema(doc, path);
    record.config = doc.contains("config") ? doc.at("config") : json::object();
  }
  {
    const fs::path path = directory / "timeseries.csv";
    const auto lines = read_lines(path);
    if (lines.empty() || lines.front() != join_header(timeseries_columns())) {
      parse_fail(path, 1, "unexpected header");
    }
    const std::size_t ncol = timeseries_columns().size();
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      const auto fields = split(lines[ln]);
      if (fields.size() != ncol) {
        parse_fail(path, ln + 1,
                   "expected " + std::to_string(ncol) + " fields, found " + std::to_string(fields.size()));
      }
      std::vector<double> v(ncol - 1);
      for (std::size_t c = 0; c + 1 < ncol; ++c) v[c] = parse_double(fields[c], path, ln + 1);
      SeriesRow r;
      EnergyReport& e = r.report;
      e.t = v[0];
      e.E = v[1];
      e.E_alt = v[2];
      e.E_rel = v[3];
      e.E_rel_back = v[4];
      e.E_eps = v[5];
      e.D = v[6];
      e.cos_alpha = v[7];
      e.max_stretch = v[8];
      e.constraint_L1 = v[9];
      e.sigma_at_1 = v[10];
      r.dt = v[11];
      const std::string_view it = fields.back();
      const auto res = std::from_chars(it.data(), it.data() + it.size(), r.newton_iters);
      if (res.ec != std::errc() || res.ptr != it.data() + it.size()) {
        parse_fail(path, ln + 1, "invalid newton_iters '" + std::string(it) + "'");
      }
      record.rows.push_back(r);
    }
  }
  const fs::path spath = directory / "summary.json";
  const json doc = read_json(spath);
  check_schema(doc, spath);
  const json stats = json_field<json>(doc, "solver_stats", spath);
  record.stats.accepted = json_field<std::size_t>(stats, "accepted", spath);
  record.stats.rejected = json_field<std::size_t>(stats, "rejected", spath);
  record.stats.dt_history = json_field<std::vector<double>>(stats, "dt_history", spath);
  record.stats.newton_history = json_field<std::vector<int>>(stats, "newton_history", spath);
  record.stats.failed = json_field<bool>(stats, "failed", spath);
  record.stats.failure_message = json_field<std::string>(stats, "failure_message", spath);
  record.summary = doc.contains("summary") ? doc.at("summary") : json::object();

  for (const json& entry : json_field<json>(doc, "snapshots", spath)) {
    const double t = json_field<double>(entry, "t", spath);
    const std::string name = json_field<std::string>(entry, "file", spath);
    const std::size_t n_cells = json_field<std::size_t>(entry, "n_cells", spath);
    const fs::path path = directory / name;
    const auto lines = read_lines(path);
    if (lines.empty()) parse_fail(path, 1, "empty snapshot file");
    const auto header = split(lines.front());
    if (header.size() < 3 || header.front() != "s" || header.back() != "sigma") {
      parse_fail(path, 1, "unexpected header");
    }
    const int d = static_cast<int>(header.size()) - 2;
    if (lines.size() != n_cells + 2) {
      parse_fail(path, lines.size(),
                 "expected " + std::to_string(n_cells + 1) + " data rows, found " + std::to_string(lines.size() - 1));
    }
    VecField pos;
    ScalarField sig;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      const auto fields = split(lines[ln]);
      if (fields.size() != header.size()) parse_fail(path, ln + 1, "wrong number of fields");
      Vec p(d);
      for (int k = 0; k < d; ++k) p[k] = parse_double(fields[k + 1], path, ln + 1);
      pos.push_back(p);
      sig.push_back(parse_double(fields.back(), path, ln + 1));
    }
    const Grid grid(n_cells);
    try {
      record.snapshots.push_back(Snapshot{ArcState(grid, std::move(pos), t), TensionProfile(grid, std::move(sig))});
    } catch (const std::invalid_argument& e) {
      parse_fail(path, 1, e.what());
    }
  }
  return record;
}

}  // namespace whipflow
