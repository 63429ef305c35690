#include "flowcast/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "flowcast/format.hpp"

namespace flowcast {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string strip(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

// Plain comma split; fields are trimmed. Quoting is deliberately unsupported:
// sensor names and numbers never need it and rejecting it keeps parsing exact.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(strip(line.substr(pos)));
      return out;
    }
    out.push_back(strip(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
}

// Proleptic Gregorian civil date -> days since 1970-01-01.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? 0u : 12u) - 3) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << "line " << line_no << ": " << what;
  throw Error(os.str());
}

double parse_value(const std::string& text, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) {
    fail_at(line_no, "cannot parse value '" + text + "'");
  }
  return v;
}

// Fill missing cells: interior gaps interpolate linearly between the nearest
// observed neighbours, boundary gaps copy the nearest observed value.
std::size_t repair_column(std::vector<double>& v, const SensorId& id) {
  const std::size_t n = v.size();
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t first_ok = npos;
  std::size_t last_ok = npos;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isnan(v[i])) {
      if (first_ok == npos) first_ok = i;
      last_ok = i;
    }
  }
  if (first_ok == npos) {
    throw Error("sensor '" + id.name + "' has no observed values");
  }
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < first_ok; ++i) {
    v[i] = v[first_ok];
    ++repaired;
  }
  for (std::size_t i = last_ok + 1; i < n; ++i) {
    v[i] = v[last_ok];
    ++repaired;
  }
  std::size_t i = first_ok;
  while (i < last_ok) {
    if (!std::isnan(v[i + 1])) {
      ++i;
      continue;
    }
    std::size_t j = i + 2;
    while (std::isnan(v[j])) ++j;  // bounded by last_ok
    const double step = (v[j] - v[i]) / static_cast<double>(j - i);
    for (std::size_t k = i + 1; k < j; ++k) {
      v[k] = v[i] + step * static_cast<double>(k - i);
      ++repaired;
    }
    i = j;
  }
  return repaired;
}

struct RawColumn {
  SensorId id;
  std::vector<Timestamp> times;
  std::vector<double> values;  // NaN = declared missing
};

Dataset assemble(std::vector<RawColumn> columns, Duration sample_interval,
                 LoadStats* stats) {
  Timestamp t0 = std::numeric_limits<Timestamp>::max();
  Timestamp t_end = std::numeric_limits<Timestamp>::min();
  bool any = false;
  for (const auto& c : columns) {
    if (c.times.empty()) {
      throw Error("sensor '" + c.id.name + "' has no rows");
    }
    any = true;
    t0 = std::min(t0, c.times.front());
    t_end = std::max(t_end, c.times.back());
  }
  if (!any) throw Error("CSV contains no data rows");

  for (const auto& c : columns) {
    for (Timestamp t : c.times) {
      if ((t - t0) % sample_interval != 0) {
        std::ostringstream os;
        os << "timestamp " << t << " of sensor '" << c.id.name
           << "' is not aligned to the " << sample_interval << " s grid";
        throw Error(os.str());
      }
    }
  }
  const std::size_t n_steps = static_cast<std::size_t>((t_end - t0) / sample_interval) + 1;

  Dataset ds;
  ds.series.reserve(columns.size());
  for (auto& c : columns) {
    SensorSeries s;
    s.id = c.id;
    s.start = t0;
    s.sample_interval = sample_interval;
    s.values.assign(n_steps, kMissing);
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      s.values[static_cast<std::size_t>((c.times[i] - t0) / sample_interval)] =
          c.values[i];
    }
    const std::size_t repaired = repair_column(s.values, s.id);
    if (stats != nullptr && repaired > 0) stats->repaired[s.id] = repaired;
    ds.series.push_back(std::move(s));
  }
  if (stats != nullptr) stats->grid_steps = n_steps;
  ds.validate();
  return ds;
}

Dataset load_wide(std::istream& in, Duration sample_interval, LoadStats* stats) {
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV is empty");
  std::size_t line_no = 1;
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2) fail_at(line_no, "wide CSV needs a timestamp column and at least one sensor");
  if (!header[0].empty() && header[0] != "timestamp") {
    fail_at(line_no, "first header cell must be 'timestamp' or empty");
  }
  std::vector<RawColumn> columns(header.size() - 1);
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) fail_at(line_no, "empty sensor name in header");
    for (std::size_t j = 1; j < i; ++j) {
      if (header[j] == header[i]) {
        fail_at(line_no, "duplicate sensor '" + header[i] + "' in header");
      }
    }
    columns[i - 1].id = SensorId{header[i]};
  }

  Timestamp prev = 0;
  bool have_prev = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "expected " << header.size() << " fields, found " << fields.size();
      fail_at(line_no, os.str());
    }
    Timestamp t;
    try {
      t = parse_timestamp(fields[0]);
    } catch (const Error& e) {
      fail_at(line_no, e.what());
    }
    if (have_prev && t <= prev) fail_at(line_no, "timestamps must be strictly increasing");
    prev = t;
    have_prev = true;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      columns[i - 1].times.push_back(t);
      columns[i - 1].values.push_back(
          fields[i].empty() ? kMissing : parse_value(fields[i], line_no));
    }
    if (stats != nullptr) ++stats->rows_parsed;
  }
  return assemble(std::move(columns), sample_interval, stats);
}

Dataset load_long(std::istream& in, Duration sample_interval, LoadStats* stats) {
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV is empty");
  std::size_t line_no = 1;
  const std::vector<std::string> header = split_fields(line);
  if (header.size() != 3 || (!header[0].empty() && header[0] != "timestamp") ||
      header[1] != "sensor" || header[2] != "value") {
    fail_at(line_no, "long CSV header must be 'timestamp,sensor,value'");
  }

  std::vector<RawColumn> columns;  // ordered by first appearance
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 3) fail_at(line_no, "expected 3 fields");
    Timestamp t;
    try {
      t = parse_timestamp(fields[0]);
    } catch (const Error& e) {
      fail_at(line_no, e.what());
    }
    if (fields[1].empty()) fail_at(line_no, "empty sensor name");
    RawColumn* col = nullptr;
    for (auto& c : columns) {
      if (c.id.name == fields[1]) {
        col = &c;
        break;
      }
    }
    if (col == nullptr) {
      columns.push_back(RawColumn{SensorId{fields[1]}, {}, {}});
      col = &columns.back();
    }
    if (!col->times.empty() && t <= col->times.back()) {
      fail_at(line_no, "timestamps for sensor '" + col->id.name +
                           "' must be strictly increasing");
    }
    col->times.push_back(t);
    col->values.push_back(fields[2].empty() ? kMissing : parse_value(fields[2], line_no));
    if (stats != nullptr) ++stats->rows_parsed;
  }
  return assemble(std::move(columns), sample_interval, stats);
}

}  // namespace

Timestamp parse_timestamp(const std::string& raw) {
  const std::string text = strip(raw);
  if (text.empty()) throw Error("empty timestamp");
  {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end != text.c_str() && *end == '\0' && errno == 0) {
      return static_cast<Timestamp>(v);
    }
  }
  int year = 0;
  int mon = 0;
  int day = 0;
  int hh = 0;
  int mm = 0;
  int ss = 0;
  char sep = 0;
  char tail[8] = {0};
  const int got = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d%7s", &year, &mon,
                              &day, &sep, &hh, &mm, &ss, tail);
  const bool zulu_ok = got == 7 || (got == 8 && tail[0] == 'Z' && tail[1] == '\0');
  if (got < 7 || !zulu_ok || (sep != ' ' && sep != 'T') || mon < 1 || mon > 12 ||
      day < 1 || day > 31 || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 ||
      ss > 60) {
    throw Error("cannot parse timestamp '" + text + "'");
  }
  return days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day)) *
             86400 +
         hh * 3600 + mm * 60 + ss;
}

Dataset load_csv(const std::string& path, CsvLayout layout, Duration sample_interval,
                 LoadStats* stats) {
  if (sample_interval <= 0) throw Error("sample interval must be positive");
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return layout == CsvLayout::wide ? load_wide(in, sample_interval, stats)
                                     : load_long(in, sample_interval, stats);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "timestamp";
  for (const auto& s : dataset.series) out << ',' << s.id.name;
  out << '\n';
  const std::size_t n = dataset.n_steps();
  for (std::size_t i = 0; i < n; ++i) {
    out << dataset.time_at(i);
    for (const auto& s : dataset.series) out << ',' << format_double(s.values[i]);
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace flowcast
