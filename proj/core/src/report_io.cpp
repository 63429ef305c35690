#include "flowcast/report_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flowcast {
namespace {

// The report CSVs are unquoted; free-text fields are sanitized instead.
std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

double to_double(const std::string& text, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw Error(path + ": bad number '" + text + "'");
  }
  return v;
}

std::size_t to_size(const std::string& text, const std::string& path) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw Error(path + ": bad count '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<ReportRow> report_rows(std::span<const EvalReport> reports) {
  std::vector<ReportRow> rows;
  for (const EvalReport& rep : reports) {
    for (const TargetReport& t : rep.targets) {
      ReportRow row;
      row.run_id = rep.run_id;
      row.target = t.target.name;
      row.status = "ok";
      row.rmse = t.rmse;
      row.train_time_s = t.train_time_s;
      row.instance_pred_time_ms = t.instance_pred_time_ms;
      row.eval_time_s = t.eval_time_s;
      row.windows = t.windows_total;
      row.skipped = t.windows_skipped;
      rows.push_back(std::move(row));
    }
    ReportRow mean;
    mean.run_id = rep.run_id;
    mean.target = "MEAN";
    mean.status = rep.failed ? "failed" : "ok";
    mean.rmse = rep.rmse;
    mean.train_time_s = rep.train_time_s;
    mean.instance_pred_time_ms = rep.instance_pred_time_ms;
    mean.eval_time_s = rep.eval_time_s;
    for (const TargetReport& t : rep.targets) {
      mean.windows += t.windows_total;
      mean.skipped += t.windows_skipped;
    }
    mean.error = rep.error;
    rows.push_back(std::move(mean));
  }
  return rows;
}

void write_report_csv(const std::string& path, std::span<const ReportRow> rows) {
  std::ofstream out = open_out(path);
  out << "run_id,target,status,rmse,train_time_s,instance_pred_time_ms,"
         "eval_time_s,windows,skipped,error\n";
  for (const ReportRow& r : rows) {
    out << sanitize(r.run_id) << ',' << sanitize(r.target) << ',' << r.status
        << ',' << format_double(r.rmse) << ',' << format_double(r.train_time_s)
        << ',' << format_double(r.instance_pred_time_ms) << ','
        << format_double(r.eval_time_s) << ',' << r.windows << ',' << r.skipped
        << ',' << sanitize(r.error) << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty report");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 10) throw Error(path + ": expected 10 fields");
    ReportRow r;
    r.run_id = f[0];
    r.target = f[1];
    r.status = f[2];
    r.rmse = to_double(f[3], path);
    r.train_time_s = to_double(f[4], path);
    r.instance_pred_time_ms = to_double(f[5], path);
    r.eval_time_s = to_double(f[6], path);
    r.windows = to_size(f[7], path);
    r.skipped = to_size(f[8], path);
    r.error = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_trace_csv(const std::string& path, std::span<const EvalReport> reports) {
  std::ofstream out = open_out(path);
  out << "run_id,target,window_start,rmse,n_instances,skipped\n";
  for (const EvalReport& rep : reports) {
    for (const TargetReport& t : rep.targets) {
      for (const WindowTrace& w : t.trace) {
        out << sanitize(rep.run_id) << ',' << sanitize(t.target.name) << ','
            << w.window_start << ',' << format_double(w.rmse) << ','
            << w.n_instances << ',' << (w.skipped ? 1 : 0) << '\n';
      }
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_weights_csv(const std::string& path, std::span<const EvalReport> reports) {
  std::ofstream out = open_out(path);
  out << "run_id,target,neighbor,r,weight,selected,degenerate\n";
  for (const EvalReport& rep : reports) {
    for (const auto& [target, map] : rep.final_weights) {
      for (const NeighborWeight& e : map.entries) {
        out << sanitize(rep.run_id) << ',' << sanitize(target.name) << ','
            << sanitize(e.neighbor.name) << ',' << format_double(e.r) << ','
            << format_double(e.weight) << ',' << (e.selected ? 1 : 0) << ','
            << (e.degenerate ? 1 : 0) << '\n';
      }
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_scores_csv(const std::string& path,
                      const std::map<SensorId, OutlierScoreSeries>& scores) {
  std::ofstream out = open_out(path);
  out << "sensor,window_start,score\n";
  for (const auto& [id, series] : scores) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      out << sanitize(id.name) << ',' << series.window_starts[i] << ','
          << format_double(series.scores[i]) << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_fpds_csv(const std::string& path, std::span<const Fpd> fpds) {
  std::ofstream out = open_out(path);
  out << "sensor,window_start,bin,prob\n";
  for (const Fpd& f : fpds) {
    for (std::size_t b = 0; b < f.probs.size(); ++b) {
      out << sanitize(f.sensor.name) << ',' << f.window_start << ',' << b << ','
          << format_double(f.probs[b]) << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_run_jsonl(const std::string& path, const EvalReport& report) {
  using nlohmann::json;
  std::ofstream out = open_out(path);
  json head = {
      {"type", "run"},
      {"run_id", report.run_id},
      {"mode", to_string(report.mode)},
      {"update_mode", to_string(report.update_mode)},
      {"failed", report.failed},
      {"error", report.error},
      {"rmse", report.rmse},
      {"train_time_s", report.train_time_s},
      {"instance_pred_time_ms", report.instance_pred_time_ms},
      {"eval_time_s", report.eval_time_s},
      {"scoring_time_s", report.scoring_time_s},
  };
  out << head.dump() << '\n';
  for (const TargetReport& t : report.targets) {
    json row = {
        {"type", "target"},
        {"target", t.target.name},
        {"rmse", t.rmse},
        {"train_time_s", t.train_time_s},
        {"instance_pred_time_ms", t.instance_pred_time_ms},
        {"eval_time_s", t.eval_time_s},
        {"n_eval_instances", t.n_eval_instances},
        {"windows_total", t.windows_total},
        {"windows_skipped", t.windows_skipped},
    };
    out << row.dump() << '\n';
  }
  for (const RunEvent& e : report.events) {
    json row = {
        {"type", "event"},
        {"window", e.window_index},
        {"kind", to_string(e.kind)},
        {"target", e.target.name},
        {"window_start", e.window_start},
    };
    out << row.dump() << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace flowcast
