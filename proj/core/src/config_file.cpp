#include "flowcast/config_file.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "flowcast/format.hpp"

namespace flowcast {
namespace {

std::string strip(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line_no,
                       const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line_no << ": " << what;
  throw ConfigError(os.str());
}

long long parse_int(const std::string& text, const std::string& origin,
                    std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno != 0) {
    fail(origin, line_no, "expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& origin,
                        std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || end == text.c_str() || *end != '\0' ||
      errno != 0) {
    fail(origin, line_no, "expected an unsigned integer, got '" + text + "'");
  }
  return v;
}

double parse_num(const std::string& text, const std::string& origin,
                 std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    fail(origin, line_no, "expected a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& origin,
                std::size_t line_no) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(origin, line_no, "expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = text.find(sep, pos);
    if (at == std::string::npos) {
      out.push_back(strip(text.substr(pos)));
      return out;
    }
    out.push_back(strip(text.substr(pos, at - pos)));
    pos = at + 1;
  }
}

AnomalyKind parse_anomaly_kind(const std::string& text, const std::string& origin,
                               std::size_t line_no) {
  if (text == "spike") return AnomalyKind::spike;
  if (text == "drop") return AnomalyKind::drop;
  if (text == "shift") return AnomalyKind::shift;
  fail(origin, line_no,
       "unknown anomaly kind '" + text + "' (expected spike, drop or shift)");
}

std::string anomaly_kind_name(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::drop: return "drop";
    case AnomalyKind::shift: return "shift";
  }
  return "spike";
}

// `sensors|kind|magnitude|start|end`, sensors separated by ';'.
AnomalySpec parse_anomaly(const std::string& text, const std::string& origin,
                          std::size_t line_no) {
  const std::vector<std::string> parts = split_on(text, '|');
  if (parts.size() != 5) {
    fail(origin, line_no,
         "anomaly must be 'sensors|kind|magnitude|start|end', got '" + text + "'");
  }
  AnomalySpec a;
  for (const std::string& name : split_on(parts[0], ';')) {
    if (name.empty()) fail(origin, line_no, "empty sensor name in anomaly");
    a.sensor_ids.push_back(SensorId{name});
  }
  a.kind = parse_anomaly_kind(parts[1], origin, line_no);
  a.magnitude = parse_num(parts[2], origin, line_no);
  try {
    a.start = parse_timestamp(parts[3]);
    a.end = parse_timestamp(parts[4]);
  } catch (const Error& e) {
    fail(origin, line_no, e.what());
  }
  return a;
}

struct KeyTracker {
  std::set<std::string> seen;

  // Returns false if the key was already present (duplicate).
  bool insert(const std::string& section, const std::string& key) {
    return seen.insert(section + "." + key).second;
  }
  bool has(const std::string& section, const std::string& key) const {
    return seen.count(section + "." + key) > 0;
  }
};

}  // namespace

Dataset DatasetSpec::load(LoadStats* stats) const {
  if (synthetic) {
    Dataset ds = generate_synthetic(synth);
    if (stats != nullptr) {
      stats->rows_parsed = ds.n_steps();
      stats->grid_steps = ds.n_steps();
    }
    return ds;
  }
  if (path.empty()) throw ConfigError("dataset path is empty");
  Dataset ds = load_csv(path, layout, sample_interval, stats);
  ds.indicator = indicator;
  return ds;
}

CliConfig parse_config_text(const std::string& text, const std::string& origin) {
  CliConfig cfg;
  KeyTracker keys;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool indicator_speed = false;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      section = strip(line.substr(1, line.size() - 2));
      if (section != "dataset" && section != "run" && section != "fpd" &&
          section != "detector" && section != "lstm" && section != "output") {
        fail(origin, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    if (section.empty()) fail(origin, line_no, "key outside any section");
    if (key != "anomaly" && !keys.insert(section, key)) {
      fail(origin, line_no, "duplicate key '" + key + "' in [" + section + "]");
    }

    if (section == "dataset") {
      if (key == "source") {
        if (value == "synthetic") {
          cfg.dataset.synthetic = true;
        } else if (value == "csv") {
          cfg.dataset.synthetic = false;
        } else {
          fail(origin, line_no, "source must be 'synthetic' or 'csv'");
        }
      } else if (key == "path") {
        cfg.dataset.path = value;
      } else if (key == "layout") {
        if (value == "wide") {
          cfg.dataset.layout = CsvLayout::wide;
        } else if (value == "long") {
          cfg.dataset.layout = CsvLayout::long_form;
        } else {
          fail(origin, line_no, "layout must be 'wide' or 'long'");
        }
      } else if (key == "sample_interval") {
        const long long v = parse_int(value, origin, line_no);
        if (v <= 0) fail(origin, line_no, "sample_interval must be positive");
        cfg.dataset.sample_interval = v;
        cfg.dataset.synth.sample_interval = v;
      } else if (key == "indicator") {
        if (value == "flow_count") {
          indicator_speed = false;
        } else if (value == "speed") {
          indicator_speed = true;
        } else {
          fail(origin, line_no, "indicator must be 'flow_count' or 'speed'");
        }
      } else if (key == "n_sensors") {
        cfg.dataset.synth.n_sensors =
            static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "n_steps") {
        cfg.dataset.synth.n_steps =
            static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "seed") {
        cfg.dataset.synth.seed = parse_u64(value, origin, line_no);
      } else if (key == "base_pattern") {
        if (value == "diurnal") {
          cfg.dataset.synth.base_pattern = BasePattern::diurnal;
        } else if (value == "flat") {
          cfg.dataset.synth.base_pattern = BasePattern::flat;
        } else {
          fail(origin, line_no, "base_pattern must be 'diurnal' or 'flat'");
        }
      } else if (key == "noise_sigma") {
        cfg.dataset.synth.noise_sigma = parse_num(value, origin, line_no);
      } else if (key == "base_level") {
        cfg.dataset.synth.base_level = parse_num(value, origin, line_no);
      } else if (key == "start_time") {
        try {
          cfg.dataset.synth.start_time = parse_timestamp(value);
        } catch (const Error& e) {
          fail(origin, line_no, e.what());
        }
      } else if (key == "anomaly") {
        cfg.dataset.synth.anomalies.push_back(parse_anomaly(value, origin, line_no));
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [dataset]");
      }
    } else if (section == "run") {
      if (key == "mode") {
        cfg.run.mode = parse_run_mode(value);
      } else if (key == "loss") {
        cfg.run.loss_kind = parse_loss_kind(value);
      } else if (key == "theta") {
        cfg.run.theta = parse_num(value, origin, line_no);
      } else if (key == "update") {
        cfg.run.update_mode = parse_update_mode(value);
      } else if (key == "window") {
        cfg.run.window_T = parse_window_duration(value);
      } else if (key == "targets") {
        cfg.run.targets.clear();
        for (const std::string& name : split_on(value, ',')) {
          if (!name.empty()) cfg.run.targets.push_back(SensorId{name});
        }
      } else if (key == "seed") {
        cfg.run.seed = parse_u64(value, origin, line_no);
      } else if (key == "train_fraction") {
        cfg.run.train_fraction = parse_num(value, origin, line_no);
      } else if (key == "weight_rule") {
        cfg.run.weight_rule = parse_weight_rule(value);
      } else if (key == "corr_history") {
        if (value == "expanding") {
          cfg.run.corr_history = CorrHistory::expanding;
        } else if (value == "sliding") {
          cfg.run.corr_history = CorrHistory::sliding;
        } else {
          fail(origin, line_no, "corr_history must be 'expanding' or 'sliding'");
        }
      } else if (key == "corr_sliding_windows") {
        cfg.run.corr_sliding_windows =
            static_cast<int>(parse_int(value, origin, line_no));
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [run]");
      }
    } else if (section == "fpd") {
      if (key == "window") {
        cfg.run.fpd.window = parse_window_duration(value);
      } else if (key == "bin_interval") {
        cfg.run.fpd.bin_interval = parse_window_duration(value);
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [fpd]");
      }
    } else if (section == "detector") {
      if (key == "lr") {
        cfg.run.detector.lr = parse_num(value, origin, line_no);
      } else if (key == "w_min") {
        cfg.run.detector.w_min = parse_num(value, origin, line_no);
      } else if (key == "decay") {
        cfg.run.detector.decay = parse_num(value, origin, line_no);
      } else if (key == "hidden_dim") {
        cfg.run.detector.hidden_dim =
            static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "bottleneck_dim") {
        cfg.run.detector.bottleneck_dim =
            static_cast<int>(parse_int(value, origin, line_no));
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [detector]");
      }
    } else if (section == "lstm") {
      if (key == "hidden_dim") {
        cfg.run.lstm.hidden_dim = static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "batch") {
        cfg.run.lstm.batch = static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "lr") {
        cfg.run.lstm.lr = parse_num(value, origin, line_no);
      } else if (key == "max_epochs") {
        cfg.run.lstm.max_epochs = static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "patience") {
        cfg.run.lstm.patience = static_cast<int>(parse_int(value, origin, line_no));
      } else if (key == "val_fraction") {
        cfg.run.lstm.val_fraction = parse_num(value, origin, line_no);
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [lstm]");
      }
    } else if (section == "output") {
      if (key == "dir") {
        cfg.output.dir = value;
      } else if (key == "write_scores") {
        cfg.output.write_scores = parse_bool(value, origin, line_no);
      } else if (key == "write_weights") {
        cfg.output.write_weights = parse_bool(value, origin, line_no);
      } else if (key == "write_fpds") {
        cfg.output.write_fpds = parse_bool(value, origin, line_no);
      } else if (key == "write_checkpoints") {
        cfg.output.write_checkpoints = parse_bool(value, origin, line_no);
      } else {
        fail(origin, line_no, "unknown key '" + key + "' in [output]");
      }
    }
  }

  if (!keys.has("run", "seed")) {
    throw ConfigError(origin + ": [run] seed is required");
  }
  if (cfg.dataset.synthetic) {
    if (keys.has("dataset", "path") || keys.has("dataset", "layout")) {
      throw ConfigError(origin +
                        ": path/layout are only valid for source = csv");
    }
  } else {
    for (const char* key : {"n_sensors", "n_steps", "base_pattern", "noise_sigma",
                            "base_level", "start_time", "seed"}) {
      if (keys.has("dataset", key)) {
        throw ConfigError(origin + ": '" + key +
                          "' is only valid for source = synthetic");
      }
    }
    if (!cfg.dataset.synth.anomalies.empty()) {
      throw ConfigError(origin + ": 'anomaly' is only valid for source = synthetic");
    }
    if (cfg.dataset.path.empty()) {
      throw ConfigError(origin + ": [dataset] path is required for source = csv");
    }
  }
  cfg.dataset.indicator = indicator_speed ? Indicator::speed : Indicator::flow_count;
  cfg.dataset.synth.indicator = cfg.dataset.indicator;
  return cfg;
}

CliConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string config_to_text(const CliConfig& cfg) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "source = " << (cfg.dataset.synthetic ? "synthetic" : "csv") << '\n';
  if (!cfg.dataset.synthetic) {
    os << "path = " << cfg.dataset.path << '\n';
    os << "layout = "
       << (cfg.dataset.layout == CsvLayout::wide ? "wide" : "long") << '\n';
  }
  os << "sample_interval = " << cfg.dataset.sample_interval << '\n';
  os << "indicator = "
     << (cfg.dataset.indicator == Indicator::speed ? "speed" : "flow_count")
     << '\n';
  if (cfg.dataset.synthetic) {
    const SyntheticSpec& s = cfg.dataset.synth;
    os << "n_sensors = " << s.n_sensors << '\n';
    os << "n_steps = " << s.n_steps << '\n';
    os << "seed = " << s.seed << '\n';
    os << "base_pattern = "
       << (s.base_pattern == BasePattern::diurnal ? "diurnal" : "flat") << '\n';
    os << "noise_sigma = " << format_double(s.noise_sigma) << '\n';
    os << "base_level = " << format_double(s.base_level) << '\n';
    os << "start_time = " << s.start_time << '\n';
    for (const AnomalySpec& a : s.anomalies) {
      os << "anomaly = ";
      for (std::size_t i = 0; i < a.sensor_ids.size(); ++i) {
        if (i > 0) os << ';';
        os << a.sensor_ids[i].name;
      }
      os << '|' << anomaly_kind_name(a.kind) << '|' << format_double(a.magnitude)
         << '|' << a.start << '|' << a.end << '\n';
    }
  }
  os << "\n[run]\n";
  os << "mode = " << to_string(cfg.run.mode) << '\n';
  os << "loss = " << to_string(cfg.run.loss_kind) << '\n';
  os << "theta = " << format_double(cfg.run.theta) << '\n';
  os << "update = " << to_string(cfg.run.update_mode) << '\n';
  os << "window = " << window_duration_to_string(cfg.run.window_T) << '\n';
  if (!cfg.run.targets.empty()) {
    os << "targets = ";
    for (std::size_t i = 0; i < cfg.run.targets.size(); ++i) {
      if (i > 0) os << ',';
      os << cfg.run.targets[i].name;
    }
    os << '\n';
  }
  os << "seed = " << cfg.run.seed << '\n';
  os << "train_fraction = " << format_double(cfg.run.train_fraction) << '\n';
  os << "weight_rule = " << to_string(cfg.run.weight_rule) << '\n';
  os << "corr_history = "
     << (cfg.run.corr_history == CorrHistory::expanding ? "expanding" : "sliding")
     << '\n';
  os << "corr_sliding_windows = " << cfg.run.corr_sliding_windows << '\n';
  os << "\n[fpd]\n";
  os << "window = " << window_duration_to_string(cfg.run.fpd.window) << '\n';
  os << "bin_interval = " << window_duration_to_string(cfg.run.fpd.bin_interval)
     << '\n';
  os << "\n[detector]\n";
  os << "lr = " << format_double(cfg.run.detector.lr) << '\n';
  os << "w_min = " << format_double(cfg.run.detector.w_min) << '\n';
  os << "decay = " << format_double(cfg.run.detector.decay) << '\n';
  os << "hidden_dim = " << cfg.run.detector.hidden_dim << '\n';
  os << "bottleneck_dim = " << cfg.run.detector.bottleneck_dim << '\n';
  os << "\n[lstm]\n";
  os << "hidden_dim = " << cfg.run.lstm.hidden_dim << '\n';
  os << "batch = " << cfg.run.lstm.batch << '\n';
  os << "lr = " << format_double(cfg.run.lstm.lr) << '\n';
  os << "max_epochs = " << cfg.run.lstm.max_epochs << '\n';
  os << "patience = " << cfg.run.lstm.patience << '\n';
  os << "val_fraction = " << format_double(cfg.run.lstm.val_fraction) << '\n';
  os << "\n[output]\n";
  os << "dir = " << cfg.output.dir << '\n';
  os << "write_scores = " << (cfg.output.write_scores ? "true" : "false") << '\n';
  os << "write_weights = " << (cfg.output.write_weights ? "true" : "false") << '\n';
  os << "write_fpds = " << (cfg.output.write_fpds ? "true" : "false") << '\n';
  os << "write_checkpoints = " << (cfg.output.write_checkpoints ? "true" : "false")
     << '\n';
  return os.str();
}

Duration parse_window_duration(const std::string& text_in) {
  const std::string text = strip(text_in);
  if (text.empty()) throw ConfigError("empty duration");
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() || errno != 0 || v < 0) {
    throw ConfigError("cannot parse duration '" + text + "'");
  }
  std::string unit(end);
  if (unit.empty()) return v;
  if (unit.size() != 1) throw ConfigError("cannot parse duration '" + text + "'");
  switch (unit[0]) {
    case 's': return v;
    case 'm': return v * 60;
    case 'h': return v * 3600;
    case 'd': return v * 86400;
    case 'w': return v * 604800;
    default: throw ConfigError("unknown duration unit in '" + text + "'");
  }
}

std::string window_duration_to_string(Duration seconds) {
  std::ostringstream os;
  if (seconds > 0 && seconds % 604800 == 0) {
    os << seconds / 604800 << 'w';
  } else if (seconds > 0 && seconds % 86400 == 0) {
    os << seconds / 86400 << 'd';
  } else if (seconds > 0 && seconds % 3600 == 0) {
    os << seconds / 3600 << 'h';
  } else if (seconds > 0 && seconds % 60 == 0) {
    os << seconds / 60 << 'm';
  } else {
    os << seconds;
  }
  return os.str();
}

}  // namespace flowcast
