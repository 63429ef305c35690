// Command-line front end: prepare datasets, execute runs, sweep parameters,
// and compare update policies. Exit codes: 0 success, 1 runtime failure,
// 2 configuration problem.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowcast/config_file.hpp"
#include "flowcast/csv_io.hpp"
#include "flowcast/format.hpp"
#include "flowcast/harness.hpp"
#include "flowcast/report_io.hpp"

namespace fs = std::filesystem;
using namespace flowcast;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // empty = use config's [output] dir
  std::int64_t seed = -1;  // -1 = keep config seed
  int threads = 0;         // 0 = keep environment setting
};

std::string safe_name(const std::string& raw) {
  std::string out = raw;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

CliConfig load_config(const CommonArgs& args) {
  CliConfig cfg = parse_config_file(args.config_path);
  if (args.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
  if (args.threads > 0) {
    setenv("FLOWCAST_THREADS", std::to_string(args.threads).c_str(), 1);
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_run_outputs(const fs::path& dir, const CliConfig& cfg,
                       const Dataset& dataset, const EvalReport& rep) {
  fs::create_directories(dir);
  write_text(dir / "config_snapshot.ini", config_to_text(cfg));
  const std::vector<EvalReport> reports{rep};
  const std::vector<ReportRow> rows = report_rows(reports);
  write_report_csv((dir / "report.csv").string(), rows);
  write_trace_csv((dir / "trace.csv").string(), reports);
  if (cfg.output.write_weights) {
    write_weights_csv((dir / "weights.csv").string(), reports);
  }
  if (cfg.output.write_scores) {
    write_scores_csv((dir / "scores.csv").string(), rep.scores);
  }
  if (cfg.output.write_fpds) {
    std::vector<Fpd> all;
    for (const SensorSeries& s : dataset.series) {
      std::vector<Fpd> stream = fpd_stream(s, cfg.run.fpd);
      all.insert(all.end(), std::make_move_iterator(stream.begin()),
                 std::make_move_iterator(stream.end()));
    }
    write_fpds_csv((dir / "fpds.csv").string(), all);
  }
  if (cfg.output.write_checkpoints) {
    for (const auto& [target, text] : rep.checkpoints) {
      write_text(dir / ("checkpoint_" + safe_name(target.name) + ".txt"), text);
    }
  }
  write_run_jsonl((dir / "report.jsonl").string(), rep);
}

void print_repairs(const LoadStats& stats) {
  std::size_t total = 0;
  for (const auto& [id, n] : stats.repaired) total += n;
  std::cout << "rows parsed: " << stats.rows_parsed
            << ", grid steps: " << stats.grid_steps
            << ", repaired cells: " << total << '\n';
  for (const auto& [id, n] : stats.repaired) {
    std::cout << "  " << id.name << ": " << n << '\n';
  }
}

int cmd_prepare(const CommonArgs& args, const std::string& out_csv) {
  const CliConfig cfg = load_config(args);
  LoadStats stats;
  const Dataset dataset = cfg.dataset.load(&stats);
  write_csv(dataset, out_csv);
  std::cout << "dataset: " << dataset.n_sensors() << " sensors x "
            << dataset.n_steps() << " steps\n";
  if (!cfg.dataset.synthetic) print_repairs(stats);
  std::cout << "wrote " << out_csv << '\n';
  return 0;
}

EvalReport execute(const Dataset& dataset, const RunConfig& run) {
  return run.mode == RunMode::offline ? run_offline(dataset, run)
                                      : run_online(dataset, run);
}

int cmd_run(const CommonArgs& args) {
  const CliConfig cfg = load_config(args);
  const Dataset dataset = cfg.dataset.load();
  const EvalReport rep = execute(dataset, cfg.run);
  const fs::path dir = fs::path(cfg.output.dir) / safe_name(rep.run_id);
  write_run_outputs(dir, cfg, dataset, rep);
  std::cout << rep.run_id << ": rmse=" << format_double(rep.rmse) << " over "
            << rep.targets.size() << " targets\n";
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

struct SweepAxis {
  std::string param;  // theta | loss | window | update
  std::vector<std::string> values;
};

RunConfig apply_sweep_value(RunConfig base, const std::string& param,
                            const std::string& value) {
  if (param == "theta") {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      throw ConfigError("bad theta value '" + value + "'");
    }
    base.theta = v;
  } else if (param == "loss") {
    base.loss_kind = parse_loss_kind(value);
  } else if (param == "window") {
    base.window_T = parse_window_duration(value);
  } else if (param == "update") {
    base.update_mode = parse_update_mode(value);
  } else {
    throw ConfigError("unknown sweep parameter '" + param +
                      "' (expected theta, loss, window or update)");
  }
  return base;
}

int cmd_sweep(const CommonArgs& args, const SweepAxis& axis) {
  const CliConfig cfg = load_config(args);
  if (axis.values.empty()) throw ConfigError("sweep needs at least one value");
  const Dataset dataset = cfg.dataset.load();

  std::vector<RunConfig> cells;
  cells.reserve(axis.values.size());
  for (std::size_t i = 0; i < axis.values.size(); ++i) {
    RunConfig cell = apply_sweep_value(cfg.run, axis.param, axis.values[i]);
    // Distinct stream per cell, reproducible from the base seed.
    cell.seed = cfg.run.seed + i;
    cells.push_back(std::move(cell));
  }
  const std::vector<EvalReport> reports = bench(dataset, cells);

  const fs::path dir =
      fs::path(cfg.output.dir) / safe_name("sweep-" + axis.param + "-seed" +
                                           std::to_string(cfg.run.seed));
  fs::create_directories(dir);
  write_text(dir / "config_snapshot.ini", config_to_text(cfg));
  write_report_csv((dir / "report.csv").string(), report_rows(reports));
  write_trace_csv((dir / "trace.csv").string(), reports);

  std::ofstream long_csv(dir / "sweep.csv");
  if (!long_csv) throw Error("cannot open sweep.csv for writing");
  long_csv << "param,value,run_id,status,rmse,train_time_s,"
              "instance_pred_time_ms,eval_time_s\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    long_csv << axis.param << ',' << axis.values[i] << ',' << r.run_id << ','
             << (r.failed ? "failed" : "ok") << ',' << format_double(r.rmse)
             << ',' << format_double(r.train_time_s) << ','
             << format_double(r.instance_pred_time_ms) << ','
             << format_double(r.eval_time_s) << '\n';
    std::cout << axis.param << '=' << axis.values[i] << ": "
              << (r.failed ? ("FAILED (" + r.error + ")")
                           : "rmse=" + format_double(r.rmse))
              << '\n';
  }
  if (!long_csv) throw Error("failed writing sweep.csv");
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_bench(const CommonArgs& args) {
  const CliConfig cfg = load_config(args);
  const Dataset dataset = cfg.dataset.load();

  // Offline baseline plus the three online policies on one dataset.
  std::vector<RunConfig> cells;
  RunConfig offline = cfg.run;
  offline.mode = RunMode::offline;
  cells.push_back(offline);
  for (UpdateMode um : {UpdateMode::adaptive, UpdateMode::static_incremental,
                        UpdateMode::no_update}) {
    RunConfig online = cfg.run;
    online.mode = RunMode::online;
    online.update_mode = um;
    cells.push_back(online);
  }
  const std::vector<EvalReport> reports = bench(dataset, cells);

  const fs::path dir = fs::path(cfg.output.dir) /
                       safe_name("bench-seed" + std::to_string(cfg.run.seed));
  fs::create_directories(dir);
  write_text(dir / "config_snapshot.ini", config_to_text(cfg));
  write_report_csv((dir / "report.csv").string(), report_rows(reports));
  write_trace_csv((dir / "trace.csv").string(), reports);

  for (const EvalReport& r : reports) {
    std::cout << r.run_id << ": "
              << (r.failed ? ("FAILED (" + r.error + ")")
                           : "rmse=" + format_double(r.rmse) +
                                 " train_s=" + format_double(r.train_time_s))
              << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming traffic-flow forecasting over sensor networks"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string prepare_out;
  SweepAxis axis;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    CLI::Option* opt = cmd->add_option("-c,--config", args.config_path,
                                       "Run configuration (INI)");
    if (needs_config) opt->required();
    cmd->add_option("-o,--out-dir", args.out_dir,
                    "Override the configured output directory");
    cmd->add_option("--seed", args.seed, "Override the configured seed");
    cmd->add_option("--threads", args.threads,
                    "Worker threads (sets FLOWCAST_THREADS)");
  };

  CLI::App* prepare =
      app.add_subcommand("prepare", "Load or generate a dataset, write canonical CSV");
  add_common(prepare, true);
  prepare->add_option("--out", prepare_out, "Output CSV path")->required();

  CLI::App* run = app.add_subcommand("run", "Execute one evaluation run");
  add_common(run, true);

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one parameter axis");
  add_common(sweep, true);
  sweep->add_option("--param", axis.param, "Axis: theta, loss, window or update")
      ->required();
  sweep->add_option("--values", axis.values, "Comma-separated values")
      ->required()
      ->delimiter(',');

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Compare offline and online update policies");
  add_common(bench_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(args, prepare_out);
    if (run->parsed()) return cmd_run(args);
    if (sweep->parsed()) return cmd_sweep(args, axis);
    if (bench_cmd->parsed()) return cmd_bench(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
