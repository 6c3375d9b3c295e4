#include "loadfc/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "loadfc/data/meter.hpp"
#include "loadfc/data/windows.hpp"
#include "loadfc/error.hpp"
#include "loadfc/eval/summary.hpp"
#include "loadfc/eval/trace.hpp"
#include "loadfc/models/checkpoint.hpp"
#include "loadfc/selftest.hpp"
#include "loadfc/text.hpp"
#include "loadfc/training/config.hpp"
#include "loadfc/training/experiment.hpp"
#include "loadfc/training/grid.hpp"

namespace fs = std::filesystem;

namespace loadfc::cli {

namespace {

struct Options {
  std::string data;
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 42;
  bool seed_set = false;
  std::size_t workers = 1;
  std::vector<std::string> houses;
  std::vector<std::string> models;
  std::vector<std::size_t> windows;
  std::optional<std::size_t> seeds_per_cell;
  std::vector<std::string> settings;  // key=value
  std::string timing = "wall";
  bool verbose = false;

  // train / trace
  std::string house;
  std::string model = "transformer";
  std::size_t n = 3;
  std::string date;
  std::size_t days = 1;
  std::vector<std::string> checkpoints;
  std::string results;
};

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& it : items) s += (s.empty() ? "" : ",") + it;
  return s;
}

training::ExperimentConfig build_config(const Options& o) {
  training::ExperimentConfig c = o.config.empty() ? training::default_grid_config()
                                                  : training::load_config(o.config);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    training::apply_setting(c, std::string(text::trim(std::string_view(kv).substr(0, eq))),
                            kv.substr(eq + 1));
  }
  if (!o.houses.empty()) training::apply_setting(c, "houses", join(o.houses));
  if (!o.models.empty()) training::apply_setting(c, "models", join(o.models));
  if (!o.windows.empty()) {
    std::vector<std::string> w;
    for (auto n : o.windows) w.push_back(std::to_string(n));
    training::apply_setting(c, "windows", join(w));
  }
  if (o.seeds_per_cell) c.seeds_per_cell = *o.seeds_per_cell;
  if (o.seed_set) c.base_seed = o.seed;
  if (o.timing != "wall" && o.timing != "none")
    throw ConfigError("--timing must be 'wall' or 'none'");
  c.settings.record_timing = o.timing == "wall";
  c.validate();
  return c;
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

std::vector<fs::path> input_files(const std::string& data) {
  if (data.empty()) throw ConfigError("--data is required");
  const fs::path p(data);
  if (fs::is_regular_file(p)) return {p};
  if (!fs::is_directory(p)) throw IoError("no such file or directory: " + data);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(p))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyInputError("empty input: no .csv files in " + data);
  return files;
}

std::string require_data(const Options& o) {
  if (o.data.empty()) throw ConfigError("--data is required");
  return o.data;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const auto result = data::parse_reading_files(input_files(o.data));
  const fs::path dir = output_dir(o);
  std::size_t written = 0;
  for (const auto& s : result.series) {
    if (!o.houses.empty() &&
        std::find(o.houses.begin(), o.houses.end(), s.household_id) == o.houses.end())
      continue;
    auto f = open_out(data::series_cache_path(dir, s.household_id));
    data::write_series_csv(f, s);
    ++written;
    out << s.household_id << ": " << s.size() << " readings\n";
  }
  if (written == 0) throw EmptyInputError("empty input: none of the requested households found");
  out << "households " << written << ", rows " << result.report.rows << ", dropped "
      << result.report.dropped_count << ", duplicates " << result.report.duplicate_count
      << '\n';
  return kExitOk;
}

std::map<std::string, std::string> scaler_metadata(const data::MinMaxScaler& s) {
  return {{"scaler.min", text::format_hex(s.min)}, {"scaler.max", text::format_hex(s.max)}};
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto config = build_config(o);
  const std::string house = o.house.empty() ? config.houses.front() : o.house;
  const auto kind = models::parse_model_kind(o.model);
  const auto series = data::load_cached_series(require_data(o), house);
  const training::RunCoordinates coords{house, kind, o.n, 0};
  const auto seed = training::derive_run_seed(config.base_seed, coords);
  const auto run = training::run_experiment(series, kind, o.n, seed, config.settings);

  const fs::path dir = output_dir(o);
  auto meta = scaler_metadata(run.scaler);
  meta["house"] = house;
  meta["n"] = std::to_string(o.n);
  meta["seed"] = std::to_string(seed);
  const std::string stem = house + "-" + std::string(models::model_key(kind)) + "-" +
                           std::to_string(o.n);
  models::save_checkpoint(dir / (stem + ".ckpt"), run.model, meta);
  {
    auto f = open_out(dir / (stem + ".results.csv"));
    training::write_results_csv(f, {run.result});
  }
  {
    auto f = open_out(dir / (stem + ".loss.csv"));
    f << "epoch,loss\n";
    for (std::size_t e = 0; e < run.loss_curve.size(); ++e)
      f << e + 1 << ',' << text::format_double(run.loss_curve[e]) << '\n';
  }
  out << models::model_label(kind) << " n=" << o.n << " house=" << house
      << " seed=" << seed << " mape=" << text::format_double(run.result.test_mape_percent)
      << "% excluded=" << run.mape_excluded
      << " train_seconds=" << text::format_double(run.result.train_seconds) << '\n'
      << "checkpoint " << (dir / (stem + ".ckpt")).string() << '\n';
  return kExitOk;
}

void write_summary(const fs::path& dir, const std::vector<training::ExperimentResult>& results,
                   std::ostream& out) {
  const auto rows = eval::summarize(results);
  auto f = open_out(dir / "summary.csv");
  eval::write_summary_csv(f, rows);
  eval::print_summary_table(out, rows);
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const auto config = build_config(o);
  if (o.workers == 0) throw ConfigError("--workers must be at least 1");
  const std::string data_dir = require_data(o);
  std::map<std::string, data::MeterSeries> series;
  for (const auto& h : config.houses) {
    try {
      series.emplace(h, data::load_cached_series(data_dir, h));
    } catch (const IoError& e) {
      err << "loadfc: warning: " << e.what() << '\n';
    }
  }
  if (series.empty()) throw DataError("no cached series found in " + data_dir);

  const fs::path dir = output_dir(o);
  training::GridProgress progress;
  if (o.verbose)
    progress = [&err](const training::RunCoordinates& c, std::size_t done, std::size_t total,
                      const std::string& error) {
      err << '[' << done << '/' << total << "] " << c.house << ' '
          << models::model_label(c.model) << '-' << c.n << "TI #" << c.replicate
          << (error.empty() ? "" : " FAILED: " + error) << '\n';
    };
  const auto outcome = training::run_grid(series, config, o.workers, progress);
  {
    auto f = open_out(dir / "results.csv");
    training::write_results_csv(f, outcome.results);
  }
  {
    auto f = open_out(dir / "failures.csv");
    f << "model,n,house,replicate,error\n";
    for (const auto& fl : outcome.failures) {
      std::string msg = fl.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      f << models::model_label(fl.coords.model) << ',' << fl.coords.n << ','
        << fl.coords.house << ',' << fl.coords.replicate << ',' << msg << '\n';
    }
  }
  out << "runs " << config.run_count() << ", succeeded " << outcome.results.size()
      << ", failed " << outcome.failures.size() << '\n';
  if (outcome.results.empty()) throw DataError("every run failed; see failures.csv");
  write_summary(dir, outcome.results, out);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  if (o.results.empty()) throw ConfigError("report needs a results CSV");
  std::ifstream in(o.results, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.results);
  const auto results = training::read_results_csv(in);
  if (results.empty()) throw EmptyInputError("empty input: " + o.results + " has no runs");
  write_summary(output_dir(o), results, out);
  return kExitOk;
}

int cmd_trace(const Options& o, std::ostream& out) {
  if (o.checkpoints.empty()) throw ConfigError("trace needs at least one --checkpoint");
  if (o.date.empty()) throw ConfigError("trace needs --date YYYY-MM-DD");
  if (o.days == 0) throw ConfigError("--days must be positive");
  const std::string house = o.house.empty() ? "MAC000002" : o.house;
  const auto series = data::load_cached_series(require_data(o), house);
  const auto begin = data::parse_date(o.date);
  const auto end = begin + static_cast<data::Timestamp>(o.days) * 86400;

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.readings[i].timestamp >= begin && series.readings[i].timestamp < end)
      idx.push_back(i);
  if (idx.empty())
    throw DataError("no readings for " + house + " between " + data::format_timestamp(begin) +
                    " and " + data::format_timestamp(end));

  eval::ForecastTrace trace;
  trace.house_id = house;
  for (auto i : idx) {
    trace.timestamps.push_back(series.readings[i].timestamp);
    trace.truth_kwh.push_back(series.readings[i].kwh);
  }
  for (const auto& path : o.checkpoints) {
    const auto ck = models::load_checkpoint(path);
    auto get = [&](const char* key) {
      const auto it = ck.metadata.find(key);
      if (it == ck.metadata.end())
        throw FormatError("checkpoint " + path + " lacks metadata '" + key + "'");
      return it->second;
    };
    const data::MinMaxScaler scaler{text::parse_double(get("scaler.min"), "scaler.min"),
                                    text::parse_double(get("scaler.max"), "scaler.max")};
    const std::size_t n = text::parse_u64(get("n"), "n");
    if (idx.front() < n)
      throw DataError("trace window starts before " + std::to_string(n) +
                      " earlier readings are available");
    std::string name(models::model_label(ck.model.spec().kind));
    // Several checkpoints of one model kind get their window in the name.
    for (const auto& s : trace.forecasts)
      if (s.name == name) name += "-" + std::to_string(n) + "TI";
    eval::NamedSeries fc{name, {}};
    std::vector<double> window(n);
    for (auto i : idx) {
      for (std::size_t j = 0; j < n; ++j) window[j] = scaler.scale(series.readings[i - n + j].kwh);
      fc.values.push_back(scaler.inverse(ck.model.forecast(window)));
    }
    trace.forecasts.push_back(std::move(fc));
  }
  const fs::path dir = output_dir(o);
  const std::string stem = "trace-" + house + "-" + o.date;
  eval::export_trace(trace, eval::TraceFormat::Csv, dir / (stem + ".csv"));
  eval::export_trace(trace, eval::TraceFormat::Svg, dir / (stem + ".svg"));
  out << "wrote " << (dir / (stem + ".csv")).string() << " and "
      << (dir / (stem + ".svg")).string() << " (" << idx.size() << " points)\n";
  return kExitOk;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  const auto checks = selftest::run(o.seed);
  bool ok = true;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.passed;
  }
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Input CSV file/directory or cleaned-series cache")
      ->envname("LOADFC_DATA");
  sub->add_option("--out", o.out, "Output directory")->envname("LOADFC_OUT");
  sub->add_option("--config", o.config, "Experiment config file")->envname("LOADFC_CONFIG");
  sub->add_option_function<std::uint64_t>(
         "--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_set = true; },
         "Base seed")
      ->envname("LOADFC_SEED");
  sub->add_option("--set", o.settings, "Config override key=value (repeatable)");
  sub->add_option("--timing", o.timing, "Record training time: wall or none")
      ->envname("LOADFC_TIMING");
  sub->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
}

void add_grid(CLI::App* sub, Options& o) {
  sub->add_option("--workers", o.workers, "Concurrent runs")->envname("LOADFC_WORKERS");
  sub->add_option("--houses", o.houses, "Household ids")->delimiter(',');
  sub->add_option("--models", o.models, "transformer, lstm, rnn")->delimiter(',');
  sub->add_option("--windows", o.windows, "Window lengths n")->delimiter(',');
  sub->add_option("--seeds-per-cell", o.seeds_per_cell, "Replicates per (house, model, n)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Household load forecasting: Transformer, LSTM and RNN"};
  app.name("loadfc");
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Raw meter CSV -> per-household cache");
  add_common(ingest, o);
  ingest->add_option("--houses", o.houses, "Only these households")->delimiter(',');

  auto* train = app.add_subcommand("train", "Train and evaluate a single model");
  add_common(train, o);
  train->add_option("--house", o.house, "Household id");
  train->add_option("--model", o.model, "transformer, lstm or rnn");
  train->add_option("--n", o.n, "Window length");
  add_grid(train, o);

  auto* bench = app.add_subcommand("bench", "Run the experiment grid");
  add_common(bench, o);
  add_grid(bench, o);

  auto* report = app.add_subcommand("report", "Results CSV -> summary table");
  add_common(report, o);
  report->add_option("results", o.results, "Results CSV")->required();

  auto* trace = app.add_subcommand("trace", "Forecast trace CSV/SVG for a day window");
  add_common(trace, o);
  trace->add_option("--house", o.house, "Household id (default MAC000002)");
  trace->add_option("--date", o.date, "First day, YYYY-MM-DD");
  trace->add_option("--days", o.days, "Number of days");
  trace->add_option("--checkpoint", o.checkpoints, "Checkpoint file (repeatable)");

  auto* self = app.add_subcommand("selftest", "Gradient and invariant checks");
  add_common(self, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "loadfc: error[usage]: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(o, out);
    if (*train) return cmd_train(o, out);
    if (*bench) return cmd_bench(o, out, err);
    if (*report) return cmd_report(o, out);
    if (*trace) return cmd_trace(o, out);
    if (*self) return cmd_selftest(o, out);
  } catch (const ConfigError& e) {
    err << "loadfc: error[" << e.kind() << "]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "loadfc: error[" << e.kind() << "]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "loadfc: error[internal]: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace loadfc::cli
