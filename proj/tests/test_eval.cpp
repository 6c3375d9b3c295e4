#include <doctest.h>

#include <cmath>
#include <sstream>

#include "loadfc/error.hpp"
#include "loadfc/eval/metrics.hpp"
#include "loadfc/eval/summary.hpp"
#include "loadfc/eval/trace.hpp"
#include "loadfc/rng.hpp"

using namespace loadfc;
using namespace loadfc::eval;
using models::ModelKind;
using training::ExperimentResult;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

ForecastTrace day_trace() {
  ForecastTrace t;
  t.house_id = "MAC000002";
  Rng rng(8);
  for (int i = 0; i < 48; ++i) {
    t.timestamps.push_back(1356998400 + i * data::kHalfHour);
    t.truth_kwh.push_back(rng.uniform(0, 2));
  }
  for (const char* name : {"Transformer-3TI", "LSTM-3TI", "RNN-3TI"}) {
    NamedSeries s{name, {}};
    for (int i = 0; i < 48; ++i) s.values.push_back(rng.uniform(0, 2) / 3.0);
    t.forecasts.push_back(std::move(s));
  }
  return t;
}

}  // namespace

TEST_CASE("mape examples") {
  const std::vector<double> truth = {1.0, 2.0}, pred = {1.5, 1.5};
  const auto r = mape(truth, pred);
  CHECK(r.percent == doctest::Approx(37.5).epsilon(1e-14));
  CHECK(r.used == 2);
  CHECK(r.excluded == 0);

  CHECK(mape(truth, truth).percent == 0.0);

  const std::vector<double> with_zero = {0.0, 2.0, 4.0}, p2 = {5.0, 1.0, 4.0};
  const auto z = mape(with_zero, p2);
  CHECK(z.excluded == 1);
  CHECK(z.used == 2);
  CHECK(z.percent == doctest::Approx(25.0));

  const std::vector<double> zeros = {0.0, 0.0}, any = {1.0, 1.0};
  CHECK_THROWS_AS(mape(zeros, any), MetricError);
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(mape(truth, one), DimensionError);
  CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), DimensionError);
}

TEST_CASE("mape properties") {
  Rng rng(21);
  for (int it = 0; it < 500; ++it) {
    std::vector<double> t(1 + rng.below(30)), p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = rng.uniform(0.01, 5);
      p[i] = rng.uniform(0, 5);
    }
    const double base = mape(t, p).percent;
    REQUIRE(base >= 0.0);
    const double k = rng.uniform(0.1, 10);
    std::vector<double> tk = t, pk = p;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tk[i] *= k;
      pk[i] *= k;
    }
    REQUIRE(mape(tk, pk).percent == doctest::Approx(base).epsilon(1e-10));
    const double c = rng.uniform(-0.9, 0.9);
    std::vector<double> pc = t;
    for (double& x : pc) x *= 1 + c;
    REQUIRE(mape(t, pc).percent == doctest::Approx(100 * std::fabs(c)).epsilon(1e-10));
  }
}

TEST_CASE("summary labels") {
  CHECK(summary_label(ModelKind::Transformer, 2) == "Transformer-2TI");
  CHECK(summary_label(ModelKind::Lstm, 6) == "LSTM-6TI");
  CHECK(summary_label(ModelKind::Rnn, 12) == "RNN-12TI");
}

TEST_CASE("summarize groups, orders and aggregates") {
  std::vector<ExperimentResult> rs;
  for (std::size_t n : {12, 2})
    for (ModelKind k : {ModelKind::Rnn, ModelKind::Transformer, ModelKind::Lstm})
      for (int rep = 0; rep < 3; ++rep)
        rs.push_back({k, n, "H" + std::to_string(rep), static_cast<std::uint64_t>(rep),
                      10.0 * (rep + 1) + static_cast<double>(n), 0.5 * (rep + 1)});
  const auto rows = summarize(rs);
  REQUIRE(rows.size() == 6);
  const std::vector<std::string> labels = {"Transformer-2TI", "LSTM-2TI", "RNN-2TI",
                                           "Transformer-12TI", "LSTM-12TI", "RNN-12TI"};
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].label == labels[i]);
    CHECK(rows[i].run_count == 3);
    CHECK(rows[i].total_train_seconds == doctest::Approx(3.0));
    total += rows[i].total_train_seconds;
  }
  CHECK(rows[0].mape_avg_percent == doctest::Approx(22.0));
  CHECK(rows[5].mape_avg_percent == doctest::Approx(32.0));
  double expect = 0.0;
  for (const auto& r : rs) expect += r.train_seconds;
  CHECK(total == doctest::Approx(expect));

  CHECK_THROWS_AS(summarize({}), EmptyInputError);
}

TEST_CASE("summary csv round-trips") {
  const std::vector<SummaryRow> rows = {{"Transformer-2TI", 12.345678901234567, 3600.5, 40},
                                        {"RNN-12TI", 1.0 / 3.0, 0.0, 40}};
  std::stringstream ss;
  write_summary_csv(ss, rows);
  CHECK(ss.str().rfind("label,mape_avg_percent,total_train_seconds,run_count\n", 0) == 0);
  const auto back = read_summary_csv(ss);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].label == rows[i].label);
    CHECK(back[i].mape_avg_percent == rows[i].mape_avg_percent);
    CHECK(back[i].total_train_seconds == rows[i].total_train_seconds);
    CHECK(back[i].run_count == rows[i].run_count);
  }
  std::ostringstream table;
  print_summary_table(table, rows);
  CHECK(table.str().find("RNN-12TI") != std::string::npos);
}

TEST_CASE("trace csv has one row per timestamp and round-trips") {
  const auto t = day_trace();
  std::stringstream ss;
  write_trace_csv(ss, t);
  const std::string text = ss.str();
  CHECK(text.rfind("timestamp,Truth,Transformer-3TI,LSTM-3TI,RNN-3TI\n", 0) == 0);
  CHECK(count_of(text, "\n") == 49);
  CHECK(text.find("2013-01-01T00:00:00Z") != std::string::npos);

  const auto back = read_trace_csv(ss, t.house_id);
  CHECK(back.timestamps == t.timestamps);
  REQUIRE(back.forecasts.size() == 3);
  for (std::size_t i = 0; i < 48; ++i) {
    CHECK(std::fabs(back.truth_kwh[i] - t.truth_kwh[i]) <= 1e-9);
    for (std::size_t s = 0; s < 3; ++s)
      CHECK(std::fabs(back.forecasts[s].values[i] - t.forecasts[s].values[i]) <= 1e-9);
  }
  CHECK(back.forecasts[1].name == "LSTM-3TI");
}

TEST_CASE("trace svg draws every series") {
  const auto t = day_trace();
  std::ostringstream ss;
  write_trace_svg(ss, t);
  const std::string svg = ss.str();
  CHECK((svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0));
  CHECK(count_of(svg, "<polyline") == 4);
  CHECK(svg.find("Truth") != std::string::npos);
  CHECK(svg.find("RNN-3TI") != std::string::npos);
  CHECK(svg.find("kWh") != std::string::npos);
  CHECK(svg.find("MAC000002") != std::string::npos);
}

TEST_CASE("misaligned traces are rejected") {
  auto t = day_trace();
  t.forecasts[2].values.pop_back();
  CHECK_THROWS_AS(t.validate(), DimensionError);
  std::ostringstream ss;
  CHECK_THROWS_AS(write_trace_csv(ss, t), DimensionError);
  CHECK_THROWS_AS(write_trace_svg(ss, t), DimensionError);
}
