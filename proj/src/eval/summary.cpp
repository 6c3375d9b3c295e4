#include "loadfc/eval/summary.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::eval {

namespace {

int model_rank(models::ModelKind k) {
  switch (k) {
    case models::ModelKind::Transformer: return 0;
    case models::ModelKind::Lstm: return 1;
    case models::ModelKind::Rnn: return 2;
  }
  return 3;
}

constexpr const char* kHeader = "label,mape_avg_percent,total_train_seconds,run_count";

}  // namespace

std::string summary_label(models::ModelKind kind, std::size_t n) {
  return std::string(models::model_label(kind)) + "-" + std::to_string(n) + "TI";
}

std::vector<SummaryRow> summarize(const std::vector<training::ExperimentResult>& results) {
  if (results.empty()) throw EmptyInputError("empty input: no results to summarize");
  struct Acc {
    models::ModelKind kind;
    double mape_sum = 0.0;
    double seconds = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<std::size_t, int>, Acc> groups;
  for (const auto& r : results) {
    auto [it, fresh] = groups.try_emplace({r.n, model_rank(r.model)}, Acc{r.model});
    it->second.mape_sum += r.test_mape_percent;
    it->second.seconds += r.train_seconds;
    ++it->second.count;
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : groups)
    rows.push_back(SummaryRow{summary_label(acc.kind, key.first),
                              acc.mape_sum / static_cast<double>(acc.count),
                              acc.seconds, acc.count});
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kHeader << '\n';
  for (const auto& r : rows)
    out << r.label << ',' << text::format_double(r.mape_avg_percent) << ','
        << text::format_double(r.total_train_seconds) << ',' << r.run_count << '\n';
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty())
    throw EmptyInputError("empty input: summary file has no header");
  if (text::trim(line) != kHeader)
    throw SchemaError(std::string("summary header must be '") + kHeader + "'");
  std::vector<SummaryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto c = text::split(line, ',');
    if (c.size() != 4)
      throw FormatError("summary line " + std::to_string(lineno) + " needs 4 fields");
    rows.push_back(SummaryRow{std::string(text::trim(c[0])),
                              text::parse_double(c[1], "mape_avg_percent"),
                              text::parse_double(c[2], "total_train_seconds"),
                              text::parse_u64(c[3], "run_count")});
  }
  return rows;
}

void print_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-18s %14s %22s %6s\n", "Model", "MAPE Avg. [%]",
                "Total Train. Time [s]", "Runs");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %14.2f %22.3f %6zu\n", r.label.c_str(),
                  r.mape_avg_percent, r.total_train_seconds, r.run_count);
    out << buf;
  }
}

}  // namespace loadfc::eval
