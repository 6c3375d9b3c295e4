#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadfc/models/forecaster.hpp"
#include "loadfc/training/experiment.hpp"

namespace loadfc::eval {

struct SummaryRow {
  std::string label;  // "<Model>-<n>TI"
  double mape_avg_percent = 0.0;
  double total_train_seconds = 0.0;
  std::size_t run_count = 0;
};

std::string summary_label(models::ModelKind kind, std::size_t n);

// Groups by (model, n): MAPE averaged, training time summed. Rows are ordered
// by n, then Transformer, LSTM, RNN. Throws EmptyInputError for no results.
std::vector<SummaryRow> summarize(const std::vector<training::ExperimentResult>& results);

// `label,mape_avg_percent,total_train_seconds,run_count`
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

// Fixed-width table for terminals.
void print_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace loadfc::eval
