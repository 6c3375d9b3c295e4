#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadfc/data/meter.hpp"

namespace loadfc::eval {

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

struct ForecastTrace {
  std::string house_id;
  std::vector<data::Timestamp> timestamps;
  std::vector<double> truth_kwh;
  std::vector<NamedSeries> forecasts;

  // Throws DimensionError when any series length differs from timestamps.
  void validate() const;
};

// Header `timestamp,Truth,<name>...`, one row per timestamp.
void write_trace_csv(std::ostream& out, const ForecastTrace& trace);
ForecastTrace read_trace_csv(std::istream& in, const std::string& house_id = {});

// Line chart: one polyline per series (Truth first), legend, labelled axes.
void write_trace_svg(std::ostream& out, const ForecastTrace& trace);

enum class TraceFormat { Csv, Svg };
void export_trace(const ForecastTrace& trace, TraceFormat format,
                  const std::filesystem::path& path);

}  // namespace loadfc::eval
