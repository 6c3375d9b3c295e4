#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace loadfc::data {

// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

inline constexpr Timestamp kHalfHour = 1800;

// Accepts "YYYY-MM-DD HH:MM:SS[.fraction]" (the Kaggle export) and ISO-8601
// "YYYY-MM-DDTHH:MM:SS[.fraction][Z]". Throws FormatError.
Timestamp parse_timestamp(std::string_view text);
// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);
// Midnight UTC of a "YYYY-MM-DD" date.
Timestamp parse_date(std::string_view text);

struct MeterReading {
  Timestamp timestamp = 0;
  double kwh = 0.0;
};

// One household's readings, strictly increasing in time.
struct MeterSeries {
  std::string household_id;
  std::vector<MeterReading> readings;

  std::size_t size() const { return readings.size(); }
  std::vector<double> values() const;
};

struct IngestReport {
  std::size_t rows = 0;             // data rows seen
  std::size_t dropped_count = 0;    // unparseable, negative, or off-grid rows
  std::size_t duplicate_count = 0;  // (household, timestamp) repeats; later wins
};

struct IngestResult {
  std::vector<MeterSeries> series;  // ordered by household id
  IngestReport report;
};

// Reads `LCLid,tstp,energy(kWh/hh)` CSV (column order free, extra columns
// ignored). The LCL full-export header `LCLid,...,DateTime,KWH/hh (per half
// hour)` is accepted as an alias. Energy fields that do not parse (the dataset
// has literal "Null") are dropped and counted.
//
// Throws SchemaError naming a missing column and EmptyInputError when the
// stream has no header or no valid rows.
IngestResult parse_readings(std::istream& in);

// Merges several sources (e.g. Kaggle block files); duplicate policy as above
// with later sources winning.
IngestResult parse_reading_files(const std::vector<std::filesystem::path>& files);

// Cleaned-series cache: `timestamp,kwh` with ISO-8601 timestamps.
void write_series_csv(std::ostream& out, const MeterSeries& series);
MeterSeries read_series_csv(std::istream& in, std::string household_id);

// <dir>/<household_id>.csv
std::filesystem::path series_cache_path(const std::filesystem::path& dir,
                                        std::string_view household_id);
MeterSeries load_cached_series(const std::filesystem::path& dir,
                               std::string_view household_id);

// First `max_readings` readings (the whole series when 0 or larger).
MeterSeries truncate(const MeterSeries& series, std::size_t max_readings);

}  // namespace loadfc::data
