#include "loadfc/data/meter.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::data {

namespace {

using namespace std::chrono;

struct Fields {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  bool fractional = false;  // non-zero sub-second part
};

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return -1;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return -1;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

Fields parse_fields(std::string_view s, bool date_only) {
  s = text::trim(s);
  auto fail = [&]() -> FormatError {
    return FormatError("invalid timestamp '" + std::string(s) + "'");
  };
  Fields f;
  f.year = digits(s, 0, 4);
  f.month = digits(s, 5, 2);
  f.day = digits(s, 8, 2);
  if (f.year < 0 || f.month < 0 || f.day < 0 || s[4] != '-' || s[7] != '-')
    throw fail();
  if (date_only) {
    if (s.size() != 10) throw fail();
    return f;
  }
  if (s.size() < 16 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':')
    throw fail();
  f.hour = digits(s, 11, 2);
  f.minute = digits(s, 14, 2);
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    f.second = digits(s, 17, 2);
    pos = 19;
  }
  if (f.hour < 0 || f.hour > 23 || f.minute < 0 || f.minute > 59 ||
      f.second < 0 || f.second > 60)
    throw fail();
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (s[pos] != '0') f.fractional = true;
      ++pos;
    }
    if (pos == start) throw fail();
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  if (pos != s.size()) throw fail();
  return f;
}

Timestamp to_seconds(const Fields& f) {
  const year_month_day ymd{year{f.year}, month{static_cast<unsigned>(f.month)},
                           day{static_cast<unsigned>(f.day)}};
  if (!ymd.ok()) throw FormatError("invalid calendar date");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + f.hour * 3600 + f.minute * 60 +
         f.second;
}

struct ColumnSpec {
  const char* canonical;
  std::initializer_list<const char*> aliases;
};

const ColumnSpec kHousehold{"LCLid", {"LCLid"}};
const ColumnSpec kTimestamp{"tstp", {"tstp", "DateTime"}};
const ColumnSpec kEnergy{"energy(kWh/hh)",
                         {"energy(kWh/hh)", "KWH/hh (per half hour)"}};

std::size_t find_column(const std::vector<std::string_view>& header,
                        const ColumnSpec& spec) {
  for (std::size_t i = 0; i < header.size(); ++i)
    for (const char* alias : spec.aliases)
      if (text::trim(header[i]) == alias) return i;
  throw SchemaError("missing required column '" + std::string(spec.canonical) +
                    "'");
}

class Accumulator {
 public:
  void consume(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line).empty())
      throw EmptyInputError("empty input: no header row");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = text::split(line, ',');
    const std::size_t id_col = find_column(header, kHousehold);
    const std::size_t ts_col = find_column(header, kTimestamp);
    const std::size_t kwh_col = find_column(header, kEnergy);
    const std::size_t needed = std::max({id_col, ts_col, kwh_col}) + 1;

    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      ++report_.rows;
      const auto cells = text::split(line, ',');
      if (cells.size() < needed) {
        ++report_.dropped_count;
        continue;
      }
      const auto id = text::trim(cells[id_col]);
      double kwh = 0.0;
      Timestamp ts = 0;
      try {
        kwh = text::parse_double(cells[kwh_col], "energy");
        const Fields f = parse_fields(cells[ts_col], false);
        if (f.fractional || f.second != 0 || f.minute % 30 != 0)
          throw FormatError("off-grid timestamp");
        ts = to_seconds(f);
      } catch (const FormatError&) {
        ++report_.dropped_count;
        continue;
      }
      if (id.empty() || !std::isfinite(kwh) || kwh < 0.0) {
        ++report_.dropped_count;
        continue;
      }
      auto& house = houses_[std::string(id)];
      auto [it, inserted] = house.insert_or_assign(ts, kwh);
      if (!inserted) ++report_.duplicate_count;
    }
  }

  IngestResult finish() {
    IngestResult result;
    result.report = report_;
    for (auto& [id, readings] : houses_) {
      MeterSeries s{id, {}};
      s.readings.reserve(readings.size());
      for (const auto& [ts, kwh] : readings) s.readings.push_back({ts, kwh});
      result.series.push_back(std::move(s));
    }
    if (result.series.empty())
      throw EmptyInputError("empty input: no valid readings (" +
                            std::to_string(report_.dropped_count) +
                            " rows dropped)");
    return result;
  }

 private:
  std::map<std::string, std::map<Timestamp, double>> houses_;
  IngestReport report_;
};

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  return to_seconds(parse_fields(text, false));
}

Timestamp parse_date(std::string_view text) {
  return to_seconds(parse_fields(text, true));
}

std::string format_timestamp(Timestamp t) {
  const auto days = static_cast<int>(std::floor(static_cast<double>(t) / 86400.0));
  const Timestamp secs = t - static_cast<Timestamp>(days) * 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                static_cast<int>(secs % 3600 / 60), static_cast<int>(secs % 60));
  return buf;
}

std::vector<double> MeterSeries::values() const {
  std::vector<double> v;
  v.reserve(readings.size());
  for (const auto& r : readings) v.push_back(r.kwh);
  return v;
}

IngestResult parse_readings(std::istream& in) {
  Accumulator acc;
  acc.consume(in);
  return acc.finish();
}

IngestResult parse_reading_files(
    const std::vector<std::filesystem::path>& files) {
  Accumulator acc;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError("cannot open " + f.string());
    acc.consume(in);
  }
  return acc.finish();
}

void write_series_csv(std::ostream& out, const MeterSeries& series) {
  out << "timestamp,kwh\n";
  for (const auto& r : series.readings)
    out << format_timestamp(r.timestamp) << ',' << text::format_double(r.kwh)
        << '\n';
}

MeterSeries read_series_csv(std::istream& in, std::string household_id) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty())
    throw EmptyInputError("empty input: series file has no header");
  if (text::trim(line) != "timestamp,kwh")
    throw SchemaError("series file header must be 'timestamp,kwh'");
  MeterSeries s{std::move(household_id), {}};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != 2)
      throw FormatError("series line " + std::to_string(lineno) +
                        " needs 2 fields");
    const Timestamp ts = parse_timestamp(cells[0]);
    const double kwh = text::parse_double(cells[1], "kwh");
    if (!s.readings.empty() && ts <= s.readings.back().timestamp)
      throw DataError("series timestamps must strictly increase (line " +
                      std::to_string(lineno) + ")");
    s.readings.push_back({ts, kwh});
  }
  if (s.readings.empty()) throw EmptyInputError("empty input: series has no readings");
  return s;
}

std::filesystem::path series_cache_path(const std::filesystem::path& dir,
                                        std::string_view household_id) {
  return dir / (std::string(household_id) + ".csv");
}

MeterSeries load_cached_series(const std::filesystem::path& dir,
                               std::string_view household_id) {
  const auto path = series_cache_path(dir, household_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("no cached series for " + std::string(household_id) +
                         " at " + path.string());
  return read_series_csv(in, std::string(household_id));
}

MeterSeries truncate(const MeterSeries& series, std::size_t max_readings) {
  MeterSeries out = series;
  if (max_readings > 0 && out.readings.size() > max_readings)
    out.readings.resize(max_readings);
  return out;
}

}  // namespace loadfc::data
