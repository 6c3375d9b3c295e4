#include "loadfc/eval/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::eval {

void ForecastTrace::validate() const {
  const std::size_t n = timestamps.size();
  if (truth_kwh.size() != n)
    throw DimensionError("trace truth has " + std::to_string(truth_kwh.size()) +
                         " points for " + std::to_string(n) + " timestamps");
  for (const auto& s : forecasts)
    if (s.values.size() != n)
      throw DimensionError("trace series '" + s.name + "' has " +
                           std::to_string(s.values.size()) + " points for " +
                           std::to_string(n) + " timestamps");
}

void write_trace_csv(std::ostream& out, const ForecastTrace& trace) {
  trace.validate();
  out << "timestamp,Truth";
  for (const auto& s : trace.forecasts) out << ',' << s.name;
  out << '\n';
  for (std::size_t i = 0; i < trace.timestamps.size(); ++i) {
    out << data::format_timestamp(trace.timestamps[i]) << ','
        << text::format_double(trace.truth_kwh[i]);
    for (const auto& s : trace.forecasts) out << ',' << text::format_double(s.values[i]);
    out << '\n';
  }
}

ForecastTrace read_trace_csv(std::istream& in, const std::string& house_id) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty())
    throw EmptyInputError("empty input: trace file has no header");
  const auto head = text::split(text::trim(line), ',');
  if (head.size() < 2 || text::trim(head[0]) != "timestamp" ||
      text::trim(head[1]) != "Truth")
    throw SchemaError("trace header must start with 'timestamp,Truth'");
  ForecastTrace t;
  t.house_id = house_id;
  for (std::size_t c = 2; c < head.size(); ++c)
    t.forecasts.push_back(NamedSeries{std::string(text::trim(head[c])), {}});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != head.size())
      throw FormatError("trace line " + std::to_string(lineno) + " needs " +
                        std::to_string(head.size()) + " fields");
    t.timestamps.push_back(data::parse_timestamp(text::trim(f[0])));
    t.truth_kwh.push_back(text::parse_double(f[1], "Truth"));
    for (std::size_t c = 2; c < f.size(); ++c)
      t.forecasts[c - 2].values.push_back(text::parse_double(f[c], t.forecasts[c - 2].name));
  }
  return t;
}

namespace {

constexpr const char* kPalette[] = {"#222222", "#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_trace_svg(std::ostream& out, const ForecastTrace& trace) {
  trace.validate();
  const double width = 900, height = 420;
  const double left = 70, right = 170, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  std::vector<const std::vector<double>*> series{&trace.truth_kwh};
  std::vector<std::string> names{"Truth"};
  for (const auto& s : trace.forecasts) {
    series.push_back(&s.values);
    names.push_back(s.name);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* s : series)
    for (double v : *s)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(lo <= hi)) lo = 0, hi = 1;
  lo = std::min(lo, 0.0);
  if (hi - lo < 1e-12) hi = lo + 1;

  const std::size_t n = trace.timestamps.size();
  auto xpos = [&](std::size_t i) {
    return left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : pw / 2);
  };
  auto ypos = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">Forecasting energy for house "
      << escape(trace.house_id) << "</text>\n";

  // Axes and ticks.
  out << "<g stroke=\"#444\" fill=\"none\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
      << "\" y2=\"" << top + ph << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + ph << "\"/>\n</g>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    out << "<text x=\"" << left - 8 << "\" y=\"" << fmt(ypos(v) + 4)
        << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  if (n > 0) {
    const std::size_t step = std::max<std::size_t>(1, n / 4);
    for (std::size_t i = 0; i < n; i += step) {
      const auto stamp = data::format_timestamp(trace.timestamps[i]);
      out << "<text x=\"" << fmt(xpos(i)) << "\" y=\"" << top + ph + 18
          << "\" text-anchor=\"middle\">" << stamp.substr(5, 11) << "</text>\n";
    }
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\">timestamp (UTC)</text>\n"
      << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">kWh</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\""
        << (s == 0 ? "2" : "1.5") << "\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out << ' ';
      out << fmt(xpos(i)) << ',' << fmt(ypos((*series[s])[i]));
    }
    out << "\"><title>" << escape(names[s]) << "</title></polyline>\n";
  }

  out << "<g class=\"legend\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = top + 10 + 20.0 * static_cast<double>(s);
    const double x = left + pw + 20;
    out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24 << "\" y2=\"" << y
        << "\" stroke=\"" << kPalette[s % std::size(kPalette)] << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << x + 30 << "\" y=\"" << y + 4 << "\">" << escape(names[s])
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
}

void export_trace(const ForecastTrace& trace, TraceFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == TraceFormat::Csv)
    write_trace_csv(out, trace);
  else
    write_trace_svg(out, trace);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace loadfc::eval
