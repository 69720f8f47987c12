#include "qnvb/io/trace_csv.hpp"

#include <fstream>
#include <sstream>

#include "qnvb/io/numfmt.hpp"

namespace qnvb::io {

std::string format_trace_csv(const std::vector<TraceRecord>& trace, Index window) {
  const Vector smoothed = smooth_lower_bound(trace, window);
  std::string out(kTraceHeader);
  out += '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    out += std::to_string(r.t);
    out += ',' + format_double(r.lower_bound);
    out += ',' + format_double(smoothed[static_cast<Index>(i)]);
    out += ',' + format_double(r.grad_norm);
    out += ',';
    if (r.condition_number) out += format_double(*r.condition_number);
    out += ',' + std::to_string(r.samples);
    out += ',' + format_double(r.alpha);
    out += ',' + format_double(r.wall_time);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::vector<TraceRecord>& trace, Index window,
                     const std::string& path) {
  const std::string text = format_trace_csv(trace, window);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open trace file '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing trace file '" + path + "'");
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  std::vector<TraceRow> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kTraceHeader) throw ValidationError("trace CSV has an unexpected header");
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    const auto bad = [&] {
      return ValidationError("trace CSV line " + std::to_string(line_no) + " is malformed");
    };
    if (f.size() != 8) throw bad();

    TraceRow row;
    const auto t = parse_int<Index>(f[0]);
    const auto lb = parse_double(f[1]);
    const auto sm = parse_double(f[2]);
    const auto gn = parse_double(f[3]);
    const auto m = parse_int<Index>(f[5]);
    const auto alpha = parse_double(f[6]);
    const auto wall = parse_double(f[7]);
    if (!t || !lb || !sm || !gn || !m || !alpha || !wall) throw bad();
    if (!f[4].empty()) {
      const auto kappa = parse_double(f[4]);
      if (!kappa) throw bad();
      row.record.condition_number = *kappa;
    }
    row.record.t = *t;
    row.record.lower_bound = *lb;
    row.record.grad_norm = *gn;
    row.record.samples = *m;
    row.record.alpha = *alpha;
    row.record.wall_time = *wall;
    row.smoothed_lb = *sm;
    rows.push_back(row);
  }
  if (line_no == 0) throw ValidationError("trace CSV is empty");
  return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str());
}

}  // namespace qnvb::io
