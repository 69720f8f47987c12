#include "qnvb/io/libsvm.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "qnvb/errors.hpp"
#include "qnvb/io/numfmt.hpp"

namespace qnvb::io {

namespace {

struct Entry {
  Index column;  // 1-based
  double value;
};

struct Row {
  double label;
  std::vector<Entry> entries;
};

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ValidationError("libsvm line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

Dataset parse_libsvm(std::string_view text, Index covariate_limit) {
  if (covariate_limit < 1) throw ValidationError("covariate limit must be at least 1");

  std::vector<Row> rows;
  Index max_column = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    const std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;

    const auto toks = tokens(line);
    if (toks.empty()) continue;

    Row row;
    const auto label = parse_double(toks[0]);
    if (!label) fail(line_no, "unparseable label '" + std::string(toks[0]) + "'");
    if (*label == 1.0) {
      row.label = 1.0;
    } else if (*label == -1.0 || *label == 0.0) {
      row.label = 0.0;
    } else {
      fail(line_no, "label '" + std::string(toks[0]) + "' is not binary");
    }

    Index previous = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto colon = toks[k].find(':');
      if (colon == std::string_view::npos) {
        fail(line_no, "malformed pair '" + std::string(toks[k]) + "'");
      }
      const auto index = parse_int<Index>(toks[k].substr(0, colon));
      const auto value = parse_double(toks[k].substr(colon + 1));
      if (!index || !value || *index < 1) {
        fail(line_no, "malformed pair '" + std::string(toks[k]) + "'");
      }
      if (*index <= previous) fail(line_no, "indices are not strictly increasing");
      previous = *index;
      if (!std::isfinite(*value)) fail(line_no, "non-finite feature value");
      if (*index <= covariate_limit) {
        row.entries.push_back({*index, *value});
        max_column = std::max(max_column, *index);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("libsvm input contains no observations");

  Dataset data;
  data.has_intercept = true;
  data.features = Matrix::Zero(static_cast<Index>(rows.size()), max_column + 1);
  data.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Index>(i);
    data.features(r, 0) = 1.0;
    data.labels[r] = rows[i].label;
    for (const auto& e : rows[i].entries) data.features(r, e.column) = e.value;
  }
  return data;
}

Dataset read_libsvm_file(const std::string& path, Index covariate_limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm(buf.str(), covariate_limit);
}

std::string write_libsvm(const Dataset& data) {
  std::string out;
  const Index first = data.has_intercept ? 1 : 0;
  for (Index i = 0; i < data.n_obs(); ++i) {
    out += data.labels[i] == 1.0 ? "+1" : "-1";
    for (Index j = first; j < data.dim(); ++j) {
      const double v = data.features(i, j);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(j - first + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qnvb::io
