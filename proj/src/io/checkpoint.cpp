#include "qnvb/io/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "qnvb/io/numfmt.hpp"

namespace qnvb::io {

namespace {

constexpr std::string_view kFormatTag = "qnvb-checkpoint-1";

template <class Range, class Fmt>
std::string join(const Range& values, Fmt fmt) {
  std::string out;
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ' ';
    out += fmt(v);
    first = false;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void fail(const std::string& msg) {
  throw ValidationError("checkpoint: " + msg);
}

class Document {
 public:
  explicit Document(std::string_view text) {
    while (!text.empty()) {
      const std::size_t eol = text.find('\n');
      if (eol == std::string_view::npos) fail("truncated (last line unterminated)");
      const std::string_view line = text.substr(0, eol);
      text.remove_prefix(eol + 1);
      if (line.empty()) continue;
      const std::size_t eq = line.find(" = ");
      if (eq == std::string_view::npos) fail("malformed line");
      entries_[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
    }
    if (get("end") != "ok") fail("truncated (missing end marker)");
  }

  const std::string& get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail("missing key '" + key + "'");
    return it->second;
  }

  std::vector<double> doubles(const std::string& key, std::size_t expected) const {
    std::vector<double> out;
    for (auto tok : split_ws(get(key))) {
      const auto v = parse_double(tok);
      if (!v) fail("bad number in '" + key + "'");
      out.push_back(*v);
    }
    if (out.size() != expected) fail("array '" + key + "' has the wrong length");
    return out;
  }

  template <class Int>
  Int integer(const std::string& key) const {
    const auto v = parse_int<Int>(get(key));
    if (!v) fail("bad integer in '" + key + "'");
    return *v;
  }

 private:
  std::map<std::string, std::string> entries_;
};

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string format_checkpoint(const OptimizerState& state, const Rng& rng,
                              const OptimizerConfig& config) {
  const Vector lambda = state.params.flatten();
  std::ostringstream rng_text;
  rng_text << rng;

  std::vector<double> lb, gn, kappa, alpha, wall;
  std::vector<Index> t_col, samples;
  for (const auto& r : state.trace) {
    t_col.push_back(r.t);
    lb.push_back(r.lower_bound);
    gn.push_back(r.grad_norm);
    kappa.push_back(r.condition_number.value_or(std::nan("")));
    samples.push_back(r.samples);
    alpha.push_back(r.alpha);
    wall.push_back(r.wall_time);
  }
  const auto d = [](double v) { return format_double(v); };
  const auto i = [](Index v) { return std::to_string(v); };

  std::string out;
  auto put = [&](std::string_view key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  put("format", std::string(kFormatTag));
  put("config_hash", std::to_string(config.trajectory_hash()));
  put("layout", state.params.layout_tag());
  put("t", i(state.t));
  put("lambda_size", i(lambda.size()));
  put("lambda", join(std::vector<double>(lambda.begin(), lambda.end()), d));
  put("momentum", join(std::vector<double>(state.momentum.begin(), state.momentum.end()), d));
  put("rng", rng_text.str());
  put("best_smoothed", d(state.best_smoothed));
  put("stale_checks", i(state.stale_checks));
  put("trace_size", i(static_cast<Index>(state.trace.size())));
  put("trace.t", join(t_col, i));
  put("trace.lower_bound", join(lb, d));
  put("trace.grad_norm", join(gn, d));
  put("trace.kappa", join(kappa, d));
  put("trace.samples", join(samples, i));
  put("trace.alpha", join(alpha, d));
  put("trace.wall_time", join(wall, d));
  put("end", "ok");
  return out;
}

Checkpoint parse_checkpoint(std::string_view text, const VariationalFamily& shape,
                            const OptimizerConfig& config) {
  const Document doc(text);
  if (doc.get("format") != kFormatTag) fail("unknown format tag");
  if (doc.get("layout") != shape.layout_tag()) {
    fail("family layout '" + doc.get("layout") + "' does not match '" +
         shape.layout_tag() + "'");
  }
  if (doc.integer<std::uint64_t>("config_hash") != config.trajectory_hash()) {
    fail("configuration hash mismatch");
  }

  const auto n = static_cast<std::size_t>(shape.num_params());
  if (doc.integer<std::size_t>("lambda_size") != n) fail("lambda size mismatch");
  const Vector lambda = to_vector(doc.doubles("lambda", n));
  const Vector momentum = to_vector(doc.doubles("momentum", n));

  OptimizerState state{doc.integer<Index>("t"), shape.with_parameters(lambda), momentum, {}};
  state.best_smoothed = doc.doubles("best_smoothed", 1)[0];
  state.stale_checks = doc.integer<Index>("stale_checks");

  const auto count = doc.integer<std::size_t>("trace_size");
  const auto t_col = doc.doubles("trace.t", count);
  const auto lb = doc.doubles("trace.lower_bound", count);
  const auto gn = doc.doubles("trace.grad_norm", count);
  const auto kappa = doc.doubles("trace.kappa", count);
  const auto samples = doc.doubles("trace.samples", count);
  const auto alpha = doc.doubles("trace.alpha", count);
  const auto wall = doc.doubles("trace.wall_time", count);
  for (std::size_t k = 0; k < count; ++k) {
    TraceRecord r;
    r.t = static_cast<Index>(t_col[k]);
    r.lower_bound = lb[k];
    r.grad_norm = gn[k];
    if (!std::isnan(kappa[k])) r.condition_number = kappa[k];
    r.samples = static_cast<Index>(samples[k]);
    r.alpha = alpha[k];
    r.wall_time = wall[k];
    state.trace.push_back(r);
  }

  Checkpoint cp{std::move(state), Rng()};
  std::istringstream rng_text(doc.get("rng"));
  rng_text >> cp.rng;
  if (!rng_text) fail("unreadable generator state");
  return cp;
}

void checkpoint_save(const std::string& path, const OptimizerState& state, const Rng& rng,
                     const OptimizerConfig& config) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    out << format_checkpoint(state, rng, config);
    if (!out.flush()) throw IoError("failed writing checkpoint '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint checkpoint_load(const std::string& path, const VariationalFamily& shape,
                           const OptimizerConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), shape, config);
}

}  // namespace qnvb::io
