#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qnvb/optimizer.hpp"

namespace qnvb::io {

inline constexpr std::string_view kTraceHeader =
    "t,lower_bound,smoothed_lb,grad_norm,kappa,M_t,alpha_t,wall_time_s";

struct TraceRow {
  TraceRecord record;
  double smoothed_lb = 0.0;
};

/// Header plus one row per record. A missing condition number is an empty
/// field.
std::string format_trace_csv(const std::vector<TraceRecord>& trace, Index window);
void write_trace_csv(const std::vector<TraceRecord>& trace, Index window,
                     const std::string& path);

std::vector<TraceRow> parse_trace_csv(std::string_view text);
std::vector<TraceRow> read_trace_csv(const std::string& path);

}  // namespace qnvb::io
