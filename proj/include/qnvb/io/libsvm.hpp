#pragma once

#include <string>
#include <string_view>

#include "qnvb/model.hpp"

namespace qnvb::io {

/// Parses LIBSVM text ("label idx:value ..." per line, 1-based strictly
/// increasing indices). Labels +1/-1 (or 1/0) become 1/0. Features past
/// `covariate_limit` are dropped, missing entries are zero, and an all-ones
/// intercept column is prepended. Errors carry the 1-based line number.
Dataset parse_libsvm(std::string_view text, Index covariate_limit = 100);

Dataset read_libsvm_file(const std::string& path, Index covariate_limit = 100);

/// Inverse of parse_libsvm: skips the intercept column and zero entries.
std::string write_libsvm(const Dataset& data);

}  // namespace qnvb::io
