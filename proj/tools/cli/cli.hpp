#pragma once

#include <iosfwd>

namespace softsensor::cli {

/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 I/O error.
enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kIoError = 4 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace softsensor::cli
