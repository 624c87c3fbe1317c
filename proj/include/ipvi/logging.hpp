#pragma once

#include <string>

namespace ipvi {

/// Emit a warning line to stderr and bump the global warning counter.
void log_warning(const std::string& message);

/// Number of warnings emitted so far in this process (used by tests).
long warning_count();

}  // namespace ipvi
