#include "ipvi/logging.hpp"

#include <atomic>
#include <iostream>

namespace ipvi {

namespace {
std::atomic<long> g_warnings{0};
}

void log_warning(const std::string& message) {
    g_warnings.fetch_add(1, std::memory_order_relaxed);
    std::cerr << "[warn] " << message << '\n';
}

long warning_count() { return g_warnings.load(std::memory_order_relaxed); }

}  // namespace ipvi
