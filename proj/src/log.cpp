#include "fedspectra/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>

namespace fedspectra {

namespace {

std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
std::set<std::string> g_seen;

}  // namespace

void log_warning(const std::string& message) {
    if (!g_enabled) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "warning: " << message << '\n';
}

void log_warning_once(const std::string& key, const std::string& message) {
    if (!g_enabled) return;
    std::lock_guard lock(g_mutex);
    if (!g_seen.insert(key).second) return;
    std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled = enabled; }

}  // namespace fedspectra
