#pragma once

#include <string>

namespace fedspectra {

void log_warning(const std::string& message);
/// Emits the warning for `key` only the first time it is seen in this process.
void log_warning_once(const std::string& key, const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace fedspectra
