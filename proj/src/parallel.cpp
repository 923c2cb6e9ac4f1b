#include "fedspectra/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fedspectra {

int configured_threads() {
    const char* env = std::getenv("FEDSPECTRA_THREADS");
    if (env == nullptr || *env == '\0') return available_threads();
    try {
        const int n = std::stoi(env);
        return n <= 0 ? available_threads() : n;
    } catch (const std::exception&) {
        return available_threads();
    }
}

}  // namespace fedspectra
