#include "graphpoison/parallel.hpp"

#include <cstdlib>
#include <string>

namespace graphpoison {

std::size_t default_thread_count() {
    if (const char* env = std::getenv("GRAPHPOISON_THREADS")) {
        try {
            auto v = std::stoul(env);
            if (v > 0) return v;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace graphpoison
