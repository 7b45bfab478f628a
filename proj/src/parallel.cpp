#include "polyext/parallel.hpp"

#include <cstdlib>
#include <string>

#include "polyext/errors.hpp"

namespace polyext::parallel {

int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("POLYEXT_THREADS"); env && *env) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw ValidationError(std::string("POLYEXT_THREADS must be a positive integer, got '") + env + "'");
        return int(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) {
    return splitmix64(splitmix64(seed) ^ replica);
}

}  // namespace polyext::parallel
