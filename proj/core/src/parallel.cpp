#include "byzfed/parallel.hpp"

#include <cstdlib>
#include <string>

namespace byzfed {

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  if (const char* cap = std::getenv("BYZFED_THREADS"); cap != nullptr && *cap != '\0') {
    try {
      const unsigned long limit = std::stoul(cap);
      if (limit > 0 && limit < n) n = static_cast<unsigned>(limit);
    } catch (const std::exception&) {
      // unparsable cap is ignored
    }
  }
  return n;
}

}  // namespace byzfed
