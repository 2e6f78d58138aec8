#include "spdelab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace spde {

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("SPDE_LAB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) return cap;
        } catch (...) {
        }
    }
    return hw;
}

}  // namespace spde
