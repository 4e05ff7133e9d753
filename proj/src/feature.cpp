#include "cfb/feature.hpp"

#include <string>

namespace cfb {

double squared_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return acc;
}

void validate_feature(std::span<const float> f, std::size_t dim, std::string_view what) {
    if (f.size() != dim) {
        throw ValidationError(std::string(what) + " has dimension " + std::to_string(f.size()) +
                              ", expected " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) {
            throw ValidationError(std::string(what) + " component " + std::to_string(i) +
                                  " is not finite");
        }
    }
    if (squared_norm(f) <= 0.0) {
        throw ValidationError(std::string(what) + " has zero norm");
    }
}

}  // namespace cfb
