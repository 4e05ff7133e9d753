#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cfb/errors.hpp"

namespace cfb {

/// Embedding vector. Stored as 32-bit floats; all score arithmetic runs in
/// double precision.
using Feature = std::vector<float>;

/// Squared Euclidean norm, accumulated in double.
double squared_norm(std::span<const float> v);

/// Throws ValidationError unless `f` has length `dim`, every component is
/// finite and the norm is strictly positive. `what` names the offending
/// vector in the message.
void validate_feature(std::span<const float> f, std::size_t dim, std::string_view what = "feature");

}  // namespace cfb
