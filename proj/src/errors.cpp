#include "pottsmix/errors.hpp"

namespace pottsmix {

NumericalFailureError::NumericalFailureError(const std::string& what, int iteration)
    : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}

}  // namespace pottsmix
