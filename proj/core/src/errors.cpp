#include "nlgrad/errors.hpp"

namespace nlgrad {

EvaluationError::EvaluationError(const std::string& what, long node)
    : std::runtime_error(node >= 0 ? what + " (node " + std::to_string(node) + ")" : what),
      node_(node) {}

}  // namespace nlgrad
