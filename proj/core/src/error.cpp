#include "duel/error.hpp"

namespace duel {

void throw_shape(const std::string& where, std::size_t expected, std::size_t got) {
    throw ShapeError(where + ": expected dimension " + std::to_string(expected) + ", got " +
                     std::to_string(got));
}

}  // namespace duel
