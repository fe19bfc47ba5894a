#include "adablur/errors.hpp"

namespace adablur::detail {

void throw_invalid(const std::string& what) { throw InvalidArgument(what); }

void throw_shape(const std::string& what) { throw ShapeError(what); }

}  // namespace adablur::detail
