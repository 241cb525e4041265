#include "opshape/response.hpp"

#include <sstream>

namespace opshape {

std::string ResponseCurve::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::Saturating: out << "u/(u+" << param_ << ")"; break;
    case Kind::Linear: out << param_ << "*u"; break;
    case Kind::Constant: out << param_; break;
  }
  return out.str();
}

}  // namespace opshape
