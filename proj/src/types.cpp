#include "multimag/types.hpp"

#include <cmath>

namespace multimag {

Vector NodalVectorField::packed() const {
  Vector out(static_cast<Eigen::Index>(3 * values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out.segment<3>(static_cast<Eigen::Index>(3 * i)) = values[i];
  return out;
}

NodalVectorField NodalVectorField::unpack(const Vector& packed) {
  if (packed.size() % 3 != 0) throw std::invalid_argument("packed vector length is not a multiple of 3");
  NodalVectorField out(static_cast<std::size_t>(packed.size() / 3));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = packed.segment<3>(static_cast<Eigen::Index>(3 * i));
  return out;
}

NodalVectorField& NodalVectorField::operator+=(const NodalVectorField& other) {
  if (other.size() != size()) throw std::invalid_argument("nodal field size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

NodalVectorField& NodalVectorField::operator*=(double s) {
  for (auto& v : values) v *= s;
  return *this;
}

bool NodalVectorField::all_finite() const {
  for (const auto& v : values)
    if (!v.allFinite()) return false;
  return true;
}

NodalVectorField operator+(NodalVectorField a, const NodalVectorField& b) {
  a += b;
  return a;
}

NodalVectorField operator-(NodalVectorField a, const NodalVectorField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("nodal field size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

NodalVectorField operator*(double s, NodalVectorField a) {
  a *= s;
  return a;
}

}  // namespace multimag
