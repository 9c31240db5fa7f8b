#include "phonon/numeric.hpp"

#include <cmath>

#include "phonon/model.hpp"

namespace phonon {

double wrap_phase(double phi) {
  double v = std::fmod(phi, 2.0 * kPi);
  if (v < 0.0) v += 2.0 * kPi;
  return v >= 2.0 * kPi ? 0.0 : v;
}

}  // namespace phonon
