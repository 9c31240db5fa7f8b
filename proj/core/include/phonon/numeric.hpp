#pragma once

namespace phonon {

// Wraps an angle into [0, 2 pi).
double wrap_phase(double phi);

}  // namespace phonon
