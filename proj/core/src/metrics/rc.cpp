#include "beats/metrics/rc.hpp"

#include <numbers>

#include "beats/common/error.hpp"

namespace beats::metrics {

double rc_cutoff(double r_ohms, double c_farads) {
  if (!(r_ohms > 0.0) || !(c_farads > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rc_cutoff needs positive R and C");
  return 1.0 / (2.0 * std::numbers::pi * r_ohms * c_farads);
}

}  // namespace beats::metrics
