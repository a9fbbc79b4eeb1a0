#pragma once

namespace beats::metrics {

/// First-order RC low-pass corner: 1 / (2 pi R C). Throws InvalidArgument unless r, c > 0.
double rc_cutoff(double r_ohms, double c_farads);

}  // namespace beats::metrics
