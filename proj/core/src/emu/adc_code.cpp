#include "beats/emu/adc_code.hpp"

#include <cmath>

namespace beats::emu {

EncodedSample encode_code(double voltage, double gain, double vref) noexcept {
  const double scaled = std::round(voltage * gain * static_cast<double>(kCodeMax) / vref);
  if (!(scaled <= static_cast<double>(kCodeMax))) {
    // NaN also lands here and is reported as overrange
    return {kCodeMax, true};
  }
  if (scaled < static_cast<double>(kCodeMin)) return {kCodeMin, true};
  return {static_cast<std::int32_t>(scaled), false};
}

}  // namespace beats::emu
