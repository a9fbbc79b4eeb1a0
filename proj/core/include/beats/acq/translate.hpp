#pragma once

#include <cstdint>

#include "beats/emu/adc_code.hpp"

namespace beats::acq {

/// Code to input-referred volts: code * vref / (gain * (2^23 - 1)).
inline double translate(std::int32_t code, double gain, double vref) noexcept {
  return static_cast<double>(code) * vref / (gain * static_cast<double>(emu::kCodeMax));
}

}  // namespace beats::acq
