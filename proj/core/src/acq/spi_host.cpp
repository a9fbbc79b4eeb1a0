#include "beats/acq/spi_host.hpp"

#include <sstream>

#include "beats/common/error.hpp"
#include "beats/emu/registers.hpp"

namespace beats::acq {

void SpiHost::command(std::uint8_t opcode) {
  adc_.set_chip_select(true);
  adc_.transfer(opcode);
  adc_.set_chip_select(false);
}

void SpiHost::write_registers(std::uint8_t address, std::span<const std::uint8_t> values) {
  din_.assign({emu::opcode::wreg(address), static_cast<std::uint8_t>(values.size() - 1)});
  din_.insert(din_.end(), values.begin(), values.end());
  dout_.resize(din_.size());
  adc_.set_chip_select(true);
  adc_.transfer(din_, dout_);
  adc_.set_chip_select(false);
}

std::vector<std::uint8_t> SpiHost::read_registers(std::uint8_t address, std::size_t count) {
  din_.assign(2 + count * devices_, 0x00);
  din_[0] = emu::opcode::rreg(address);
  din_[1] = static_cast<std::uint8_t>(count - 1);
  dout_.resize(din_.size());
  adc_.set_chip_select(true);
  adc_.transfer(din_, dout_);
  adc_.set_chip_select(false);
  return {dout_.begin() + 2, dout_.end()};
}

void SpiHost::read_data(std::span<std::uint8_t> out) {
  adc_.set_chip_select(true);
  adc_.transfer(emu::opcode::kRdata);
  din_.assign(out.size(), 0x00);
  adc_.transfer(din_, out);
  adc_.set_chip_select(false);
}

namespace {

std::string hex(std::uint8_t b) {
  std::ostringstream o;
  o << "0x" << std::hex << std::uppercase << (b < 0x10 ? "0" : "") << int{b};
  return o.str();
}

// Returns an empty string when every device holds the program.
std::string verify(SpiHost& spi, const std::vector<RegisterWrite>& program) {
  for (const auto& w : program) {
    const auto back = spi.read_registers(emu::addr(w.first), w.values.size());
    for (std::size_t d = 0; d < spi.device_count(); ++d) {
      for (std::size_t i = 0; i < w.values.size(); ++i) {
        const std::uint8_t got = back[d * w.values.size() + i];
        if (got != w.values[i]) {
          return "device " + std::to_string(d + 1) + " register " +
                 hex(static_cast<std::uint8_t>(emu::addr(w.first) + i)) + " reads " + hex(got) +
                 ", expected " + hex(w.values[i]);
        }
      }
    }
  }
  return {};
}

}  // namespace

ConfigureResult configure(SpiHost& spi, const AcqConfig& config) {
  const auto program = register_program(config);
  ConfigureResult result;
  std::string mismatch;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    if (attempt > 1) spi.command(emu::opcode::kReset);
    spi.command(emu::opcode::kSdatac);

    result.ids = spi.read_registers(emu::addr(emu::Reg::Id), 1);
    for (std::size_t d = 0; d < result.ids.size(); ++d) {
      if ((result.ids[d] & 0x0F) != 0x0E) {
        throw Error(ErrorCode::IdCheckFailed, "device " + std::to_string(d + 1) + " ID reads " +
                                                  hex(result.ids[d]) + ", low nibble must be 0xE");
      }
    }

    for (const auto& w : program) spi.write_registers(emu::addr(w.first), w.values);
    mismatch = verify(spi, program);
    if (mismatch.empty()) {
      spi.command(emu::opcode::kStart);
      return result;
    }
  }
  throw Error(ErrorCode::RegisterVerifyFailed, "register read-back failed after RESET retry: " + mismatch);
}

}  // namespace beats::acq
