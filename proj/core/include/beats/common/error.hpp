#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace beats {

enum class ErrorCode {
  // emulator
  UnknownOpcode,
  RegisterAccessInContinuousMode,
  ReadBeforeFirstConversion,
  ReadOnlyRegister,
  InvalidRegisterAddress,
  NotConverting,
  TestModeNotConfigured,
  UnsupportedMode,
  // acquisition engine
  IdCheckFailed,
  RegisterVerifyFailed,
  InvalidConfig,
  FifoOverflowWouldBlock,
  TransportError,
  // wire protocol
  PacketTooLarge,
  CorruptHeader,
  MalformedJson,
  // recorder
  BindFailed,
  ProtocolError,
  StorageFull,
  SegmentMissing,
  InvalidState,
  SessionFileCorrupt,
  // metrics
  DegenerateInput,
  SignalTooShort,
  ZeroCommonModeResponse,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a stable machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Decoder failures also carry the stream offset at which they were detected.
class StreamError : public Error {
 public:
  StreamError(ErrorCode code, const std::string& message, std::uint64_t offset)
      : Error(code, message + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace beats
