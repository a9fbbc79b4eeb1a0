#include "beats/common/error.hpp"

namespace beats {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownOpcode: return "UnknownOpcode";
    case ErrorCode::RegisterAccessInContinuousMode: return "RegisterAccessInContinuousMode";
    case ErrorCode::ReadBeforeFirstConversion: return "ReadBeforeFirstConversion";
    case ErrorCode::ReadOnlyRegister: return "ReadOnlyRegister";
    case ErrorCode::InvalidRegisterAddress: return "InvalidRegisterAddress";
    case ErrorCode::NotConverting: return "NotConverting";
    case ErrorCode::TestModeNotConfigured: return "TestModeNotConfigured";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::IdCheckFailed: return "IdCheckFailed";
    case ErrorCode::RegisterVerifyFailed: return "RegisterVerifyFailed";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::FifoOverflowWouldBlock: return "FifoOverflowWouldBlock";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::PacketTooLarge: return "PacketTooLarge";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::BindFailed: return "BindFailed";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::SegmentMissing: return "SegmentMissing";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::SessionFileCorrupt: return "SessionFileCorrupt";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::ZeroCommonModeResponse: return "ZeroCommonModeResponse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace beats
