#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csiact {

enum class Errc {
  MalformedCsv,
  LabelMismatch,
  UnknownLabel,
  EmptyInput,
  BadFraction,
  TooFewRows,
  RowCountMismatch,
  RaggedRows,
  BadConfig,
  IoFailure,
  DegenerateData,
  WidthMismatch,
  NotBinary,
  LengthMismatch,
  EmptyMatrix,
  ProtocolMismatch,
  CorruptModel,
  VersionMismatch,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BadFraction: return "BadFraction";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::RowCountMismatch: return "RowCountMismatch";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::BadConfig: return "BadConfig";
    case Errc::IoFailure: return "IoFailure";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::NotBinary: return "NotBinary";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::ProtocolMismatch: return "ProtocolMismatch";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the Errc codes so
/// callers (CLI exit codes, HTTP status mapping, tests) can branch on kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace csiact
