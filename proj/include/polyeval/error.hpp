#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyeval {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Errc {
  // langid
  EmptyLabel,
  NoScriptEvidence,
  UnknownQueryCode,
  InvalidTag,
  TableFormat,
  // registry
  SchemaViolation,
  DuplicateId,
  MissingFile,
  RaggedParallelData,
  MalformedRow,
  PivotNotInBenchmark,
  NotATranslationBenchmark,
  UnknownBenchmark,
  // promptlib
  NoEnglishBaseline,
  MissingBinding,
  UnknownPlaceholder,
  TranslatorUnavailable,
  PlaceholderLost,
  TargetUnsupported,
  // inference
  Timeout,
  ProtocolError,
  ServerError,
  EmptyLabelSet,
  InvalidStride,
  ZeroWallTime,
  // metrics
  LengthMismatch,
  EmptyCorpus,
  EmptySubgroup,
  TagLengthMismatch,
  MalformedTag,
  TooFewOutputs,
  // orchestrator
  ConfigError,
  NoBenchmarkMatched,
  BackendUnavailable,
  OutputDirNotWritable,
};

std::string_view errc_name(Errc code) noexcept;

/// All failures raised by the library carry one of the codes above; the
/// message adds the offending value (file, field, label, status...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace polyeval
