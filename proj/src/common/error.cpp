#include "polyeval/error.hpp"

namespace polyeval {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::NoScriptEvidence: return "NoScriptEvidence";
    case Errc::UnknownQueryCode: return "UnknownQueryCode";
    case Errc::InvalidTag: return "InvalidTag";
    case Errc::TableFormat: return "TableFormat";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MissingFile: return "MissingFile";
    case Errc::RaggedParallelData: return "RaggedParallelData";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::PivotNotInBenchmark: return "PivotNotInBenchmark";
    case Errc::NotATranslationBenchmark: return "NotATranslationBenchmark";
    case Errc::UnknownBenchmark: return "UnknownBenchmark";
    case Errc::NoEnglishBaseline: return "NoEnglishBaseline";
    case Errc::MissingBinding: return "MissingBinding";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::TranslatorUnavailable: return "TranslatorUnavailable";
    case Errc::PlaceholderLost: return "PlaceholderLost";
    case Errc::TargetUnsupported: return "TargetUnsupported";
    case Errc::Timeout: return "Timeout";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ServerError: return "ServerError";
    case Errc::EmptyLabelSet: return "EmptyLabelSet";
    case Errc::InvalidStride: return "InvalidStride";
    case Errc::ZeroWallTime: return "ZeroWallTime";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::EmptySubgroup: return "EmptySubgroup";
    case Errc::TagLengthMismatch: return "TagLengthMismatch";
    case Errc::MalformedTag: return "MalformedTag";
    case Errc::TooFewOutputs: return "TooFewOutputs";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NoBenchmarkMatched: return "NoBenchmarkMatched";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::OutputDirNotWritable: return "OutputDirNotWritable";
  }
  return "Unknown";
}

}  // namespace polyeval
