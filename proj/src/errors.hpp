#pragma once

#include <stdexcept>
#include <string>

namespace must {

// Error kinds surfaced across the library. Config and Format map to the
// CLI exit code 2, everything else to 1.
enum class Errc {
  duplicate_pair,
  unknown_component,
  split_overlap,
  split_violation,
  shape,
  degenerate_vector,
  config,
  numerical,
  missing_embedding,
  format,
  compat,
  protocol,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::duplicate_pair: return "DuplicatePair";
    case Errc::unknown_component: return "UnknownComponent";
    case Errc::split_overlap: return "SplitOverlap";
    case Errc::split_violation: return "SplitViolation";
    case Errc::shape: return "ShapeError";
    case Errc::degenerate_vector: return "DegenerateVector";
    case Errc::config: return "ConfigError";
    case Errc::numerical: return "NumericalError";
    case Errc::missing_embedding: return "MissingEmbedding";
    case Errc::format: return "FormatError";
    case Errc::compat: return "CompatError";
    case Errc::protocol: return "ProtocolError";
  }
  return "Error";
}

class MustError : public std::runtime_error {
 public:
  MustError(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

  // Config and format problems are caller mistakes, not runtime failures.
  bool is_config() const { return code_ == Errc::config || code_ == Errc::format; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw MustError(code, what); }

}  // namespace must
