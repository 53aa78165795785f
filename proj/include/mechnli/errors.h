#ifndef MECHNLI_ERRORS_H_
#define MECHNLI_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mechnli {

// Broad error classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInput,      // malformed or schema-violating input data
  kIo,         // file system failures
  kInvariant,  // internal invariant violated
  kService,    // bridge / external model failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define MECHNLI_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string &what) : Error(Kind, #Name ": " + what) {} \
  };

MECHNLI_DEFINE_ERROR(MalformedMarkers, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(InvalidConclusion, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(IoFailure, ErrorKind::kIo)
MECHNLI_DEFINE_ERROR(UntypedEntity, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(InvalidResource, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(EmptyCorpus, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(NoHypothesis, ErrorKind::kInvariant)
MECHNLI_DEFINE_ERROR(InvalidConfig, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(DegenerateReplacement, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(MissingEntities, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(SchemeMismatch, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(EmptyGroup, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(MissingPrediction, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(UnknownId, ErrorKind::kInput)
MECHNLI_DEFINE_ERROR(InvariantViolation, ErrorKind::kInvariant)
MECHNLI_DEFINE_ERROR(ModelUnavailable, ErrorKind::kService)
MECHNLI_DEFINE_ERROR(TokenizationMismatch, ErrorKind::kService)

#undef MECHNLI_DEFINE_ERROR

// A record-level schema problem; line is 1-based, 0 when not file-backed.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::size_t line, const std::string &reason)
      : Error(ErrorKind::kInput,
              "SchemaViolation at line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const { return line_; }
  const std::string &reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

}  // namespace mechnli

#endif  // MECHNLI_ERRORS_H_
