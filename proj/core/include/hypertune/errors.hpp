#pragma once

#include <stdexcept>
#include <string>

namespace hypertune {

enum class Errc {
  ProbeFailure,
  NonMonotonic,
  OutOfRange,
  InvalidFactor,
  MissingModel,
  Infeasible,
  GenerationMismatch,
  MissingReport,
  InsufficientWindow,
  NoEvidence,
  ScenarioError,
  ProtocolError,
  WorkerLost,
  ConnectFailure,
  Timeout,
  EmptyTrace,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

}  // namespace hypertune
