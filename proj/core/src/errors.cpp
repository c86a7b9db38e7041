#include "hypertune/errors.hpp"

namespace hypertune {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ProbeFailure: return "ProbeFailure";
    case Errc::NonMonotonic: return "NonMonotonic";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::InvalidFactor: return "InvalidFactor";
    case Errc::MissingModel: return "MissingModel";
    case Errc::Infeasible: return "Infeasible";
    case Errc::GenerationMismatch: return "GenerationMismatch";
    case Errc::MissingReport: return "MissingReport";
    case Errc::InsufficientWindow: return "InsufficientWindow";
    case Errc::NoEvidence: return "NoEvidence";
    case Errc::ScenarioError: return "ScenarioError";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::WorkerLost: return "WorkerLost";
    case Errc::ConnectFailure: return "ConnectFailure";
    case Errc::Timeout: return "Timeout";
    case Errc::EmptyTrace: return "EmptyTrace";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace hypertune
