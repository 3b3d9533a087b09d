#include "fingersim/errors.hpp"

namespace fingersim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::InfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SingularConfiguration: return "SingularConfiguration";
    case ErrorKind::UnstableEquilibrium: return "UnstableEquilibrium";
    case ErrorKind::RankDeficientData: return "RankDeficientData";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

}  // namespace fingersim
