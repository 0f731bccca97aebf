#include "qbl/integrate.hpp"

namespace qbl {

const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::time_limit: return "time-limit";
    case TerminalReason::blow_up: return "blow-up";
    case TerminalReason::equilibrium_capture: return "equilibrium-capture";
    default: return "section-event-count";
  }
}

Orbit integrate(const ModelParams& p, PhasePoint start, double t_span,
                bool rotated, const IntegrateOptions& opt) {
  return flow(ModelField{p, rotated}, start, t_span, opt);
}

}  // namespace qbl
