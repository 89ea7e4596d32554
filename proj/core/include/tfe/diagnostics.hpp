// Per-step scalar diagnostics and their CSV serialization.  The header and
// the %.17g number format are fixed so identical runs produce byte-identical
// files.
#pragma once

#include <fstream>
#include <string>

namespace tfe {

inline constexpr const char* kDiagnosticsHeader =
    "step,time,energy,enstrophy,mass,total_vorticity,div_l2,newton_iters,"
    "residual_norm";

struct DiagnosticsRecord {
  long step = 0;
  double time = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  double mass = 0.0;
  double total_vorticity = 0.0;
  double div_l2 = 0.0;
  int newton_iters = 0;
  double residual_norm = 0.0;
};

// One CSV row without the trailing newline; doubles use %.17g.
// Throws std::runtime_error if any entry is not finite.
std::string format_diagnostics_row(const DiagnosticsRecord& r);

class DiagnosticsWriter {
public:
  // Opens (truncating) and writes the header line.
  explicit DiagnosticsWriter(const std::string& path);
  void append(const DiagnosticsRecord& r);
  void flush();
  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::ofstream out_;
  long last_step_ = -1;
};

}  // namespace tfe
