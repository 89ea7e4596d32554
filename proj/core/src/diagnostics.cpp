#include "tfe/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tfe {

namespace {

void append_double(std::string& row, double v, bool comma = true) {
  if (!std::isfinite(v))
    throw std::runtime_error("diagnostics entry is not finite");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  if (comma) row += ',';
  row += buf;
}

}  // namespace

std::string format_diagnostics_row(const DiagnosticsRecord& r) {
  std::string row = std::to_string(r.step);
  append_double(row, r.time);
  append_double(row, r.energy);
  append_double(row, r.enstrophy);
  append_double(row, r.mass);
  append_double(row, r.total_vorticity);
  append_double(row, r.div_l2);
  row += ',';
  row += std::to_string(r.newton_iters);
  append_double(row, r.residual_norm);
  return row;
}

DiagnosticsWriter::DiagnosticsWriter(const std::string& path)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_)
    throw std::runtime_error("cannot open diagnostics file '" + path + "'");
  out_ << kDiagnosticsHeader << '\n';
}

void DiagnosticsWriter::append(const DiagnosticsRecord& r) {
  if (r.step <= last_step_)
    throw std::runtime_error("diagnostics steps must be strictly increasing");
  last_step_ = r.step;
  out_ << format_diagnostics_row(r) << '\n';
  if (!out_)
    throw std::runtime_error("failed writing diagnostics to '" + path_ + "'");
}

void DiagnosticsWriter::flush() { out_.flush(); }

}  // namespace tfe
