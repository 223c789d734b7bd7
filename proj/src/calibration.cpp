#include "crc/calibration.hpp"

#include <fstream>
#include <ostream>

#include "crc/format.hpp"

namespace crc {

void write_trace_csv(std::ostream& out, const RCTrace& trace) {
  out << "t,soft_err,err01\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << format_double(r.soft_err) << ',' << format_double(r.err01) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const RCTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_trace_csv(out, trace);
}

}  // namespace crc
