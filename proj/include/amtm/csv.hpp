#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace amtm {

/// Minimal CSV emitter. Doubles are written with %.17g so identical runs
/// produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(long v);
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
  void sep();
};

std::string format_double(double v);

}  // namespace amtm
