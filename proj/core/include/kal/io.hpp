#ifndef KAL_IO_HPP
#define KAL_IO_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace kal {

/// CSV writer with a fixed column order and fixed-precision numeric format
/// (17 significant digits), so identical data reproduces identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

  CsvWriter& field(double value);
  CsvWriter& field(std::optional<double> value);  // absent -> empty cell
  CsvWriter& field(long long value);
  CsvWriter& field(std::size_t value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(const std::string& value);
  void end_row();

  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

/// %.17g rendering used for every floating-point cell.
std::string format_double(double value);

}  // namespace kal

#endif
