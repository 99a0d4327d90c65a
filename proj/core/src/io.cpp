#include "kal/io.hpp"

#include <cstdio>

#include "kal/errors.hpp"

namespace kal {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
  out_.open(path);
  if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(std::optional<double> value) {
  return field(value ? format_double(*value) : std::string());
}

CsvWriter& CsvWriter::field(long long value) { return field(std::to_string(value)); }

CsvWriter& CsvWriter::field(std::size_t value) { return field(std::to_string(value)); }

CsvWriter& CsvWriter::field(const std::string& value) {
  if (in_row_ >= columns_) throw IoError("csv '" + path_.string() + "': too many fields in row");
  if (in_row_) out_ << ',';
  out_ << value;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw IoError("csv '" + path_.string() + "': row has " + std::to_string(in_row_) +
                  " of " + std::to_string(columns_) + " fields");
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (!out_) throw IoError("write failed for '" + path_.string() + "'");
}

}  // namespace kal
