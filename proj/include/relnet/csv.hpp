#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace relnet {

/// Doubles are printed with 12 significant digits so repeated runs diff
/// byte-for-byte.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

using CsvValue = std::variant<std::string, long long, double>;

class CsvWriter {
 public:
  explicit CsvWriter(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open CSV file " + path_.string());
  }

  void header(std::initializer_list<std::string> columns) {
    write_row(std::vector<std::string>(columns));
    n_columns_ = columns.size();
  }

  void row(std::initializer_list<CsvValue> values) {
    if (n_columns_ != 0 && values.size() != n_columns_)
      throw std::runtime_error("CSV row width mismatch in " + path_.string());
    std::vector<std::string> fields;
    fields.reserve(values.size());
    for (const auto& v : values) {
      if (std::holds_alternative<std::string>(v))
        fields.push_back(std::get<std::string>(v));
      else if (std::holds_alternative<long long>(v))
        fields.push_back(std::to_string(std::get<long long>(v)));
      else
        fields.push_back(format_double(std::get<double>(v)));
    }
    write_row(fields);
    ++n_rows_;
  }

  std::size_t rows_written() const { return n_rows_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_columns_ = 0;
  std::size_t n_rows_ = 0;
};

}  // namespace relnet
