#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace rsspde {

// Shortest round-trip decimal form ("%.17g" trimmed by the printf g rules).
std::string format_g17(double x);

// One CSV field: text is RFC 4180-quoted when needed, numbers print bare.
using Cell = std::variant<std::string, double, int64_t>;

inline Cell cell(const char* s) { return Cell(std::string(s)); }
inline Cell cell(const std::string& s) { return Cell(s); }
inline Cell cell(double x) { return Cell(x); }
inline Cell cell(int x) { return Cell(static_cast<int64_t>(x)); }
inline Cell cell(int64_t x) { return Cell(x); }
inline Cell cell(uint32_t x) { return Cell(static_cast<int64_t>(x)); }
inline Cell cell(bool b) { return Cell(static_cast<int64_t>(b ? 1 : 0)); }

// Streaming CSV writer with a fixed header; throws std::runtime_error on IO
// failure or on a row whose width disagrees with the header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<Cell>& cells);
  // flushes and verifies stream health; call before relying on the file
  void close();

  const std::string& path() const { return path_; }
  int64_t rows_written() const { return rows_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t width_ = 0;
  int64_t rows_ = 0;
  bool closed_ = false;
};

// Whole-file helpers used for manifests and resolved configs.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rsspde
