#include "rsspde/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace rsspde {

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string render(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    return needs_quoting(*s) ? quoted(*s) : *s;
  }
  if (const auto* x = std::get_if<double>(&c)) return format_g17(*x);
  return std::to_string(std::get<int64_t>(c));
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (header.empty()) throw std::runtime_error("CSV header must not be empty");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << (needs_quoting(header[i]) ? quoted(header[i]) : header[i]);
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!closed_ && out_.is_open()) out_.flush();
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (closed_) throw std::runtime_error("row() after close() on '" + path_ + "'");
  if (cells.size() != width_) {
    throw std::runtime_error("row width " + std::to_string(cells.size()) + " != header width " +
                             std::to_string(width_) + " in '" + path_ + "'");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << render(cells[i]);
  }
  out_ << '\n';
  ++rows_;
}

void CsvWriter::close() {
  if (closed_) return;
  out_.flush();
  if (!out_) throw std::runtime_error("write failure on '" + path_ + "'");
  out_.close();
  closed_ = true;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace rsspde
