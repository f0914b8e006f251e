#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace abc {

// Shortest decimal text that round-trips the double.
std::string format_double(double x);

// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// CSV writer: optional "# manifest: <hash>" first line, fixed header, LF endings.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header, const std::string& manifest_hash = "");
    void row(const std::vector<std::string>& cells);
    void close();

  private:
    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::string manifest_hash; // empty if the file had no manifest line
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

} // namespace abc
