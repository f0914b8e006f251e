#include "abcsim/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "abcsim/errors.hpp"

namespace abc {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header, const std::string& hash)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw IoError("cannot write " + path);
    if (!hash.empty()) out_ << "# manifest: " << hash << '\n';
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw IoError("csv: row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw IoError("csv: write failed");
    out_.close();
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw IoError("csv: missing column " + name);
}

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("# manifest: ", 0) == 0 && !have_header) {
            t.manifest_hash = line.substr(12);
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            t.header = split(line);
            have_header = true;
        } else {
            t.rows.push_back(split(line));
        }
    }
    if (!have_header) throw IoError("csv: no header in " + path);
    return t;
}

} // namespace abc
