#pragma once

#include "srdcc/core.hpp"
#include "srdcc/harness/config.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace srdcc::harness {

// One CSV file: a comment line carrying the command, the config hash and
// free-form metadata, then a header row, then data rows. Doubles are written
// in shortest round-trip form so files are lossless and byte-stable.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& command, const ExperimentConfig& cfg,
              const std::vector<std::pair<std::string, std::string>>& meta, const std::vector<std::string>& header)
        : path_(path), columns_(header.size()) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw Error("cannot write " + path.string());
        out_ << "# srd-chance " << command << " config_hash=" << config_hash(cfg);
        for (const auto& [k, v] : meta) out_ << ' ' << k << '=' << v;
        out_ << '\n';
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    class Row {
    public:
        explicit Row(CsvWriter& w) : w_(w) {}
        Row& operator<<(double v) { return cell(detail::format_double(v)); }
        Row& operator<<(int v) { return cell(std::to_string(v)); }
        Row& operator<<(Index v) { return cell(std::to_string(v)); }
        Row& operator<<(std::size_t v) { return cell(std::to_string(v)); }
        Row& operator<<(const std::string& v) { return cell(v); }
        Row& operator<<(const char* v) { return cell(v); }
        ~Row() noexcept(false) {
            if (n_ != w_.columns_) throw Error("row with " + std::to_string(n_) + " cells in " + w_.path_.string());
            w_.out_ << '\n';
        }

    private:
        Row& cell(const std::string& s) {
            w_.out_ << (n_++ ? "," : "") << s;
            return *this;
        }
        CsvWriter& w_;
        std::size_t n_ = 0;
    };

    Row row() { return Row(*this); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::size_t columns_;
    std::ofstream out_;
};

// Reads a CSV written by CsvWriter: skips comment lines, returns the header
// and the rows as strings.
struct CsvTable {
    std::string comment;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("no column " + name);
    }
    double number(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
    const std::string& text(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream is(s);
        while (std::getline(is, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) {
            if (t.comment.empty()) t.comment = line;
            continue;
        }
        if (t.header.empty()) t.header = split(line);
        else t.rows.push_back(split(line));
    }
    return t;
}

}  // namespace srdcc::harness
