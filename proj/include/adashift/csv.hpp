#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adashift {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// One CSV table: header plus string cells. Writing is atomic (temp file in
/// the target directory, then rename), so no partially-written output file
/// survives a failure.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells);
    std::string to_string() const;
    void write(const std::filesystem::path& path) const;

    std::size_t rows() const { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Flat key=value settings with '#' comments. Also accepts `key,value` CSV
/// lines (optionally starting with a `key,value` header), so a manifest can
/// be fed back as a config.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

}  // namespace adashift
