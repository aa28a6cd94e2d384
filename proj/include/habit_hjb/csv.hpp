#ifndef HABIT_HJB_CSV_HPP
#define HABIT_HJB_CSV_HPP

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace habit_hjb {

/// CSV file whose first lines are `# key = value` comments holding the tool
/// version, the command and the full resolved configuration.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const RunConfig& cfg, const std::string& command,
              const std::vector<std::string>& columns)
        : path_(path), width_(columns.size())
    {
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        out_.open(path);
        if (!out_) {
            throw std::runtime_error("cannot write '" + path.string() + "'");
        }
        out_.precision(std::numeric_limits<double>::max_digits10);
        out_ << "# version = " << kVersion << '\n';
        out_ << "# command = " << command << '\n';
        for (const auto& [k, v] : config_entries(cfg)) {
            out_ << "# " << k << " = " << v << '\n';
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out_ << (i ? "," : "") << columns[i];
        }
        out_ << '\n';
    }

    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

    void row(const std::vector<double>& values)
    {
        if (values.size() != width_) {
            throw std::logic_error("CsvWriter: row width does not match the column count");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            out_ << (i ? "," : "") << values[i];
        }
        out_ << '\n';
    }

    void text_row(const std::vector<std::string>& cells)
    {
        if (cells.size() != width_) {
            throw std::logic_error("CsvWriter: row width does not match the column count");
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << cells[i];
        }
        out_ << '\n';
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::size_t width_;
    std::ofstream out_;
};

} // namespace habit_hjb

#endif // HABIT_HJB_CSV_HPP
