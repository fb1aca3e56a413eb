#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "relarb/errors.hpp"

namespace relarb::app {

/// Comma-separated output with LF line endings. The first line is a
/// comment recording the resolved configuration.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& configLine,
              const std::vector<std::string>& columns)
        : path_(path)
    {
        std::error_code ec;
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path(), ec);
        }
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) {
            throw IoError("cannot open '" + path.string() + "' for writing");
        }
        out_ << "# " << configLine << '\n';
        std::string head;
        for (const auto& c : columns) {
            head += (head.empty() ? "" : ",") + c;
        }
        out_ << head << '\n';
    }

    CsvWriter& cell(double v) { return raw(format_number(v)); }
    CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
    CsvWriter& cell(const std::string& v) { return raw(v); }
    CsvWriter& cell(const char* v) { return raw(v); }

    void end_row()
    {
        out_ << line_ << '\n';
        line_.clear();
        check();
    }

    void comment(const std::string& text)
    {
        out_ << "# " << text << '\n';
        check();
    }

    void close()
    {
        out_.close();
        if (out_.fail()) {
            throw IoError("failed writing '" + path_.string() + "'");
        }
    }

  private:
    CsvWriter& raw(const std::string& s)
    {
        if (!first_) {
            line_ += ',';
        }
        first_ = false;
        line_ += s;
        return *this;
    }

    void check()
    {
        first_ = true;
        if (!out_) {
            throw IoError("failed writing '" + path_.string() + "'");
        }
    }

    std::filesystem::path path_;
    std::ofstream out_;
    std::string line_;
    bool first_ = true;
};

}  // namespace relarb::app
