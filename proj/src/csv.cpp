#include "dcits/csv.hpp"

#include <charconv>
#include <cmath>

#include "dcits/error.hpp"

namespace dcits {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(text);
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
}

void CsvWriter::comment(std::string_view line) {
    out_ << '#' << ' ' << line << "\r\n";
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (std::string_view n : names) {
        out_ << (first ? "" : ",") << csv_field(n);
        first = false;
    }
    out_ << "\r\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        out_ << (i ? "," : "") << csv_field(fields[i]);
    }
    out_ << "\r\n";
    if (!out_) {
        throw IoError("write failed: " + path_.string());
    }
}

void CsvWriter::numbers(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        out_ << (i ? "," : "") << format_double(values[i]);
    }
    out_ << "\r\n";
    if (!out_) {
        throw IoError("write failed: " + path_.string());
    }
}

std::vector<std::string> split_csv_record(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
        line.remove_suffix(1);
    }
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<double>& values, std::size_t rows,
                      std::size_t cols) {
    CsvWriter w(path);
    for (std::size_t r = 0; r < rows; ++r) {
        w.numbers(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
    }
}

}  // namespace dcits
