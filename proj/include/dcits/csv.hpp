#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace dcits {

// 17 significant digits, '.' decimal separator, locale independent.
std::string format_double(double value);

// RFC-4180 field quoting.
std::string csv_field(std::string_view text);

// Writes CRLF-terminated RFC-4180 rows.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    void comment(std::string_view line);
    void header(std::initializer_list<std::string_view> names);
    void row(const std::vector<std::string>& fields);
    void numbers(const std::vector<double>& values);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

// Splits one CSV record (quoted fields allowed, no embedded newlines).
std::vector<std::string> split_csv_record(std::string_view line);

// Writes a matrix (row-major rows x cols) with no header.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<double>& values, std::size_t rows,
                      std::size_t cols);

}  // namespace dcits
