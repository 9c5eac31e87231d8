#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace msfem {

/// Locale-independent shortest-safe formatting with 17 significant digits.
std::string format_double(double v);

/// Minimal CSV row writer. Values are written as given; doubles go through
/// format_double.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(std::initializer_list<std::string_view> names);
    void header(const std::vector<std::string>& names);

    CsvWriter& field(double v);
    CsvWriter& field(long long v);
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(std::string_view v);
    void end_row();

private:
    void sep();

    std::ostream& out_;
    bool row_started_ = false;
};

/// Parses a double written by format_double (or any plain decimal).
double parse_double(std::string_view text);

}  // namespace msfem
