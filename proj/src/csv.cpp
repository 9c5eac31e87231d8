#include "msfem/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace msfem {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
    for (auto n : names) field(n);
    end_row();
}

void CsvWriter::header(const std::vector<std::string>& names) {
    for (const auto& n : names) field(std::string_view(n));
    end_row();
}

void CsvWriter::sep() {
    if (row_started_) out_ << ',';
    row_started_ = true;
}

CsvWriter& CsvWriter::field(double v) {
    sep();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::field(long long v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
    sep();
    out_ << v;
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    row_started_ = false;
}

}  // namespace msfem
