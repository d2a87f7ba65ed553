#include "nshops/csv.hpp"

#include "nshops/exceptions.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nshops::csv {

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

struct Writer::Impl {
    std::ofstream out;
};

Writer::Writer(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->out) throw ConfigError("cannot open output file: " + path);
}

Writer::~Writer() { delete impl_; }

void Writer::header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << columns[i];
    }
    impl_->out << '\n';
}

void Writer::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << format_double(values[i]);
    }
    impl_->out << '\n';
}

void Writer::raw_line(const std::string& line) { impl_->out << line << '\n'; }

std::vector<std::vector<double>> read_numeric(const std::string& path, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && skip_header) {
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) throw ConfigError("non-numeric cell in " + path);
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace nshops::csv
