// csv.hpp — byte-stable CSV output (shortest round-trip decimals).

#pragma once

#include <string>
#include <vector>

namespace nshops::csv {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void header(const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void raw_line(const std::string& line);

private:
    struct Impl;
    Impl* impl_;
};

// Minimal reader used by tests and the tabulated-coefficient loader.
std::vector<std::vector<double>> read_numeric(const std::string& path, bool skip_header);

} // namespace nshops::csv
