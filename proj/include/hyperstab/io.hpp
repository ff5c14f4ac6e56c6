#pragma once

#include <string>
#include <vector>

#include "hyperstab/linalg.hpp"

namespace hyperstab {

// Shortest round-trip decimal with '.' separator, locale independent.
std::string format_number(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t column(const std::string& name) const;  // throws input error if absent
};

void write_csv(const std::string& path, const CsvTable& table);
std::string to_csv(const CsvTable& table);
CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

// Matrix document: {"n": 2, "entries": [row-major]}.
RealMatrix read_matrix(const std::string& path);
RealMatrix parse_matrix(const std::string& json_text);
std::string matrix_to_json(const RealMatrix& m);

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, x_label, y_label;
    bool log_y = false;
    std::vector<Series> series;
    // vertical guide lines (x positions) drawn dashed
    std::vector<double> guides;
};

// Self-contained SVG line plot.
std::string render_svg(const PlotSpec& spec);

}  // namespace hyperstab
