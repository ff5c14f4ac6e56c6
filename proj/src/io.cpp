#include "hyperstab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hyperstab/errors.hpp"

namespace hyperstab {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::input, "CSV column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, to_csv(table)); }

namespace {

double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorKind::input,
            "cannot parse number '" + std::string(s) + "' in " + where);
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    CsvTable t;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::input, path + ": empty CSV");
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        require(cells.size() == t.header.size(), ErrorKind::input,
                path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(t.header.size()) + " columns");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, path + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::input, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
    out << content;
    require(out.good(), ErrorKind::io, "write to '" + path + "' failed");
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec && std::filesystem::is_directory(path), ErrorKind::io,
            "cannot create output directory '" + path + "'");
}

RealMatrix parse_matrix(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::input, std::string("matrix document: ") + e.what());
    }
    require(doc.is_object() && doc.contains("n") && doc.contains("entries"), ErrorKind::input,
            "matrix document needs fields 'n' and 'entries'");
    require(doc["n"].is_number_integer() && doc["n"].get<long>() >= 1, ErrorKind::input,
            "matrix field 'n' must be an integer >= 1");
    const auto n = doc["n"].get<std::size_t>();
    std::vector<double> entries;
    const auto& e = doc["entries"];
    require(e.is_array(), ErrorKind::input, "matrix field 'entries' must be an array");
    for (const auto& v : e) {
        if (v.is_array()) {
            for (const auto& w : v) {
                require(w.is_number(), ErrorKind::input, "matrix entries must be numbers");
                entries.push_back(w.get<double>());
            }
        } else {
            require(v.is_number(), ErrorKind::input, "matrix entries must be numbers");
            entries.push_back(v.get<double>());
        }
    }
    RealMatrix m(n, std::move(entries));
    validate(m);
    return m;
}

RealMatrix read_matrix(const std::string& path) { return parse_matrix(read_text(path)); }

std::string matrix_to_json(const RealMatrix& m) {
    nlohmann::json doc;
    doc["n"] = m.dim();
    doc["entries"] = m.entries();
    return doc.dump();
}

}  // namespace hyperstab
