#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vtwin/errors.hpp"

namespace vtwin::csv {

struct Document {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

// One logical CSV record, honoring quoted fields (quotes may span lines).
// Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& out) {
    out.clear();
    int c = in.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    while (true) {
        if (c == EOF) {
            out.push_back(field);
            return true;
        }
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty()) {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            out.push_back(field);
            return true;
        } else if (ch == '\r') {
            // swallow, handle CRLF
        } else {
            field.push_back(ch);
        }
        c = in.get();
    }
}

} // namespace detail

inline std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_record(std::ostream& os, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os.put(',');
        os << escape(fields[i]);
    }
    os.put('\n');
}

// Parses a whole document. Comment lines starting with '#' before the header
// are skipped (report files carry a metadata block there). Every row must
// match the header width.
inline Document parse(std::istream& in, const std::string& source_name = "<stream>") {
    Document doc;
    std::vector<std::string> rec;
    // header: skip leading comments and blank lines
    while (true) {
        std::streampos pos = in.tellg();
        if (!detail::read_record(in, rec))
            throw parse_error(source_name + ": missing header row");
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (!rec.empty() && !rec[0].empty() && rec[0][0] == '#') continue;
        (void)pos;
        break;
    }
    doc.header = rec;
    std::size_t line = 1;
    while (detail::read_record(in, rec)) {
        ++line;
        if (rec.size() == 1 && rec[0].empty()) continue; // trailing newline
        if (rec.size() != doc.header.size())
            throw parse_error(source_name + ": ragged row " + std::to_string(line) + " has " +
                              std::to_string(rec.size()) + " fields, expected " +
                              std::to_string(doc.header.size()));
        doc.rows.push_back(rec);
    }
    return doc;
}

inline Document parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return parse(in, path);
}

// Doubles are printed with %.17g so that a parse round-trip is exact.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw parse_error(context + ": trailing junk in number '" + s + "'");
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error(context + ": cannot parse number '" + s + "'");
    }
}

} // namespace vtwin::csv
