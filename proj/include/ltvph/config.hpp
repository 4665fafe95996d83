#pragma once

// INI-style configuration files for systems, storage matrices and pH
// representations.  Sections [system], [storage], [grid], [tolerances], [ph];
// matrices are bracketed row lists of quoted expression strings, e.g.
//   A = [["-1", "0"], ["t", "-2"]]
// spanning multiple lines if the brackets stay open.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ltvph/dissipativity.hpp"
#include "ltvph/errors.hpp"
#include "ltvph/ltv.hpp"
#include "ltvph/matfun.hpp"
#include "ltvph/ph.hpp"

namespace ltvph {

struct ConfigFile {
    // section -> key -> raw value
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string path = "<memory>";

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        return s != sections.end() && s->second.count(key) > 0;
    }
    const std::string& get(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        if (s == sections.end() || !s->second.count(key))
            throw ParseError(path, 0, "missing key '" + key + "' in section [" + section + "]");
        return s->second.at(key);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline int bracket_balance(const std::string& s, int start) {
    int bal = start;
    bool in_quote = false;
    char quote = '"';
    for (char ch : s) {
        if (in_quote) {
            if (ch == quote) in_quote = false;
            continue;
        }
        if (ch == '"' || ch == '\'') {
            in_quote = true;
            quote = ch;
        } else if (ch == '[') {
            ++bal;
        } else if (ch == ']') {
            --bal;
        }
    }
    return bal;
}

}  // namespace detail

inline ConfigFile parse_config(std::istream& in, const std::string& path = "<memory>") {
    ConfigFile cfg;
    cfg.path = path;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[' && s.back() == ']' &&
            detail::bracket_balance(s, 0) == 0 && s.find('=') == std::string::npos &&
            s.find('"') == std::string::npos) {
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ParseError(path, lineno, "empty section name");
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, lineno, "expected 'key = value' or '[section]'");
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        // multi-line matrix values: keep reading while brackets stay open
        int bal = detail::bracket_balance(value, 0);
        while (bal > 0 && std::getline(in, line)) {
            ++lineno;
            value += " " + detail::trim(line);
            bal = detail::bracket_balance(value, 0);
        }
        if (bal != 0) throw ParseError(path, lineno, "unbalanced brackets in value of " + key);
        if (section.empty()) throw ParseError(path, lineno, "key outside any section");
        cfg.sections[section][key] = value;
    }
    return cfg;
}

inline ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_config(in, path);
}

/// Parses [["expr", "expr"], ...] into a row-major expression grid.
inline std::pair<std::vector<std::vector<TimeExpr>>, std::string> parse_expr_matrix(
    const std::string& text) {
    std::vector<std::vector<TimeExpr>> rows;
    std::size_t i = 0;
    auto skip_ws = [&]() {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto expect = [&](char c) {
        skip_ws();
        if (i >= text.size() || text[i] != c)
            throw ParseError("<matrix>", 0,
                             std::string("expected '") + c + "' at offset " + std::to_string(i));
        ++i;
    };
    expect('[');
    for (;;) {
        expect('[');
        std::vector<TimeExpr> row;
        for (;;) {
            skip_ws();
            if (i >= text.size() || (text[i] != '"' && text[i] != '\''))
                throw ParseError("<matrix>", 0,
                                 "expected quoted expression at offset " + std::to_string(i));
            const char quote = text[i++];
            std::size_t start = i;
            while (i < text.size() && text[i] != quote) ++i;
            if (i >= text.size()) throw ParseError("<matrix>", 0, "unterminated quote");
            std::string cell = text.substr(start, i - start);
            ++i;
            try {
                row.push_back(TimeExpr::parse(cell));
            } catch (const Error& e) {
                throw ParseError("<matrix>", 0,
                                 "cell (" + std::to_string(rows.size()) + "," +
                                     std::to_string(row.size()) + ") '" + cell +
                                     "': " + e.what());
            }
            skip_ws();
            if (i < text.size() && text[i] == ',') {
                ++i;
                continue;
            }
            break;
        }
        expect(']');
        if (!rows.empty() && rows.front().size() != row.size())
            throw ParseError("<matrix>", 0, "ragged matrix rows");
        rows.push_back(std::move(row));
        skip_ws();
        if (i < text.size() && text[i] == ',') {
            ++i;
            continue;
        }
        break;
    }
    expect(']');
    skip_ws();
    if (i != text.size()) throw ParseError("<matrix>", 0, "trailing characters after matrix");
    return {rows, ""};
}

inline MatrixFunction matrix_from_text(const std::string& text, Interval dom) {
    auto [rows, err] = parse_expr_matrix(text);
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = static_cast<Eigen::Index>(rows.front().size());
    std::vector<TimeExpr> flat;
    for (auto& row : rows)
        for (auto& e : row) flat.push_back(std::move(e));
    return MatrixFunction::from_exprs(r, c, std::move(flat), dom);
}

inline Interval parse_interval(const std::string& raw) {
    std::string s = detail::trim(raw);
    if (!s.empty() && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
    for (char& ch : s)
        if (ch == ':') ch = ',';
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw ParseError("<interval>", 0, "expected 'lo,hi' or '(lo, hi)' or 'lo:hi'");
    try {
        const double lo = std::stod(detail::trim(s.substr(0, comma)));
        const double hi = std::stod(detail::trim(s.substr(comma + 1)));
        if (!(lo < hi)) throw ParseError("<interval>", 0, "interval needs lo < hi");
        return {lo, hi};
    } catch (const std::invalid_argument&) {
        throw ParseError("<interval>", 0, "malformed interval bound in '" + raw + "'");
    }
}

inline LtvSystem load_system(const ConfigFile& cfg) {
    const Interval dom = parse_interval(cfg.get("system", "domain"));
    MatrixFunction a = matrix_from_text(cfg.get("system", "A"), dom);
    MatrixFunction b = matrix_from_text(cfg.get("system", "B"), dom);
    MatrixFunction c = matrix_from_text(cfg.get("system", "C"), dom);
    MatrixFunction d = matrix_from_text(cfg.get("system", "D"), dom);
    return LtvSystem(a, b, c, d, dom);
}

inline LtvSystem load_system_file(const std::string& path) {
    return load_system(parse_config_file(path));
}

inline std::optional<StorageCandidate> load_storage(const ConfigFile& cfg, Interval dom) {
    if (!cfg.has("storage", "Q")) return std::nullopt;
    return StorageCandidate::from(matrix_from_text(cfg.get("storage", "Q"), dom));
}

// --- serialization ----------------------------------------------------------

inline std::string matrix_to_text(const MatrixFunction& f) {
    auto exprs = f.try_exprs();
    if (!exprs)
        throw UnsupportedSerialization(
            "matrix function contains numeric closures; expression form unavailable");
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        if (i) os << ", ";
        os << "[";
        for (Eigen::Index j = 0; j < f.cols(); ++j) {
            if (j) os << ", ";
            os << '"' << (*exprs)[i * f.cols() + j].print() << '"';
        }
        os << "]";
    }
    os << "]";
    return os.str();
}

inline void save_system(const LtvSystem& sys, std::ostream& os) {
    os << "[system]\n";
    os << "domain = (" << sys.domain.lo << ", " << sys.domain.hi << ")\n";
    os << "A = " << matrix_to_text(sys.A) << "\n";
    os << "B = " << matrix_to_text(sys.B) << "\n";
    os << "C = " << matrix_to_text(sys.C) << "\n";
    os << "D = " << matrix_to_text(sys.D) << "\n";
}

inline void save_ph(const PhRepresentation& ph, std::ostream& os) {
    os << "[ph]\n";
    os << "domain = (" << ph.domain.lo << ", " << ph.domain.hi << ")\n";
    os << "Q = " << matrix_to_text(ph.Q) << "\n";
    os << "K = " << matrix_to_text(ph.K) << "\n";
    os << "J = " << matrix_to_text(ph.J) << "\n";
    os << "R = " << matrix_to_text(ph.R) << "\n";
    os << "G = " << matrix_to_text(ph.G) << "\n";
    os << "P = " << matrix_to_text(ph.P) << "\n";
    os << "S = " << matrix_to_text(ph.S) << "\n";
    os << "N = " << matrix_to_text(ph.N) << "\n";
}

inline PhRepresentation load_ph(const ConfigFile& cfg) {
    const Interval dom = parse_interval(cfg.get("ph", "domain"));
    auto get = [&](const char* key) { return matrix_from_text(cfg.get("ph", key), dom); };
    return PhRepresentation{get("Q"), get("K"), get("J"), get("R"),
                            get("G"), get("P"), get("S"), get("N"), dom};
}

}  // namespace ltvph
