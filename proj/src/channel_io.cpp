#include "blindcrb/channel_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace blindcrb {

namespace {

using nlohmann::json;

std::string line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1, start = 0;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            start = i + 1;
        }
    }
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    return "line " + std::to_string(line) + ": " + text.substr(start, end - start);
}

Complex parse_scalar(const json& v, const std::string& where) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return Complex(v[0].get<double>(), v[1].get<double>());
    }
    throw ParseError(where + ": coefficient must be a number or [re, im] pair");
}

}  // namespace

namespace {

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ParseError(std::string("cannot open ") + what + " file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_document(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": malformed JSON at " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) + " (" +
                         e.what() + ")");
    }
}

}  // namespace

Channel parse_channel(const std::string& text, const std::string& source) {
    const json doc = parse_document(text, source);
    try {
        const std::string name = doc.value("name", std::string("channel"));
        const Field field = field_from_string(doc.at("field").get<std::string>());
        const auto m = doc.at("m").get<Index>();
        const auto n = doc.at("N").get<Index>();
        const json& rows = doc.at("coeffs");
        if (!rows.is_array() || static_cast<Index>(rows.size()) != m) {
            throw ParseError(source + ": 'coeffs' must hold m = " + std::to_string(m) + " rows");
        }
        CMat coeffs(m, n);
        for (Index l = 0; l < m; ++l) {
            const json& row = rows[static_cast<std::size_t>(l)];
            if (!row.is_array() || static_cast<Index>(row.size()) != n) {
                throw ParseError(source + ": row " + std::to_string(l) + " must hold N = " + std::to_string(n) +
                                 " taps");
            }
            for (Index i = 0; i < n; ++i) {
                coeffs(l, i) = parse_scalar(row[static_cast<std::size_t>(i)],
                                            source + ": coeffs[" + std::to_string(l) + "][" + std::to_string(i) + "]");
            }
        }
        return Channel(name, field, std::move(coeffs));
    } catch (const json::exception& e) {
        throw ParseError(source + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw ParseError(source + ": " + e.what());
    }
}


Channel load_channel(const std::string& path) {
    return parse_channel(slurp(path, "channel"), path);
}

Mat parse_matrix(const std::string& text, const std::string& source) {
    const json doc = parse_document(text, source);
    try {
        const Field field = field_from_string(doc.at("field").get<std::string>());
        const json& cols = doc.at("columns");
        if (!cols.is_array() || cols.empty()) throw ParseError(source + ": 'columns' must be a non-empty array");
        const auto rows = static_cast<Index>(cols[0].size());
        if (rows == 0) throw ParseError(source + ": columns must be non-empty");
        CMat c(rows, static_cast<Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (!cols[k].is_array() || static_cast<Index>(cols[k].size()) != rows) {
                throw ParseError(source + ": column " + std::to_string(k) + " must hold " + std::to_string(rows) +
                                 " entries");
            }
            for (Index r = 0; r < rows; ++r) {
                c(r, static_cast<Index>(k)) = parse_scalar(cols[k][static_cast<std::size_t>(r)],
                                                           source + ": columns[" + std::to_string(k) + "][" +
                                                               std::to_string(r) + "]");
            }
        }
        if (!c.allFinite()) throw ParseError(source + ": non-finite entries");
        if (field == Field::Real) {
            if (!c.imag().isZero(0.0)) throw ParseError(source + ": real matrix with imaginary parts");
            return Mat::real(c.real());
        }
        return Mat::complex(c);
    } catch (const json::exception& e) {
        throw ParseError(source + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw ParseError(source + ": " + e.what());
    }
}

Mat load_matrix(const std::string& path) {
    return parse_matrix(slurp(path, "matrix"), path);
}

std::string channel_to_json(const Channel& ch) {
    json rows = json::array();
    for (Index l = 0; l < ch.m(); ++l) {
        json row = json::array();
        for (Index i = 0; i < ch.length(); ++i) {
            const Complex c = ch.coeffs()(l, i);
            if (ch.field() == Field::Real) {
                row.push_back(c.real());
            } else {
                row.push_back(json::array({c.real(), c.imag()}));
            }
        }
        rows.push_back(std::move(row));
    }
    json doc = {{"name", ch.name()}, {"field", to_string(ch.field())}, {"m", ch.m()}, {"N", ch.length()},
                {"coeffs", std::move(rows)}};
    return doc.dump(2);
}

}  // namespace blindcrb
