#pragma once

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// Logical -> physical column names. The per-line defaults follow the CAS
// loss-reserve database files, whose loss/premium columns carry a suffix
// that differs by line of business.
struct ColumnMap {
    std::string group = "GRCODE";
    std::string accident_year = "AccidentYear";
    std::string development_lag = "DevelopmentLag";
    std::string cumulative_paid;   // e.g. CumPaidLoss_C
    std::string premium_net;       // e.g. EarnedPremNet_C

    static ColumnMap defaults_for(Line line) {
        ColumnMap m;
        const char* suffix = "";
        switch (line) {
            case Line::CA: suffix = "_C"; break;   // comauto
            case Line::PA: suffix = "_B"; break;   // ppauto
            case Line::WC: suffix = "_D"; break;   // wkcomp
            case Line::OL: suffix = "_h1"; break;  // othliab
        }
        m.cumulative_paid = std::string("CumPaidLoss") + suffix;
        m.premium_net = std::string("EarnedPremNet") + suffix;
        return m;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

inline double parse_number(const std::string& field, std::size_t row_number, const std::string& column) {
    const std::string t = trim(field);
    if (t.empty())
        throw ParseError("row " + std::to_string(row_number) + ": empty value in column " + column);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ParseError("row " + std::to_string(row_number) + ": non-numeric value '" + t +
                         "' in column " + column);
    return v;
}

inline long parse_integer(const std::string& field, std::size_t row_number, const std::string& column) {
    const double v = parse_number(field, row_number, column);
    const long k = static_cast<long>(v);
    if (static_cast<double>(k) != v)
        throw ParseError("row " + std::to_string(row_number) + ": non-integer value '" + field +
                         "' in column " + column);
    return k;
}

}  // namespace detail

// Parses one CAS-format Schedule P file into per-company datasets. Every
// company must carry the complete (accident year x development lag) square;
// the square's side is inferred from the distinct accident years present.
inline std::vector<CompanyDataset> parse_schedule_p(std::istream& in, Line line,
                                                    const ColumnMap& columns) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw SchemaError("schedule P: empty input, header row required");
    const std::vector<std::string> header = detail::split_csv_line(header_line);

    auto find_column = [&](const std::string& name) {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw SchemaError("schedule P: missing required column '" + name + "'");
    };
    const std::size_t col_group = find_column(columns.group);
    const std::size_t col_ay = find_column(columns.accident_year);
    const std::size_t col_lag = find_column(columns.development_lag);
    const std::size_t col_paid = find_column(columns.cumulative_paid);
    const std::size_t col_prem = find_column(columns.premium_net);

    struct Cell {
        double paid;
        std::size_t row;
    };
    struct Company {
        std::map<std::pair<long, long>, Cell> cells;  // (accident year, lag) -> paid
        std::map<long, double> premiums;              // accident year -> net premium
    };
    std::map<std::string, Company> companies;
    std::set<long> accident_years;
    std::set<long> lags;

    std::string raw;
    std::size_t row_number = 1;  // header was row 1
    while (std::getline(in, raw)) {
        ++row_number;
        if (detail::trim(raw).empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(raw);
        if (fields.size() < header.size())
            throw ParseError("row " + std::to_string(row_number) + ": expected " +
                             std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        const std::string group = detail::trim(fields[col_group]);
        if (group.empty()) throw ParseError("row " + std::to_string(row_number) + ": empty group code");
        const long ay = detail::parse_integer(fields[col_ay], row_number, columns.accident_year);
        const long lag = detail::parse_integer(fields[col_lag], row_number, columns.development_lag);
        const double paid = detail::parse_number(fields[col_paid], row_number, columns.cumulative_paid);
        const double premium = detail::parse_number(fields[col_prem], row_number, columns.premium_net);

        Company& company = companies[group];
        auto [it, inserted] = company.cells.insert({{ay, lag}, Cell{paid, row_number}});
        if (!inserted)
            throw ParseError("row " + std::to_string(row_number) + ": duplicate cell for group " + group +
                             ", accident year " + std::to_string(ay) + ", lag " + std::to_string(lag));
        auto [pit, new_premium] = company.premiums.insert({ay, premium});
        if (!new_premium && pit->second != premium)
            throw ParseError("row " + std::to_string(row_number) + ": conflicting premium for group " + group +
                             ", accident year " + std::to_string(ay));
        accident_years.insert(ay);
        lags.insert(lag);
    }

    std::vector<CompanyDataset> out;
    if (companies.empty()) return out;

    const long ay_min = *accident_years.begin();
    const long ay_max = *accident_years.rbegin();
    const long n = ay_max - ay_min + 1;
    if (static_cast<long>(accident_years.size()) != n)
        throw CompletenessError("schedule P: accident years are not contiguous");
    if (*lags.begin() < 1 || *lags.rbegin() > n)
        throw ParseError("schedule P: development lag " + std::to_string(*lags.rbegin()) +
                         " outside the " + std::to_string(n) + "x" + std::to_string(n) + " window");

    for (auto& [group, company] : companies) {
        if (static_cast<long>(company.cells.size()) != n * n)
            throw CompletenessError("schedule P: group " + group + " has " +
                                    std::to_string(company.cells.size()) + " cells, expected " +
                                    std::to_string(n * n));
        CompanyDataset ds;
        ds.group_id = group;
        ds.line = line;
        ds.calendar_origin = static_cast<int>(ay_min);
        ds.rectangle = SquareGrid(static_cast<int>(n));
        ds.premiums.resize(static_cast<std::size_t>(n));
        for (long ay = ay_min; ay <= ay_max; ++ay) {
            for (long lag = 1; lag <= n; ++lag) {
                auto it = company.cells.find({ay, lag});
                if (it == company.cells.end())
                    throw CompletenessError("schedule P: group " + group + " missing accident year " +
                                            std::to_string(ay) + ", lag " + std::to_string(lag));
                ds.rectangle.at(static_cast<int>(ay - ay_min + 1), static_cast<int>(lag)) = it->second.paid;
            }
            ds.premiums[static_cast<std::size_t>(ay - ay_min)] = company.premiums.at(ay);
        }
        out.push_back(std::move(ds));
    }
    return out;  // std::map iteration: sorted by group code, input-order independent
}

inline std::vector<CompanyDataset> parse_schedule_p(const std::string& csv_text, Line line,
                                                    const ColumnMap& columns) {
    std::istringstream in(csv_text);
    return parse_schedule_p(in, line, columns);
}

// Ordered group codes per line of business, as shipped in the selection
// config (one [LINE] section per line, one code per row, '#' comments).
struct SelectionList {
    std::map<Line, std::vector<std::string>> codes;

    static SelectionList parse(std::istream& in) {
        SelectionList out;
        Line current = Line::CA;
        bool have_section = false;
        std::string raw;
        std::size_t row = 0;
        while (std::getline(in, raw)) {
            ++row;
            std::string s = detail::trim(raw);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[' && s.back() == ']') {
                current = parse_line(detail::trim(s.substr(1, s.size() - 2)));
                have_section = true;
                continue;
            }
            if (!have_section)
                throw SelectionError("selection list row " + std::to_string(row) +
                                     ": group code before any [LINE] section");
            auto& list = out.codes[current];
            if (std::find(list.begin(), list.end(), s) != list.end())
                throw SelectionError("selection list: duplicate group code " + s + " in line " +
                                     line_name(current));
            list.push_back(s);
        }
        return out;
    }

    static SelectionList parse(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }
};

// Keeps the selection's order; every selected code must exist in the data.
inline std::vector<CompanyDataset> select_triangles(const std::vector<CompanyDataset>& datasets,
                                                    const std::vector<std::string>& codes, Line line) {
    std::map<std::string, const CompanyDataset*> by_code;
    for (const auto& ds : datasets) by_code[ds.group_id] = &ds;
    std::vector<CompanyDataset> out;
    out.reserve(codes.size());
    for (const auto& code : codes) {
        auto it = by_code.find(code);
        if (it == by_code.end())
            throw SelectionError("selection: group code " + code + " not present in the " +
                                 line_name(line) + " data");
        CompanyDataset ds = *it->second;
        ds.validate();
        out.push_back(std::move(ds));
    }
    return out;
}

}  // namespace runoff
