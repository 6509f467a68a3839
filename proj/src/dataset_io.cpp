#include "lokf/dataset_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace lokf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    }
    return out;
}

// Parses names like "x12" into (prefix, 12).
std::optional<std::pair<std::string, int>> indexed_name(const std::string& name) {
    std::size_t k = 0;
    while (k < name.size() && std::isalpha(static_cast<unsigned char>(name[k]))) ++k;
    if (k == 0 || k == name.size()) return std::nullopt;
    int idx = 0;
    auto [ptr, ec] = std::from_chars(name.data() + k, name.data() + name.size(), idx);
    if (ec != std::errc() || ptr != name.data() + name.size() || idx < 1) return std::nullopt;
    std::string prefix = name.substr(0, k);
    for (auto& c : prefix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return std::make_pair(prefix, idx);
}

double parse_cell(const std::string& s, int line) {
    if (s.empty()) throw ParseError("empty cell on line " + std::to_string(line), line);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError("malformed number '" + s + "' on line " + std::to_string(line), line);
    return v;
}

}  // namespace

DataBundle read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
    const auto header = split_line(line);
    int ycol = -1;
    std::map<int, int> xcols, xkcols, zcols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "y" || h == "Y") {
            if (ycol >= 0) throw ParseError("duplicate y column", 1);
            ycol = static_cast<int>(c);
            continue;
        }
        auto id = indexed_name(h);
        std::map<int, int>* target = nullptr;
        if (id && id->first == "x") target = &xcols;
        if (id && id->first == "xk") target = &xkcols;
        if (id && id->first == "z") target = &zcols;
        if (!target) throw ParseError("unrecognized column '" + h + "'", 1);
        if (!target->emplace(id->second, static_cast<int>(c)).second)
            throw ParseError("duplicate column '" + h + "'", 1);
    }
    if (ycol < 0) throw ParseError("missing y column", 1);
    if (xcols.empty()) throw ParseError("no x columns", 1);
    auto check_contiguous = [](const std::map<int, int>& m, const char* name) {
        int expect = 1;
        for (const auto& [k, _] : m)
            if (k != expect++) throw ParseError(std::string(name) + " columns must be numbered 1..k without gaps", 1);
    };
    check_contiguous(xcols, "x");
    check_contiguous(zcols, "z");
    if (xkcols.empty())
        throw MissingKnockoffs("knockoffs must be supplied; construction for arbitrary distributions is out of scope");
    check_contiguous(xkcols, "xk");
    if (xkcols.size() != xcols.size()) throw ParseError("xk columns must match x columns one to one", 1);

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                 " fields, expected " + std::to_string(header.size()),
                             lineno);
        std::vector<double> r(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) r[c] = parse_cell(cells[c], lineno);
        rows.push_back(std::move(r));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = static_cast<Eigen::Index>(xcols.size());
    const Eigen::Index m = static_cast<Eigen::Index>(zcols.size());
    DataBundle d;
    d.x.resize(n, p);
    d.xk.resize(n, p);
    d.y.resize(n);
    d.z.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.y[i] = rows[i][ycol];
        for (const auto& [k, c] : xcols) d.x(i, k - 1) = rows[i][c];
        for (const auto& [k, c] : xkcols) d.xk(i, k - 1) = rows[i][c];
        for (const auto& [k, c] : zcols) d.z(i, k - 1) = rows[i][c];
    }
    d.column_names = header;
    d.validate();
    return d;
}

DataBundle read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const DataBundle& d) {
    d.validate();
    out << 'y';
    for (Eigen::Index j = 0; j < d.p(); ++j) out << ",x" << j + 1;
    for (Eigen::Index j = 0; j < d.p(); ++j) out << ",xk" << j + 1;
    for (Eigen::Index c = 0; c < d.m(); ++c) out << ",z" << c + 1;
    out << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        put(d.y[i]);
        for (Eigen::Index j = 0; j < d.p(); ++j) out << ',', put(d.x(i, j));
        for (Eigen::Index j = 0; j < d.p(); ++j) out << ',', put(d.xk(i, j));
        for (Eigen::Index c = 0; c < d.m(); ++c) out << ',', put(d.z(i, c));
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const DataBundle& d) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_dataset_csv(out, d);
}

std::string partition_to_json(const PartitionSet& nu) {
    nlohmann::json vars = nlohmann::json::array();
    for (int j = 0; j < nu.p(); ++j) {
        nlohmann::json cov = nlohmann::json::array();
        for (int c : nu.covariates(j)) cov.push_back(c + 1);
        vars.push_back({{"variable", j + 1}, {"covariates", cov}, {"subgroups", nu.width(j)}});
    }
    return nlohmann::json{{"variables", vars}}.dump(2);
}

PartitionSet partition_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<std::vector<int>> cov;
    for (const auto& v : j.at("variables")) {
        std::vector<int> c;
        for (int k : v.at("covariates")) c.push_back(k - 1);
        cov.push_back(std::move(c));
    }
    return PartitionSet(std::move(cov));
}

}  // namespace lokf
