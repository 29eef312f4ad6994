#include "latdisc/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "latdisc/error.hpp"

namespace latdisc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(const std::string& text, const std::string& field) {
    const std::string s = trim(text);
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size() || std::isnan(v))
        throw PreconditionError("field '" + field + "': not a number: '" + text + "'");
    return v;
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        // trailing comment after whitespace
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (s[i] == '#' && (s[i - 1] == ' ' || s[i - 1] == '\t')) {
                s = trim(s.substr(0, i));
                break;
            }
        }
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') throw PreconditionError(where + "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!section.empty() && !valid_key(section))
                throw PreconditionError(where + "bad section name '" + section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw PreconditionError(where + "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (!valid_key(key)) throw PreconditionError(where + "bad key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.contains(full)) throw PreconditionError(where + "duplicate key '" + full + "'");
        cfg.set(full, trim(s.substr(eq + 1)));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::to_text() const {
    std::ostringstream out;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    for (const auto& [k, v] : values_) {
        const auto dot = k.find('.');
        if (dot == std::string::npos)
            out << k << " = " << v << "\n";
        else
            sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
    for (const auto& [name, kv] : sections) {
        out << "\n[" << name << "]\n";
        for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    }
    return out.str();
}

void Config::set(const std::string& key, std::string value) {
    if (!valid_key(key)) throw PreconditionError("bad config key '" + key + "'");
    values_[key] = std::move(value);
}

void Config::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw PreconditionError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::find(const std::string& scope, const std::string& key) const {
    if (!scope.empty()) {
        if (auto it = values_.find(scope + "." + key); it != values_.end()) return it->second;
    }
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    return std::nullopt;
}

std::string Config::get_string(const std::string& scope, const std::string& key, const std::string& fallback) const {
    return find(scope, key).value_or(fallback);
}

std::string Config::require_string(const std::string& scope, const std::string& key) const {
    auto v = find(scope, key);
    if (!v || v->empty()) throw PreconditionError("missing required field '" + key + "'");
    return *v;
}

double Config::get_double(const std::string& scope, const std::string& key, double fallback) const {
    auto v = find(scope, key);
    return v ? parse_double(*v, key) : fallback;
}

double Config::require_double(const std::string& scope, const std::string& key) const {
    return parse_double(require_string(scope, key), key);
}

long long Config::get_int(const std::string& scope, const std::string& key, long long fallback) const {
    auto v = find(scope, key);
    if (!v) return fallback;
    const double d = parse_double(*v, key);
    if (d != std::floor(d) || std::abs(d) > 9e15)
        throw PreconditionError("field '" + key + "': expected an integer, got '" + *v + "'");
    return static_cast<long long>(d);
}

bool Config::get_bool(const std::string& scope, const std::string& key, bool fallback) const {
    auto v = find(scope, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw PreconditionError("field '" + key + "': expected true/false, got '" + *v + "'");
}

std::vector<double> parse_grid(const std::string& text, const std::string& field) {
    const std::string s = trim(text);
    auto bad = [&] { return PreconditionError("field '" + field + "': bad grid '" + text + "'"); };
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        std::vector<double> out;
        for (const auto& tok : split_list(s)) out.push_back(parse_double(tok, field));
        if (out.empty()) throw bad();
        return out;
    }
    std::string lhs = s.substr(0, dots), rhs = s.substr(dots + 2);
    if (lhs.rfind("2^", 0) == 0) {
        if (rhs.rfind("2^", 0) != 0) throw bad();
        const double a = parse_double(lhs.substr(2), field), b = parse_double(rhs.substr(2), field);
        if (a != std::floor(a) || b != std::floor(b) || b < a || b - a > 64) throw bad();
        std::vector<double> out;
        for (double e = a; e <= b; e += 1.0) out.push_back(std::ldexp(1.0, int(e)));
        return out;
    }
    bool log = false;
    if (lhs.rfind("log:", 0) == 0) {
        log = true;
        lhs = lhs.substr(4);
    }
    const auto colon = rhs.find(':');
    if (colon == std::string::npos) throw bad();
    const double a = parse_double(lhs, field), b = parse_double(rhs.substr(0, colon), field);
    const double nd = parse_double(rhs.substr(colon + 1), field);
    if (nd != std::floor(nd) || nd < 1 || nd > 1e7 || b < a || (log && a <= 0)) throw bad();
    const auto n = std::size_t(nd);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : double(i) / double(n - 1);
        out[i] = log ? a * std::pow(b / a, f) : a + (b - a) * f;
    }
    if (n > 1) out.back() = b;
    return out;
}

void CsvTable::add_row(const std::vector<double>& values) {
    if (!columns.empty() && values.size() != columns.size()) {
        throw PreconditionError("csv row has " + std::to_string(values.size()) + " values for " +
                                std::to_string(columns.size()) + " columns");
    }
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_number(v));
    rows.push_back(std::move(row));
}

std::string to_csv(const CsvTable& table) {
    std::ostringstream out;
    for (const auto& [k, v] : table.metadata) out << "# " << k << ": " << v << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string loglog_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       const std::optional<PlotLine>& fit) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    std::size_t points = 0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw PreconditionError("plot: x and y differ in length");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0) || !(s.y[i] > 0) || !std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                throw PreconditionError("plot: log-log data must be positive and finite");
            x0 = std::min(x0, std::log10(s.x[i]));
            x1 = std::max(x1, std::log10(s.x[i]));
            y0 = std::min(y0, std::log10(s.y[i]));
            y1 = std::max(y1, std::log10(s.y[i]));
            ++points;
        }
    }
    if (points == 0) throw PreconditionError("plot: empty table");
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    const double W = 640, H = 420, L = 70, Rm = 20, T = 40, B = 50;
    auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - Rm << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = int(std::ceil(x0)); i <= int(std::floor(x1)); ++i)
        o << "<text x=\"" << num(px(i)) << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << i << "</text>\n";
    for (int i = int(std::ceil(y0)); i <= int(std::floor(y1)); ++i)
        o << "<text x=\"" << L - 6 << "\" y=\"" << num(py(i) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << i << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* c = colors[s % 5];
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            o << "<circle cx=\"" << num(px(std::log10(series[s].x[i]))) << "\" cy=\""
              << num(py(std::log10(series[s].y[i]))) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
        o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 14 * double(s) << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
          << c << "\">" << series[s].label << "</text>\n";
    }
    if (fit) {
        // fit is in natural logs: ln y = intercept + slope ln x
        auto ly = [&](double lx) { return (fit->intercept + fit->slope * lx * std::log(10.0)) / std::log(10.0); };
        o << "<line x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(ly(x0))) << "\" x2=\"" << num(px(x1))
          << "\" y2=\"" << num(py(ly(x1))) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
        o << "<text x=\"" << W - Rm - 6 << "\" y=\"" << T + 16
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">slope " << num(fit->slope)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace latdisc
