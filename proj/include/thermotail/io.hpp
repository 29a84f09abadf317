#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermotail/bounds.hpp"
#include "thermotail/empirical.hpp"
#include "thermotail/identities.hpp"
#include "thermotail/space.hpp"

namespace thermotail {
namespace io {

/// Numbers are printed with 12 significant digits everywhere, enough to
/// compare against the tolerances without float-noise churn.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

/// Space format: {"marginals":[{"atoms":[...],"probs":[...]}, ...]}.
/// Atom labels may be any JSON scalars; non-strings keep their literal
/// JSON spelling as the label.
inline SpacePtr load_space(const nlohmann::json& j,
                           std::uint64_t enumeration_limit = kDefaultEnumerationLimit) {
    if (!j.contains("marginals") || !j["marginals"].is_array() || j["marginals"].empty())
        throw std::invalid_argument("space json: need a non-empty 'marginals' array");
    std::vector<Marginal> marginals;
    for (const auto& mj : j["marginals"]) {
        if (!mj.contains("atoms") || !mj.contains("probs"))
            throw std::invalid_argument("space json: each marginal needs 'atoms' and 'probs'");
        std::vector<std::string> atoms;
        for (const auto& a : mj["atoms"]) atoms.push_back(a.is_string() ? a.get<std::string>() : a.dump());
        std::vector<double> probs = mj["probs"].get<std::vector<double>>();
        marginals.emplace_back(std::move(atoms), std::move(probs));
    }
    return make_space(std::move(marginals), enumeration_limit);
}

inline SpacePtr load_space_file(const std::string& path,
                                std::uint64_t enumeration_limit = kDefaultEnumerationLimit) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open space file: " + path);
    nlohmann::json j;
    in >> j;
    return load_space(j, enumeration_limit);
}

/// Function format: {"values":[...]} in state-iteration order (row-major,
/// last coordinate fastest).
inline TabulatedFunction load_function(const SpacePtr& space, const nlohmann::json& j) {
    if (!j.contains("values") || !j["values"].is_array())
        throw std::invalid_argument("function json: need a 'values' array");
    std::vector<double> values = j["values"].get<std::vector<double>>();
    return TabulatedFunction(space, std::move(values));
}

inline TabulatedFunction load_function_file(const SpacePtr& space, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open function file: " + path);
    nlohmann::json j;
    in >> j;
    return load_function(space, j);
}

inline nlohmann::json space_to_json(const ProductSpace& s) {
    nlohmann::json out;
    out["marginals"] = nlohmann::json::array();
    for (std::size_t k = 0; k < s.dimension(); ++k) {
        const Marginal& m = s.marginal(k);
        out["marginals"].push_back({{"atoms", m.atoms}, {"probs", m.probs}});
    }
    return out;
}

inline nlohmann::json function_to_json(const TabulatedFunction& f) {
    return nlohmann::json{{"values", densified(f).values()}};
}

/// One CheckReport as a single JSON line with a fixed key order.
inline std::string check_report_json(const CheckReport& r) {
    std::ostringstream out;
    out << "{\"name\":\"" << json_escape(r.name) << "\""
        << ",\"kind\":\"" << (r.kind == CheckKind::identity ? "identity" : "inequality") << "\""
        << ",\"lhs\":" << format_number(r.lhs) << ",\"rhs\":" << format_number(r.rhs)
        << ",\"slack\":" << format_number(r.slack) << ",\"tolerance\":" << format_number(r.tolerance)
        << ",\"passed\":" << (r.passed ? "true" : "false")
        << ",\"applicable\":" << (r.applicable ? "true" : "false")
        << ",\"equality\":" << (r.equality ? "true" : "false") << "}";
    return out.str();
}

inline std::string check_reports_jsonl(const std::vector<CheckReport>& reports) {
    std::string out;
    for (const CheckReport& r : reports) {
        out += check_report_json(r);
        out += '\n';
    }
    return out;
}

inline const char* method_name(TailMethod m) {
    return m == TailMethod::exact ? "exact" : "monte_carlo";
}

inline constexpr const char* kTailReportHeader = "t,bound_name,bound_value,beta_star,tail,method,ci,sound";

inline std::string tail_report_csv(const TailReport& report, bool header = true) {
    std::string out;
    if (header) {
        out += kTailReportHeader;
        out += '\n';
    }
    for (const TailReportRow& row : report.rows) {
        out += format_number(row.t);
        out += ',';
        out += row.bound_name;
        out += ',';
        out += format_number(row.bound_value);
        out += ',';
        out += format_number(row.beta_star);
        out += ',';
        out += format_number(row.tail);
        out += ',';
        out += method_name(row.method);
        out += ',';
        out += format_number(row.ci);
        out += ',';
        out += row.sound ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline nlohmann::json tail_report_json(const TailReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const TailReportRow& row : report.rows) {
        rows.push_back({{"t", row.t},
                        {"bound_name", row.bound_name},
                        {"bound_value", row.bound_value},
                        {"beta_star", row.beta_star},
                        {"tail", row.tail},
                        {"method", method_name(row.method)},
                        {"ci", row.ci},
                        {"sound", row.sound}});
    }
    return nlohmann::json{{"entry", report.entry}, {"rows", rows}};
}

/// Bound curves sampled on a t grid: t,bound_name,bound_value,beta_star.
inline std::string curves_csv(std::span<const BoundCurve> curves, std::span<const double> ts,
                              bool header = true) {
    std::string out;
    if (header) out += "t,bound_name,bound_value,beta_star\n";
    for (double t : ts) {
        for (const BoundCurve& c : curves) {
            out += format_number(t);
            out += ',';
            out += c.name;
            out += ',';
            out += format_number(c.evaluate(t));
            out += ',';
            out += format_number(c.beta_of_t(t));
            out += '\n';
        }
    }
    return out;
}

} // namespace io

/// Runs the whole zoo against the oracle with default grids, streaming
/// one CSV block per entry. Returns the number of unsound rows.
inline int run_demo(std::ostream& out, std::size_t grid_points = 20, std::uint64_t mc_samples = 0,
                    std::uint64_t seed = 1) {
    int unsound = 0;
    for (const ZooEntry& entry : zoo()) {
        out << "# entry " << entry.name << "\n";
        const TailReport report = compare(entry, grid_points, mc_samples, seed);
        out << io::tail_report_csv(report, true);
        for (const TailReportRow& row : report.rows) {
            if (!row.sound) ++unsound;
        }
    }
    return unsound;
}

} // namespace thermotail
