#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pantolab/errors.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/real.hpp"
#include "pantolab/solver.hpp"
#include "pantolab/version.hpp"
#include "pantolab/zeros.hpp"

namespace pantolab {

using json = nlohmann::ordered_json;

/// Decimal form of a Real: shortest-roundtrip when digits = 0, otherwise a
/// fixed significant-digit count.  Both are deterministic.
inline std::string format_real(const Real& x, size_t digits = 0) {
    return digits == 0 ? x.str() : x.str(digits);
}

// ---- CSV (RFC-4180-style: header row, quoted fields where needed) --------

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    out += '\n';
    return out;
}

/// Zero table with the ratio columns used by the asymptotic checks; the last
/// row has no successor, so its ratio fields are empty.
inline std::string zeros_csv(const std::vector<ZeroRecord>& zeros, const Real& q,
                             size_t digits = 40) {
    std::string out = csv_row({"n", "x_n", "enclosure", "ratio", "normalized_ratio"});
    for (size_t i = 0; i < zeros.size(); ++i) {
        std::string ratio, normalized;
        if (i + 1 < zeros.size()) {
            Real r = zeros[i + 1].x / zeros[i].x;
            ratio = format_real(r, digits);
            normalized = format_real(r / q, digits);
        }
        out += csv_row({std::to_string(zeros[i].n), format_real(zeros[i].x, digits),
                        format_real(zeros[i].enclosure, digits), ratio, normalized});
    }
    return out;
}

// ---- JSON report envelope -------------------------------------------------

inline json reals_json(const std::vector<Real>& xs, size_t digits) {
    json a = json::array();
    for (const auto& x : xs) a.push_back(format_real(x, digits));
    return a;
}

/// Common report shape: every artifact names itself, states its verdict, and
/// embeds the effective configuration and library version for reproduction.
inline json make_report(const std::string& name, bool pass, json statistics, json data,
                        json config) {
    json r;
    r["name"] = name;
    r["pass"] = pass;
    r["statistics"] = std::move(statistics);
    r["data"] = std::move(data);
    r["config"] = std::move(config);
    r["version"] = version_string;
    return r;
}

inline json zeros_json(const std::vector<ZeroRecord>& zeros, size_t digits) {
    json a = json::array();
    for (const auto& z : zeros) {
        json row;
        row["n"] = z.n;
        row["x"] = format_real(z.x, digits);
        row["enclosure"] = format_real(z.enclosure, digits);
        row["source"] = z.source == ZeroSource::series ? "series" : "piecewise_solution";
        a.push_back(std::move(row));
    }
    return a;
}

inline json ratio_report_json(const RatioReport& r, size_t digits) {
    json j;
    j["pass"] = r.pass;
    j["first_deviation"] = format_real(r.first_dev, digits);
    j["final_deviation"] = format_real(r.final_dev, digits);
    j["tolerance"] = r.tolerance;
    j["ratios"] = reals_json(r.ratios, digits);
    j["deviations"] = reals_json(r.deviations, digits);
    return j;
}

inline json gamma_fit_json(const GammaFit& f, size_t digits) {
    json j;
    j["gamma"] = format_real(f.gamma, digits);
    j["c"] = format_real(f.c, digits);
    j["offset"] = f.offset;
    j["rms"] = format_real(f.rms, digits);
    j["uncorrected_rms"] = format_real(f.uncorrected_rms, digits);
    j["tail_mean"] = format_real(f.tail_mean, digits);
    j["residuals"] = reals_json(f.residuals, digits);
    return j;
}

inline json robinson_report_json(const RobinsonReport& r, size_t digits) {
    json j;
    j["pass"] = r.pass;
    j["offset"] = r.offset;
    j["last5_max"] = format_real(r.last5_max, digits);
    j["first_deviation"] = format_real(r.first_dev, digits);
    j["final_deviation"] = format_real(r.final_dev, digits);
    j["gate"] = r.gate;
    j["deviations"] = reals_json(r.deviations, digits);
    return j;
}

inline json zhang_report_json(const ZhangReport& r, size_t digits) {
    json j;
    j["diagnostic"] = true;
    j["pass"] = r.pass;
    j["offset"] = r.offset;
    j["tail_mean"] = format_real(r.tail_mean, digits);
    j["psi"] = format_real(r.psi, digits);
    j["agreement"] = format_real(r.agreement, digits);
    j["s"] = reals_json(r.s, digits);
    return j;
}

// ---- initial-function documents -------------------------------------------

namespace detail {

inline Real real_from_json(const json& v, prec_t bits, const char* what) {
    if (v.is_string()) return Real::parse(v.get<std::string>(), bits);
    if (v.is_number()) return Real(v.get<double>(), bits);
    throw InvalidInput(std::string("initial function: ") + what +
                       " must be a number or a decimal string");
}

inline Complex complex_from_json(const json& v, prec_t bits, const char* what) {
    if (v.is_array()) {
        if (v.size() != 2)
            throw InvalidInput(std::string("initial function: ") + what +
                               " as an array must be [re, im]");
        return Complex(real_from_json(v[0], bits, what), real_from_json(v[1], bits, what));
    }
    return Complex(real_from_json(v, bits, what));
}

} // namespace detail

/// Build an InitialFunction from its JSON document form:
///   {"x0": 1, "kind": "pieces", "pieces": [{"lo":…, "hi":…, "coeffs": […]}…]}
///   {"x0": 1, "kind": "table", "xs": […], "ys": […], "rule": "linear"|"cubic_spline"}
///   {"x0": 1, "kind": "analytic", "lambda":…, "a":…, "b":…}
/// Numbers may be JSON numbers or decimal strings (for precision beyond
/// double); complex values are [re, im] pairs.  Polynomial pieces use
/// monomial coefficients in x, constant term first.
inline InitialFunction initial_function_from_json(const json& doc, PrecContext ctx) {
    if (!doc.is_object()) throw InvalidInput("initial function document must be a JSON object");
    if (!doc.contains("kind")) throw InvalidInput("initial function document needs a \"kind\"");
    prec_t bits = prec_t(ctx.bits);
    std::string kind = doc["kind"].get<std::string>();

    if (kind == "pieces") {
        if (!doc.contains("pieces") || !doc["pieces"].is_array())
            throw InvalidInput("initial function kind \"pieces\" needs a \"pieces\" array");
        std::vector<PolyPiece> pieces;
        for (const auto& pj : doc["pieces"]) {
            PolyPiece p{detail::real_from_json(pj.at("lo"), bits, "piece lo"),
                        detail::real_from_json(pj.at("hi"), bits, "piece hi"),
                        {}};
            for (const auto& cj : pj.at("coeffs"))
                p.coeffs.push_back(detail::complex_from_json(cj, bits, "piece coefficient"));
            pieces.push_back(std::move(p));
        }
        return InitialFunction::from_pieces(std::move(pieces));
    }
    if (kind == "table") {
        if (!doc.contains("xs") || !doc.contains("ys"))
            throw InvalidInput("initial function kind \"table\" needs \"xs\" and \"ys\"");
        std::vector<Real> xs;
        std::vector<Complex> ys;
        for (const auto& v : doc["xs"]) xs.push_back(detail::real_from_json(v, bits, "xs entry"));
        for (const auto& v : doc["ys"])
            ys.push_back(detail::complex_from_json(v, bits, "ys entry"));
        TableRule rule = TableRule::linear;
        if (doc.contains("rule")) {
            std::string r = doc["rule"].get<std::string>();
            if (r == "cubic_spline")
                rule = TableRule::cubic_spline;
            else if (r != "linear")
                throw InvalidInput("initial function table rule must be linear or cubic_spline");
        }
        return InitialFunction::from_table(std::move(xs), std::move(ys), rule);
    }
    if (kind == "analytic") {
        if (!doc.contains("x0") || !doc.contains("lambda"))
            throw InvalidInput("initial function kind \"analytic\" needs \"x0\" and \"lambda\"");
        Real lam = detail::real_from_json(doc["lambda"], bits, "lambda");
        Complex a = doc.contains("a") ? detail::complex_from_json(doc["a"], bits, "a")
                                      : Complex(-1.0, 0.0, bits);
        Complex b = doc.contains("b") ? detail::complex_from_json(doc["b"], bits, "b")
                                      : Complex(0.0, 0.0, bits);
        PantographParams src(std::move(lam), std::move(a), std::move(b));
        return InitialFunction::from_series(src, detail::real_from_json(doc["x0"], bits, "x0"),
                                            ctx);
    }
    throw InvalidInput("initial function kind must be pieces, table, or analytic; got \"" + kind +
                       "\"");
}

/// Parse a zeros CSV produced by zeros_csv (or any table whose first two
/// columns are n and x_n); enclosure is optional.  Lines starting with '#'
/// are the config preamble and are skipped.
inline std::vector<ZeroRecord> zeros_from_csv(const std::string& text, prec_t bits) {
    std::vector<ZeroRecord> out;
    size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        size_t fpos = 0;
        while (true) {
            size_t comma = line.find(',', fpos);
            fields.push_back(line.substr(fpos, comma - fpos));
            if (comma == std::string::npos) break;
            fpos = comma + 1;
        }
        if (fields.size() < 2)
            throw InvalidInput("zeros CSV row needs at least columns n and x_n: '" + line + "'");
        ZeroRecord z{std::stol(fields[0]), Real::parse(fields[1], bits), Real(0L, bits),
                     ZeroSource::series};
        if (fields.size() > 2 && !fields[2].empty()) z.enclosure = Real::parse(fields[2], bits);
        out.push_back(std::move(z));
    }
    return out;
}

} // namespace pantolab
