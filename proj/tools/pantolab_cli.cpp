#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pantolab/asymptotics.hpp"
#include "pantolab/growth.hpp"
#include "pantolab/io.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/series.hpp"
#include "pantolab/solver.hpp"
#include "pantolab/version.hpp"
#include "pantolab/zeros.hpp"

namespace pl = pantolab;
using pl::Complex;
using pl::json;
using pl::Real;

namespace {

struct GlobalOpts {
    long bits = 256;
    double target = 1e-30;
    long digits = 40;
    std::string format; // empty picks the subcommand default
    std::string output; // empty writes to stdout
    long threads = 1;
    unsigned long long seed = 0;
};

std::string resolve_format(const GlobalOpts& g, const char* dflt) {
    return g.format.empty() ? dflt : g.format;
}

Real parse_real(const std::string& s, pl::prec_t bits, const std::string& what) {
    try {
        return Real::parse(s, bits);
    } catch (const pl::InvalidInput&) {
        throw pl::InvalidInput(what + ": cannot parse '" + s + "' as a real number");
    }
}

/// "re" or "re,im", each part a decimal string.
Complex parse_complex(const std::string& s, pl::prec_t bits, const std::string& what) {
    size_t comma = s.find(',');
    if (comma == std::string::npos) return Complex(parse_real(s, bits, what));
    return Complex(parse_real(s.substr(0, comma), bits, what),
                   parse_real(s.substr(comma + 1), bits, what));
}

std::vector<std::string> split_fields(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        out.push_back(s.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

json complex_json(const Complex& v, size_t digits) {
    return json::array({pl::format_real(v.re, digits), pl::format_real(v.im, digits)});
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pl::InvalidInput("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw pl::InvalidInput("file '" + path + "' is not valid JSON: " + e.what());
    }
}

void emit(const GlobalOpts& g, const std::string& text) {
    if (g.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(g.output, std::ios::binary);
    if (!out) throw pl::InvalidInput("cannot open output file '" + g.output + "'");
    out << text;
}

void emit_json(const GlobalOpts& g, const json& doc) { emit(g, doc.dump(2) + "\n"); }

/// Comment block carrying the effective config, so CSV artifacts are
/// self-describing like the JSON ones.  Readers skip lines starting with '#'.
std::string csv_preamble(const json& cfg) {
    std::string out = std::string("# version=") + pl::version_string + "\n";
    for (const auto& [k, v] : cfg.items())
        out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    return out;
}

json base_config(const GlobalOpts& g, const std::string& command) {
    json cfg;
    cfg["command"] = command;
    cfg["bits"] = g.bits;
    cfg["target_rel_err"] = g.target;
    cfg["digits"] = g.digits;
    cfg["threads"] = g.threads;
    cfg["seed"] = g.seed;
    return cfg;
}

int run_guarded(const GlobalOpts& g, const json& cfg, const std::function<int()>& body) {
    auto fail = [&](const char* type, const std::string& msg, int code) {
        json err;
        err["error"] = json{{"type", type}, {"message", msg}};
        err["config"] = cfg;
        err["version"] = pl::version_string;
        try {
            emit_json(g, err);
        } catch (const std::exception&) {
            std::cout << err.dump(2) << "\n";
        }
        return code;
    };
    try {
        return body();
    } catch (const pl::InvalidInput& e) {
        return fail("invalid_input", e.what(), 2);
    } catch (const pl::Unsupported& e) {
        return fail("unsupported", e.what(), 2);
    } catch (const pl::PoleError& e) {
        return fail("pole", e.what(), 2);
    } catch (const pl::DomainError& e) {
        return fail("domain_error", e.what(), 2);
    } catch (const pl::PrecisionError& e) {
        return fail("precision_error", e.what(), 3);
    } catch (const pl::ConvergenceError& e) {
        return fail("convergence_error", e.what(), 3);
    } catch (const pl::InsufficientData& e) {
        return fail("insufficient_data", e.what(), 3);
    } catch (const pl::Error& e) {
        return fail("numeric_error", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("internal_error", e.what(), 3);
    }
}

Real checked_lambda(const std::string& s, pl::prec_t bits) {
    Real lam = parse_real(s, bits, "lambda");
    if (!(lam > 0L) || !(lam < 1L)) throw pl::InvalidInput("lambda out of (0,1)");
    return lam;
}

// ---- eval ------------------------------------------------------------------

struct EvalOpts {
    std::string method = "series";
    std::string lambda;
    std::string a = "-1";
    std::string b = "0";
    std::string form = "direct";
    std::vector<std::string> zs;
    std::string grid;
    bool crosscheck = false;
};

void append_grid(std::vector<Complex>& zs, const std::string& spec, pl::prec_t bits) {
    std::vector<std::string> parts = split_fields(spec, ':');
    if (parts.size() != 3) throw pl::InvalidInput("grid must be lo:hi:n, got '" + spec + "'");
    Real lo = parse_real(parts[0], bits, "grid lo");
    Real hi = parse_real(parts[1], bits, "grid hi");
    long n = 0;
    try {
        n = std::stol(parts[2]);
    } catch (const std::exception&) {
        throw pl::InvalidInput("grid point count must be an integer, got '" + parts[2] + "'");
    }
    if (n < 1) throw pl::InvalidInput("grid needs at least one point");
    if (n == 1) {
        zs.emplace_back(lo);
        return;
    }
    if (!(hi > lo)) throw pl::InvalidInput("grid needs hi > lo");
    Real step = (hi - lo) / double(n - 1);
    for (long i = 0; i < n; ++i) zs.emplace_back(lo + step * double(i));
}

int run_eval(const GlobalOpts& g, const EvalOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);

    Real lam = checked_lambda(o.lambda, bits);
    Complex a = parse_complex(o.a, bits, "a");
    Complex b = parse_complex(o.b, bits, "b");
    pl::PantographParams params(lam, a, b);
    bool deformed = (a.re + 1L).is_zero() && a.im.is_zero() && b.re.is_zero() && b.im.is_zero();

    std::string format = o.crosscheck ? "json" : resolve_format(g, "csv");
    cfg["method"] = o.method;
    cfg["lambda"] = pl::format_real(lam, digits);
    cfg["a"] = complex_json(a, digits);
    cfg["b"] = complex_json(b, digits);
    if (o.method == "contour") cfg["form"] = o.form;
    cfg["crosscheck"] = o.crosscheck;
    cfg["format"] = format;

    std::vector<Complex> zs;
    for (const auto& s : o.zs) zs.push_back(parse_complex(s, bits, "z"));
    if (!o.grid.empty()) append_grid(zs, o.grid, bits);
    if (zs.empty()) throw pl::InvalidInput("eval needs at least one --z or a --grid");

    auto method_value = [&](const std::string& method, const Complex& z,
                            std::optional<Real>& err) -> Complex {
        if (method == "series") {
            pl::SeriesResult r = pl::pantograph_eval_direct(z, params, ctx);
            err = r.noise_bound;
            return r.value;
        }
        if (method == "contour") {
            if (!deformed)
                throw pl::Unsupported(
                    "contour evaluation covers the deformed exponential only (a = -1, b = 0)");
            auto form =
                o.form == "reflected" ? pl::HankelForm::reflected : pl::HankelForm::direct;
            return pl::hankel_contour_eval(z, lam, form, ctx, int(g.threads));
        }
        if (method == "asy") {
            if (!deformed)
                throw pl::Unsupported(
                    "asymptotic evaluation covers the deformed exponential only (a = -1, b = 0)");
            if (z.im.is_zero() && z.re < 0L) return pl::asy_neg(Complex(-z.re), lam, ctx);
            return pl::asy_pos(z, lam, ctx);
        }
        if (!z.im.is_zero()) throw pl::InvalidInput("km-envelope needs real z");
        return Complex(pl::kato_mcleod_envelope(z.re, params, ctx));
    };

    struct Row {
        Complex z, value;
        std::optional<Real> err;
    };
    std::vector<Row> rows;
    for (const auto& z : zs) {
        Row r{z, Complex(0.0, 0.0, bits), std::nullopt};
        r.value = method_value(o.method, z, r.err);
        rows.push_back(std::move(r));
    }

    if (o.crosscheck) {
        std::string ref_method = o.method == "series" ? "contour" : "series";
        json data = json::array();
        Real max_dev(0L, pl::prec_t(g.bits));
        for (auto& r : rows) {
            std::optional<Real> ref_err;
            Complex ref = method_value(ref_method, r.z, ref_err);
            const Complex& series_side = o.method == "series" ? r.value : ref;
            Real denom = abs(series_side);
            if (denom.is_zero()) throw pl::PoleError("crosscheck hit a zero of the solution");
            Real dev = abs(r.value - ref) / denom;
            max_dev = max(max_dev, dev);
            json row;
            row["z"] = complex_json(r.z, digits);
            row["value"] = complex_json(r.value, digits);
            row["reference"] = complex_json(ref, digits);
            row["rel_dev"] = pl::format_real(dev, digits);
            data.push_back(std::move(row));
        }
        json stats;
        stats["method"] = o.method;
        stats["reference_method"] = ref_method;
        stats["points"] = rows.size();
        stats["max_rel_dev"] = pl::format_real(max_dev, digits);
        emit_json(g, pl::make_report("eval", true, stats, data, cfg));
        return 0;
    }

    if (format == "csv") {
        std::string out = csv_preamble(cfg);
        out += pl::csv_row({"z_re", "z_im", "value_re", "value_im", "est_error"});
        for (const auto& r : rows)
            out += pl::csv_row({pl::format_real(r.z.re, digits), pl::format_real(r.z.im, digits),
                                pl::format_real(r.value.re, digits),
                                pl::format_real(r.value.im, digits),
                                r.err ? pl::format_real(*r.err, digits) : ""});
        emit(g, out);
        return 0;
    }

    json data = json::array();
    for (const auto& r : rows) {
        json row;
        row["z"] = complex_json(r.z, digits);
        row["value"] = complex_json(r.value, digits);
        row["est_error"] = r.err ? json(pl::format_real(*r.err, digits)) : json(nullptr);
        data.push_back(std::move(row));
    }
    json stats;
    stats["method"] = o.method;
    stats["points"] = rows.size();
    emit_json(g, pl::make_report("eval", true, stats, data, cfg));
    return 0;
}

// ---- zeros -----------------------------------------------------------------

struct ZerosOpts {
    std::string lambda;
    std::string a = "-1";
    std::string b = "0";
    bool analytic = false;
    std::string init_file;
    long count = 20;
    long probes = 32;
    std::string x_hi;
    double ratio_tol = 0.1;
    double robinson_gate = 0.05;
};

Real auto_zero_window(const Real& q, long count, pl::prec_t bits) {
    return 3L * (count + 1L) * pow(q.with_prec(bits), count);
}

/// Checks that only make sense for specific data are recorded as skipped
/// rather than failing the run; `pass` aggregates the checks that ran.
template <typename Fn>
void run_check(json& data, const char* key, bool& pass, Fn&& fn) {
    try {
        data[key] = fn(pass);
    } catch (const pl::InsufficientData& e) {
        data[key] = json{{"skipped", e.what()}};
    } catch (const pl::ConvergenceError& e) {
        data[key] = json{{"degenerate", e.what()}};
    }
}

int run_zeros(const GlobalOpts& g, const ZerosOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);

    Real lam = checked_lambda(o.lambda, bits);
    Complex a = parse_complex(o.a, bits, "a");
    Complex b = parse_complex(o.b, bits, "b");
    pl::PantographParams params(lam, a, b);
    if (!params.is_real()) throw pl::InvalidInput("zeros needs real a and b");
    if (o.count < 0) throw pl::InvalidInput("count must be >= 0");
    if (o.analytic && !o.init_file.empty())
        throw pl::InvalidInput("choose either --analytic or --init-file, not both");
    if (!o.analytic && o.init_file.empty())
        throw pl::InvalidInput("zeros needs --analytic or --init-file");

    Real q = params.q().with_prec(bits);
    Real x_hi = o.x_hi.empty() ? auto_zero_window(q, o.count, bits)
                               : parse_real(o.x_hi, bits, "x_hi");

    std::string format = resolve_format(g, "csv");
    cfg["mode"] = o.analytic ? "analytic" : "init-file";
    if (!o.init_file.empty()) cfg["init_file"] = o.init_file;
    cfg["lambda"] = pl::format_real(lam, digits);
    cfg["a"] = complex_json(a, digits);
    cfg["b"] = complex_json(b, digits);
    cfg["count"] = o.count;
    cfg["probes"] = o.probes;
    cfg["x_hi"] = pl::format_real(x_hi, digits);
    cfg["ratio_tol"] = o.ratio_tol;
    cfg["robinson_gate"] = o.robinson_gate;
    cfg["format"] = format;

    std::vector<pl::ZeroRecord> zeros;
    if (o.count > 0) {
        if (o.analytic) {
            zeros = pl::enumerate_zeros(params, Real(0L, bits), x_hi, size_t(o.count), ctx,
                                        o.probes);
        } else {
            pl::InitialFunction phi =
                pl::initial_function_from_json(parse_json_file(o.init_file), ctx);
            pl::PiecewiseSolution sol = pl::continue_solution(params, phi, x_hi, ctx);
            zeros = pl::enumerate_zeros(sol, sol.x0(), x_hi, size_t(o.count), ctx);
        }
    }

    if (format == "csv") {
        emit(g, csv_preamble(cfg) + pl::zeros_csv(zeros, q, digits));
        return 0;
    }

    bool pass = true;
    json data;
    data["zeros"] = pl::zeros_json(zeros, digits);
    run_check(data, "ratio_check", pass, [&](bool& p) {
        pl::RatioReport rep = pl::ratio_check(zeros, q, o.ratio_tol);
        p = p && rep.pass;
        return pl::ratio_report_json(rep, digits);
    });
    run_check(data, "gamma_fit", pass, [&](bool&) {
        return pl::gamma_fit_json(pl::gamma_fit(zeros, q, ctx), digits);
    });
    if (o.analytic) {
        run_check(data, "robinson_check", pass, [&](bool& p) {
            pl::RobinsonReport rep = pl::robinson_check(zeros, q, o.robinson_gate);
            p = p && rep.pass;
            return pl::robinson_report_json(rep, digits);
        });
        run_check(data, "zhang_check", pass, [&](bool&) {
            return pl::zhang_report_json(pl::zhang_check(zeros, q, ctx), digits);
        });
    } else {
        data["robinson_check"] = json{{"skipped", "normalization applies to the analytic solution"}};
        data["zhang_check"] = json{{"skipped", "normalization applies to the analytic solution"}};
    }

    json stats;
    stats["found"] = zeros.size();
    stats["q"] = pl::format_real(q, digits);
    stats["x_hi"] = pl::format_real(x_hi, digits);
    emit_json(g, pl::make_report("zeros", pass, stats, data, cfg));
    return pass ? 0 : 1;
}

// ---- solve -----------------------------------------------------------------

struct SolveOpts {
    std::string lambda;
    std::string a = "-1";
    std::string b = "0";
    bool analytic = false;
    std::string init_file;
    std::string phi_const;
    std::string x0 = "1";
    std::string x_max;
    long samples = 200;
    bool grid_log = false;
};

int run_solve(const GlobalOpts& g, const SolveOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);

    Real lam = checked_lambda(o.lambda, bits);
    Complex a = parse_complex(o.a, bits, "a");
    Complex b = parse_complex(o.b, bits, "b");
    pl::PantographParams params(lam, a, b);

    int seeds = int(o.analytic) + int(!o.init_file.empty()) + int(!o.phi_const.empty());
    if (seeds != 1)
        throw pl::InvalidInput("solve needs exactly one of --analytic, --init-file, --phi-const");
    if (o.samples < 2) throw pl::InvalidInput("solve needs at least 2 samples");
    if (o.x_max.empty()) throw pl::InvalidInput("solve needs --x-max");

    std::string format = resolve_format(g, "csv");
    cfg["mode"] = o.analytic ? "analytic" : (!o.init_file.empty() ? "init-file" : "phi-const");
    if (!o.init_file.empty()) cfg["init_file"] = o.init_file;
    if (!o.phi_const.empty()) cfg["phi_const"] = o.phi_const;
    cfg["lambda"] = pl::format_real(lam, digits);
    cfg["a"] = complex_json(a, digits);
    cfg["b"] = complex_json(b, digits);
    cfg["samples"] = o.samples;
    cfg["grid_log"] = o.grid_log;
    cfg["format"] = format;

    pl::InitialFunction phi = [&] {
        if (o.analytic) {
            Real x0 = parse_real(o.x0, bits, "x0");
            return pl::InitialFunction::from_series(params, x0, ctx);
        }
        if (!o.init_file.empty())
            return pl::initial_function_from_json(parse_json_file(o.init_file), ctx);
        Real x0 = parse_real(o.x0, bits, "x0");
        return pl::InitialFunction::constant(lam * x0, x0,
                                             parse_complex(o.phi_const, bits, "phi-const"));
    }();
    cfg["x0"] = pl::format_real(phi.x0(), digits);
    Real x_max = parse_real(o.x_max, bits, "x_max");
    cfg["x_max"] = pl::format_real(x_max, digits);

    pl::PiecewiseSolution sol = pl::continue_solution(params, phi, x_max, ctx);

    std::vector<Real> xs;
    const Real& lo = sol.x0();
    const Real& hi = sol.x_end();
    long n = o.samples;
    if (o.grid_log) {
        if (!(lo > 0L)) throw pl::InvalidInput("--grid-log needs x0 > 0");
        Real ratio = pow(hi / lo, Real(1L, bits) / double(n - 1));
        Real x = lo;
        for (long i = 0; i < n; ++i, x = x * ratio) xs.push_back(min(x, hi));
    } else {
        Real step = (hi - lo) / double(n - 1);
        for (long i = 0; i < n; ++i) xs.push_back(min(lo + step * double(i), hi));
    }

    Real max_res(0L, bits);
    std::vector<Complex> ys;
    for (const auto& x : xs) {
        ys.push_back(sol.eval(x));
        Real scale = max(sol.local_scale(x), Real(1e-300, bits));
        max_res = max(max_res, abs(sol.residual(x)) / scale);
    }

    if (format == "csv") {
        std::string out = csv_preamble(cfg);
        out += "# x_end=" + pl::format_real(hi, digits) + "\n";
        out += "# global_err=" + pl::format_real(sol.global_err, digits) + "\n";
        out += "# max_residual=" + pl::format_real(max_res, digits) + "\n";
        out += pl::csv_row({"x", "y_re", "y_im"});
        for (size_t i = 0; i < xs.size(); ++i)
            out += pl::csv_row({pl::format_real(xs[i], digits), pl::format_real(ys[i].re, digits),
                                pl::format_real(ys[i].im, digits)});
        emit(g, out);
        return 0;
    }

    json data = json::array();
    for (size_t i = 0; i < xs.size(); ++i) {
        json row;
        row["x"] = pl::format_real(xs[i], digits);
        row["y"] = complex_json(ys[i], digits);
        data.push_back(std::move(row));
    }
    json stats;
    stats["x0"] = pl::format_real(lo, digits);
    stats["x_end"] = pl::format_real(hi, digits);
    stats["segments"] = sol.segments.size();
    stats["global_err"] = pl::format_real(sol.global_err, digits);
    stats["max_residual"] = pl::format_real(max_res, digits);
    emit_json(g, pl::make_report("solve", true, stats, data, cfg));
    return 0;
}

// ---- verify-lemma ----------------------------------------------------------

struct LemmaOpts {
    std::string lambda = "0.5";
    std::string x0 = "0.25";
    long k_max = 100;
};

int run_verify_lemma(const GlobalOpts& g, const LemmaOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);
    if (resolve_format(g, "json") != "json")
        throw pl::InvalidInput("verify-lemma emits JSON; drop --format csv");

    Real lam = checked_lambda(o.lambda, bits);
    Real x0 = parse_real(o.x0, bits, "x0");
    cfg["lambda"] = pl::format_real(lam, digits);
    cfg["x0"] = pl::format_real(x0, digits);
    cfg["k_max"] = o.k_max;
    cfg["format"] = "json";

    pl::LemmaZeroMap map = pl::lemma_zero_map(x0, lam, o.k_max, ctx);
    long k_gate = std::max(5L, map.k_min);

    bool pass = true;
    Real max_dev(0L, bits), max_ratio(0L, bits);
    json data = json::array();
    for (const auto& e : map.entries) {
        Real dev = abs(e.C / map.limit - 1L);
        json row;
        row["k"] = e.k;
        row["x"] = pl::format_real(e.x, digits);
        row["C"] = pl::format_real(e.C, digits);
        row["deviation"] = pl::format_real(dev, digits);
        if (e.k >= k_gate) {
            Real bound = 3L * log(Real(e.k, bits)) / e.k;
            row["bound"] = pl::format_real(bound, digits);
            if (dev > bound) pass = false;
            max_dev = max(max_dev, dev);
            max_ratio = max(max_ratio, dev / bound);
        } else {
            row["bound"] = nullptr;
        }
        data.push_back(std::move(row));
    }

    json stats;
    stats["k_min"] = map.k_min;
    stats["k_gate"] = k_gate;
    stats["k_max"] = o.k_max;
    stats["limit"] = pl::format_real(map.limit, digits);
    stats["max_deviation"] = pl::format_real(max_dev, digits);
    stats["max_deviation_to_bound"] = pl::format_real(max_ratio, digits);
    emit_json(g, pl::make_report("verify-lemma", pass, stats, data, cfg));
    return pass ? 0 : 1;
}

// ---- verify-growth ---------------------------------------------------------

struct GrowthOpts {
    long order = 1;
    std::vector<std::string> terms;
    std::string initial;
    std::string x0 = "1";
    std::string x_max = "65536";
    std::string fit_lo;
    std::string fit_hi;
    long poly_nmax = 24;
    double gamma_tol = 0.25;
};

pl::HighOrderTerm parse_term(const std::string& s, pl::prec_t bits) {
    std::vector<std::string> f = split_fields(s, ',');
    if (f.size() < 2 || f.size() > 3)
        throw pl::InvalidInput("term must be a,alpha[,k], got '" + s + "'");
    pl::HighOrderTerm t{Complex(parse_real(f[0], bits, "term a")),
                        parse_real(f[1], bits, "term alpha"), 0};
    if (f.size() == 3) {
        try {
            t.k = std::stol(f[2]);
        } catch (const std::exception&) {
            throw pl::InvalidInput("term derivative order must be an integer, got '" + f[2] + "'");
        }
    }
    return t;
}

int run_verify_growth(const GlobalOpts& g, const GrowthOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);
    if (resolve_format(g, "json") != "json")
        throw pl::InvalidInput("verify-growth emits JSON; drop --format csv");

    std::vector<std::string> term_specs =
        o.terms.empty() ? std::vector<std::string>{"1,0.5,0"} : o.terms;
    std::vector<pl::HighOrderTerm> terms;
    for (const auto& s : term_specs) terms.push_back(parse_term(s, bits));
    pl::HighOrderFDE fde(o.order, terms);

    Real x0 = parse_real(o.x0, bits, "x0");
    if (!(x0 > 0L)) throw pl::InvalidInput("x0 must be positive");
    Real x_max = parse_real(o.x_max, bits, "x_max");
    Real fit_lo = o.fit_lo.empty() ? x0 : parse_real(o.fit_lo, bits, "fit_lo");
    Real fit_hi = o.fit_hi.empty() ? x_max : parse_real(o.fit_hi, bits, "fit_hi");

    std::vector<Real> seed_vals;
    if (o.initial.empty()) {
        seed_vals.emplace_back(1L, bits);
        for (long k = 1; k < o.order; ++k) seed_vals.emplace_back(0L, bits);
    } else {
        for (const auto& s : split_fields(o.initial, ','))
            seed_vals.push_back(parse_real(s, bits, "initial value"));
    }
    if (long(seed_vals.size()) != o.order)
        throw pl::InvalidInput("initial needs one value per derivative order 0.." +
                               std::to_string(o.order - 1));

    cfg["order"] = o.order;
    cfg["terms"] = term_specs;
    json seeds_cfg = json::array();
    for (const auto& v : seed_vals) seeds_cfg.push_back(pl::format_real(v, digits));
    cfg["initial"] = seeds_cfg;
    cfg["x0"] = pl::format_real(x0, digits);
    cfg["x_max"] = pl::format_real(x_max, digits);
    cfg["fit_lo"] = pl::format_real(fit_lo, digits);
    cfg["fit_hi"] = pl::format_real(fit_hi, digits);
    cfg["poly_nmax"] = o.poly_nmax;
    cfg["gamma_tol"] = o.gamma_tol;
    cfg["format"] = "json";

    pl::GrowthBounds gb = pl::bounds(fde);
    std::vector<long> poly = pl::polynomial_solution_condition(fde, o.poly_nmax, ctx);

    Real seed_lo = fde.alpha_min() * x0;
    std::vector<pl::InitialFunction> seeds;
    for (const auto& v : seed_vals)
        seeds.push_back(pl::InitialFunction::constant(seed_lo, x0, Complex(v)));
    pl::HighOrderSolution sol = pl::continue_high_order(fde, seeds, x_max, ctx);
    std::optional<pl::EnvelopeFit> fit;
    std::string fit_failure;
    try {
        fit = pl::envelope_fit(sol, fit_lo, fit_hi, ctx);
    } catch (const pl::InsufficientData& e) {
        fit_failure = e.what();
    }

    Real lower_w = gb.lower_gamma_threshold * (1.0 - o.gamma_tol);
    Real upper_w = gb.upper_gamma_threshold * (1.0 + o.gamma_tol);
    std::string verdict = !fit                        ? "unknown"
                          : fit->gamma_hat < lower_w  ? "below"
                          : fit->gamma_hat > upper_w  ? "above"
                                                      : "inside";
    bool pass = verdict == "inside";

    json bounds_j;
    bounds_j["alpha_min"] = pl::format_real(gb.alpha_min, digits);
    bounds_j["alpha_max"] = pl::format_real(gb.alpha_max, digits);
    bounds_j["order"] = gb.m;
    bounds_j["lower_gamma_threshold"] = pl::format_real(gb.lower_gamma_threshold, digits);
    bounds_j["upper_gamma_threshold"] = pl::format_real(gb.upper_gamma_threshold, digits);

    json env;
    if (fit) {
        env["gamma_hat"] = pl::format_real(fit->gamma_hat, digits);
        env["c_hat"] = pl::format_real(fit->c_hat, digits);
        env["residual_rms"] = pl::format_real(fit->residual_rms, digits);
        env["points"] = fit->points;
        env["oscillatory"] = fit->oscillatory;
        env["x_lo"] = pl::format_real(fit->x_lo, digits);
        env["x_hi"] = pl::format_real(fit->x_hi, digits);
        env["classify"] = gb.classify(fit->gamma_hat);
    } else {
        env["skipped"] = fit_failure;
    }
    env["verdict"] = verdict;

    json data;
    data["bounds"] = std::move(bounds_j);
    data["polynomial_degrees"] = poly;
    data["envelope"] = std::move(env);
    data["empirical_probe"] = true;

    json stats;
    if (fit) stats["gamma_hat"] = pl::format_real(fit->gamma_hat, digits);
    stats["lower_gamma_threshold"] = pl::format_real(gb.lower_gamma_threshold, digits);
    stats["upper_gamma_threshold"] = pl::format_real(gb.upper_gamma_threshold, digits);
    stats["gamma_tol"] = o.gamma_tol;
    stats["verdict"] = verdict;
    stats["x_end"] = pl::format_real(sol.x_end(), digits);
    stats["global_err"] = pl::format_real(sol.global_err, digits);
    emit_json(g, pl::make_report("verify-growth", pass, stats, data, cfg));
    return pass ? 0 : 1;
}

// ---- fit -------------------------------------------------------------------

struct FitOpts {
    std::string lambda;
    std::string a = "-1";
    std::string b = "0";
    bool analytic = false;
    std::string zeros_csv;
    long count = 20;
    long probes = 32;
    std::string x_hi;
    double ratio_tol = 0.1;
    double robinson_gate = 0.05;
};

int run_fit(const GlobalOpts& g, const FitOpts& o, json& cfg) {
    pl::PrecContext ctx(g.bits, g.target);
    pl::prec_t bits = pl::prec_t(g.bits);
    size_t digits = size_t(g.digits);
    if (resolve_format(g, "json") != "json")
        throw pl::InvalidInput("fit emits JSON; drop --format csv");

    Real lam = checked_lambda(o.lambda, bits);
    if (o.analytic == !o.zeros_csv.empty())
        throw pl::InvalidInput("fit needs exactly one of --analytic or --zeros-csv");

    Real q = (1L / lam).with_prec(bits);
    cfg["mode"] = o.analytic ? "analytic" : "zeros-csv";
    if (!o.zeros_csv.empty()) cfg["zeros_csv"] = o.zeros_csv;
    cfg["lambda"] = pl::format_real(lam, digits);
    cfg["ratio_tol"] = o.ratio_tol;
    cfg["robinson_gate"] = o.robinson_gate;
    cfg["format"] = "json";

    std::vector<pl::ZeroRecord> zeros;
    if (o.analytic) {
        Complex a = parse_complex(o.a, bits, "a");
        Complex b = parse_complex(o.b, bits, "b");
        pl::PantographParams params(lam, a, b);
        if (!params.is_real()) throw pl::InvalidInput("fit needs real a and b");
        Real x_hi = o.x_hi.empty() ? auto_zero_window(q, o.count, bits)
                                   : parse_real(o.x_hi, bits, "x_hi");
        cfg["a"] = complex_json(a, digits);
        cfg["b"] = complex_json(b, digits);
        cfg["count"] = o.count;
        cfg["probes"] = o.probes;
        cfg["x_hi"] = pl::format_real(x_hi, digits);
        zeros = pl::enumerate_zeros(params, Real(0L, bits), x_hi, size_t(o.count), ctx, o.probes);
    } else {
        zeros = pl::zeros_from_csv(read_file(o.zeros_csv), bits);
    }

    bool pass = true;
    json data;
    data["count"] = zeros.size();
    pl::RatioReport ratio = pl::ratio_check(zeros, q, o.ratio_tol);
    pass = pass && ratio.pass;
    data["ratio_check"] = pl::ratio_report_json(ratio, digits);
    data["gamma_fit"] = pl::gamma_fit_json(pl::gamma_fit(zeros, q, ctx), digits);
    if (o.analytic) {
        pl::RobinsonReport rob = pl::robinson_check(zeros, q, o.robinson_gate);
        pass = pass && rob.pass;
        data["robinson_check"] = pl::robinson_report_json(rob, digits);
        run_check(data, "zhang_check", pass, [&](bool&) {
            return pl::zhang_report_json(pl::zhang_check(zeros, q, ctx), digits);
        });
    } else {
        data["robinson_check"] = json{{"skipped", "normalization applies to the analytic solution"}};
        data["zhang_check"] = json{{"skipped", "normalization applies to the analytic solution"}};
    }

    json stats;
    stats["count"] = zeros.size();
    stats["q"] = pl::format_real(q, digits);
    stats["ratio_pass"] = ratio.pass;
    emit_json(g, pl::make_report("fit", pass, stats, data, cfg));
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    CLI::App app{"configurable-precision toolkit for the pantograph equation "
                 "y'(x) = a y(lambda x) + b y(x)"};
    app.set_version_flag("--version", pantolab::version_string);
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value configuration file; subcommand keys as eval.lambda=0.5; "
                   "command-line flags take precedence");
    app.add_option("--bits", g.bits, "working precision in bits")
        ->envname("PANTOLAB_BITS")
        ->check(CLI::Range(64L, 65536L))
        ->capture_default_str();
    app.add_option("--target", g.target, "target relative error")->capture_default_str();
    app.add_option("--digits", g.digits, "significant digits in artifacts")
        ->check(CLI::Range(2L, 10000L))
        ->capture_default_str();
    app.add_option("--format", g.format, "artifact format (default depends on the subcommand)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--output", g.output, "write the artifact to this file instead of stdout");
    app.add_option("--threads", g.threads, "worker thread cap for contour quadrature")
        ->check(CLI::Range(1L, 64L))
        ->capture_default_str();
    app.add_option("--seed", g.seed, "random seed, echoed into artifacts")->capture_default_str();

    EvalOpts eo;
    CLI::App* eval = app.add_subcommand(
        "eval", "evaluate a solution by series, contour, asymptotics, or growth envelope");
    eval->fallthrough();
    eval->add_option("--method", eo.method, "evaluation method")
        ->check(CLI::IsMember({"series", "contour", "asy", "km-envelope"}))
        ->capture_default_str();
    eval->add_option("--lambda", eo.lambda, "delay factor in (0,1)")->required();
    eval->add_option("--a", eo.a, "delayed-term coefficient, re or re,im")->capture_default_str();
    eval->add_option("--b", eo.b, "undelayed-term coefficient, re or re,im")
        ->capture_default_str();
    eval->add_option("--form", eo.form, "contour kernel form")
        ->check(CLI::IsMember({"direct", "reflected"}))
        ->capture_default_str();
    eval->add_option("--z", eo.zs,
                     "evaluation point, re or re,im; repeatable; write --z=-3 for negatives");
    eval->add_option("--grid", eo.grid, "evaluation grid lo:hi:n on the real axis");
    eval->add_flag("--crosscheck", eo.crosscheck,
                   "evaluate an independent reference method and report deviations (JSON)");

    ZerosOpts zo;
    CLI::App* zeros = app.add_subcommand("zeros", "enumerate positive zeros and run the "
                                                  "asymptotic-law checks");
    zeros->fallthrough();
    zeros->add_option("--lambda", zo.lambda, "delay factor in (0,1)")->required();
    zeros->add_option("--a", zo.a, "delayed-term coefficient (real)")->capture_default_str();
    zeros->add_option("--b", zo.b, "undelayed-term coefficient (real)")->capture_default_str();
    zeros->add_flag("--analytic", zo.analytic, "use the power-series solution with y(0) = 1");
    zeros->add_option("--init-file", zo.init_file,
                      "JSON initial-function document; zeros of the continued solution");
    zeros->add_option("--count", zo.count, "number of zeros requested")->capture_default_str();
    zeros->add_option("--probes", zo.probes, "scan probes per expected inter-zero gap")
        ->check(CLI::Range(4L, 4096L))
        ->capture_default_str();
    zeros->add_option("--x-hi", zo.x_hi, "scan upper bound (default 3(count+1) q^count)");
    zeros->add_option("--ratio-tol", zo.ratio_tol, "ratio-check tolerance")
        ->capture_default_str();
    zeros->add_option("--robinson-gate", zo.robinson_gate, "robinson-check tail gate")
        ->capture_default_str();

    SolveOpts so;
    CLI::App* solve = app.add_subcommand("solve", "continue initial data by the method of steps "
                                                  "and sample the solution");
    solve->fallthrough();
    solve->add_option("--lambda", so.lambda, "delay factor in (0,1)")->required();
    solve->add_option("--a", so.a, "delayed-term coefficient, re or re,im")
        ->capture_default_str();
    solve->add_option("--b", so.b, "undelayed-term coefficient, re or re,im")
        ->capture_default_str();
    solve->add_flag("--analytic", so.analytic,
                    "seed with the power-series restriction to [lambda x0, x0]");
    solve->add_option("--init-file", so.init_file, "JSON initial-function document");
    solve->add_option("--phi-const", so.phi_const, "constant initial data, re or re,im");
    solve->add_option("--x0", so.x0, "continuation start (analytic and phi-const seeds)")
        ->capture_default_str();
    solve->add_option("--x-max", so.x_max, "continue the solution to this abscissa")->required();
    solve->add_option("--samples", so.samples, "number of output samples")
        ->check(CLI::Range(2L, 1000000L))
        ->capture_default_str();
    solve->add_flag("--grid-log", so.grid_log, "sample on a geometric grid");

    LemmaOpts lo;
    CLI::App* lemma = app.add_subcommand("verify-lemma", "check the zero-counting map against "
                                                         "its limit constant");
    lemma->fallthrough();
    lemma->add_option("--lambda", lo.lambda, "delay factor in (0,1)")->capture_default_str();
    lemma->add_option("--x0", lo.x0, "fractional index offset in [0,1)")->capture_default_str();
    lemma->add_option("--k-max", lo.k_max, "largest index solved")
        ->check(CLI::Range(1L, 100000L))
        ->capture_default_str();

    GrowthOpts go;
    CLI::App* growth = app.add_subcommand("verify-growth", "probe a higher-order rescaled "
                                                           "equation against its growth bounds");
    growth->fallthrough();
    growth->add_option("--order", go.order, "derivative order m of the left-hand side")
        ->check(CLI::Range(1L, 8L))
        ->capture_default_str();
    growth->add_option("--term", go.terms,
                       "right-hand-side term a,alpha[,k]; repeatable (default 1,0.5,0)");
    growth->add_option("--initial", go.initial,
                       "comma-separated constant seed values for y, y', ... (default 1,0,...)");
    growth->add_option("--x0", go.x0, "continuation start")->capture_default_str();
    growth->add_option("--x-max", go.x_max, "continue the solution to this abscissa")
        ->capture_default_str();
    growth->add_option("--fit-lo", go.fit_lo, "envelope fit window start (default x0)");
    growth->add_option("--fit-hi", go.fit_hi, "envelope fit window end (default x-max)");
    growth->add_option("--poly-nmax", go.poly_nmax, "largest degree probed for polynomial "
                                                    "solutions")
        ->check(CLI::Range(0L, 10000L))
        ->capture_default_str();
    growth->add_option("--gamma-tol", go.gamma_tol,
                       "fractional widening of the [lower, upper] gamma band")
        ->check(CLI::Range(0.0, 10.0))
        ->capture_default_str();

    FitOpts fo;
    CLI::App* fit = app.add_subcommand("fit", "run the ratio/gamma/robinson fits on a zero set");
    fit->fallthrough();
    fit->add_option("--lambda", fo.lambda, "delay factor in (0,1)")->required();
    fit->add_option("--a", fo.a, "delayed-term coefficient (real, analytic mode)")
        ->capture_default_str();
    fit->add_option("--b", fo.b, "undelayed-term coefficient (real, analytic mode)")
        ->capture_default_str();
    fit->add_flag("--analytic", fo.analytic, "enumerate zeros of the power-series solution");
    fit->add_option("--zeros-csv", fo.zeros_csv, "ingest a previously emitted zeros CSV");
    fit->add_option("--count", fo.count, "zeros to enumerate in analytic mode")
        ->capture_default_str();
    fit->add_option("--probes", fo.probes, "scan probes per expected inter-zero gap")
        ->check(CLI::Range(4L, 4096L))
        ->capture_default_str();
    fit->add_option("--x-hi", fo.x_hi, "scan upper bound (default 3(count+1) q^count)");
    fit->add_option("--ratio-tol", fo.ratio_tol, "ratio-check tolerance")->capture_default_str();
    fit->add_option("--robinson-gate", fo.robinson_gate, "robinson-check tail gate")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    json cfg = base_config(g, app.get_subcommands().front()->get_name());
    if (app.got_subcommand(eval)) return run_guarded(g, cfg, [&] { return run_eval(g, eo, cfg); });
    if (app.got_subcommand(zeros))
        return run_guarded(g, cfg, [&] { return run_zeros(g, zo, cfg); });
    if (app.got_subcommand(solve))
        return run_guarded(g, cfg, [&] { return run_solve(g, so, cfg); });
    if (app.got_subcommand(lemma))
        return run_guarded(g, cfg, [&] { return run_verify_lemma(g, lo, cfg); });
    if (app.got_subcommand(growth))
        return run_guarded(g, cfg, [&] { return run_verify_growth(g, go, cfg); });
    return run_guarded(g, cfg, [&] { return run_fit(g, fo, cfg); });
}
