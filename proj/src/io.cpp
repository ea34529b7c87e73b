#include "hardiag/io.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/montecarlo.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace hardiag::io {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what)
{
    const std::string t = trim(s);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw InputError("cannot parse number '" + t + "' in " + what);
    }
    if (pos != t.size()) throw InputError("trailing characters in number '" + t + "' in " + what);
    return v;
}

int to_int(const std::string& s, const std::string& what)
{
    const double v = to_double(s, what);
    if (v != std::floor(v)) throw InputError("expected an integer in " + what + ", got '" + s + "'");
    return static_cast<int>(v);
}

std::vector<double> number_list(const std::string& s, char sep, const std::string& what)
{
    std::vector<double> out;
    for (const auto& part : split(s, sep))
        if (!trim(part).empty()) out.push_back(to_double(part, what));
    return out;
}

// key=value pairs separated by sep.
std::map<std::string, std::string> keyvals(const std::string& s, char sep, const std::string& what)
{
    std::map<std::string, std::string> out;
    for (const auto& part : split(s, sep)) {
        if (trim(part).empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw InputError("expected key=value in " + what + ", got '" + part + "'");
        out[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
    }
    return out;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& what)
{
    const auto it = kv.find(key);
    if (it == kv.end()) throw InputError(what + ": missing '" + key + "'");
    return it->second;
}

json parse_json_text(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(what + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

json load_json(const std::string& ref, const std::string& what)
{
    const std::string t = trim(ref);
    if (!t.empty() && (t[0] == '{' || t[0] == '[')) return parse_json_text(t, what);
    const std::string path = (!t.empty() && t[0] == '@') ? t.substr(1) : t;
    return parse_json_text(read_file(path), what + " (" + path + ")");
}

Eigen::MatrixXd json_matrix(const json& j, const std::string& what)
{
    if (!j.is_array() || j.empty()) throw InputError(what + ": expected a nonempty array of rows");
    const bool flat = !j[0].is_array();
    const Eigen::Index rows = flat ? 1 : static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = flat ? static_cast<Eigen::Index>(j.size()) : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = flat ? j : j[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw InputError(what + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw InputError(what + ": non-numeric entry");
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

Eigen::VectorXd json_vector(const json& j, const std::string& what)
{
    if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
    if (!j.is_array()) throw InputError(what + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(what + ": non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_ref(const std::string& ref, int n, const std::string& what)
{
    const std::string t = trim(ref);
    if (t.rfind("powers:", 0) == 0) {
        const auto powers = number_list(t.substr(7), '|', what);
        Eigen::MatrixXd U(n, static_cast<Eigen::Index>(powers.size()));
        for (std::size_t c = 0; c < powers.size(); ++c)
            for (int j = 1; j <= n; ++j) U(j - 1, static_cast<Eigen::Index>(c)) = std::pow(double(j), powers[c]);
        return U;
    }
    if (!t.empty() && t[0] == '@') return read_matrix_csv(t.substr(1));
    return parse_matrix_text(t);
}

Eigen::MatrixXd gaussian_design(int n, int k, std::uint64_t seed)
{
    Eigen::MatrixXd X(n, k);
    for (int c = 0; c < k; ++c) {
        RandomStream s(seed, static_cast<std::uint64_t>(c));
        X.col(c) = s.normal_vector(n);
    }
    return X;
}

DesignProblem design_from_json(const json& j, const std::optional<std::string>& R_text,
                               const std::optional<std::string>& r_text)
{
    if (!j.is_object()) throw InputError("design: top level must be an object");
    if (!j.contains("n") || !j["n"].is_number_integer()) throw InputError("design: integer 'n' required");
    const int n = j["n"].get<int>();
    if (n < 2) throw InputError("design: n must be at least 2");
    if (!j.contains("X") || !j["X"].is_object()) throw InputError("design: object 'X' required");
    const json& xs = j["X"];
    Eigen::MatrixXd extra;
    if (j.contains("extra")) extra = json_matrix(j["extra"], "design.extra");
    Eigen::MatrixXd X;
    if (xs.contains("polynomial")) {
        X = polynomial_design(n, xs["polynomial"].get<int>(), extra);
    } else if (xs.contains("cyclical")) {
        X = cyclical_design(n, xs["cyclical"].get<double>(), extra);
    } else if (xs.contains("matrix")) {
        X = json_matrix(xs["matrix"], "design.X.matrix");
        if (X.rows() != n) throw InputError("design: X.matrix must have n rows");
        if (extra.size() > 0) {
            if (extra.rows() != n) throw InputError("design: extra must have n rows");
            Eigen::MatrixXd both(n, X.cols() + extra.cols());
            both << X, extra;
            X = both;
        }
    } else {
        throw InputError("design: X needs one of polynomial, cyclical, matrix");
    }
    Eigen::MatrixXd R;
    if (R_text) R = parse_matrix_text(*R_text);
    else if (j.contains("R")) R = json_matrix(j["R"], "design.R");
    else throw InputError("design: R required (in the file or via --R)");
    Eigen::VectorXd r;
    if (r_text) r = parse_matrix_text(*r_text).reshaped();
    else if (j.contains("r")) r = json_vector(j["r"], "design.r");
    else r = Eigen::VectorXd::Zero(R.rows());
    return DesignProblem(X, R, r);
}

SpectralModel model_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind")) throw InputError("grid: each member needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    auto coeffs = [&](const char* key) {
        std::vector<double> v;
        if (j.contains(key))
            for (const auto& e : j[key]) v.push_back(e.get<double>());
        return v;
    };
    if (kind == "white") return SpectralModel::white();
    if (kind == "ar") return SpectralModel::ar(coeffs("phi"));
    if (kind == "arma") return SpectralModel::arma(coeffs("phi"), coeffs("theta"));
    if (kind == "spiked") return SpectralModel::spiked_ar2(j.at("radius").get<double>(), j.at("angle").get<double>());
    if (kind == "ext") {
        const double c1 = j.at("c1").get<double>();
        return ar2ext(model_from_json(j.at("base")), c1, 1.0 - c1);
    }
    if (kind == "tabulated") return SpectralModel::tabulated(coeffs("values"));
    throw InputError("grid: unknown kind '" + kind + "'");
}

} // namespace

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Eigen::MatrixXd parse_matrix_text(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::string norm = text;
    for (char& c : norm)
        if (c == '\n') c = ';';
    for (const auto& line : split(norm, ';')) {
        std::string t = line;
        for (char& c : t)
            if (c == ',' || c == '\t' || c == '\r') c = ' ';
        std::istringstream is(t);
        std::vector<double> row;
        std::string tok;
        while (is >> tok) row.push_back(to_double(tok, "matrix text"));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("empty matrix text");
    const std::size_t cols = rows[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw InputError("matrix text: row " + std::to_string(r + 1) + " has wrong length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path)
{
    return parse_matrix_text(read_file(path));
}

DesignProblem parse_design(const std::string& spec, const std::optional<std::string>& R_text,
                           const std::optional<std::string>& r_text)
{
    const std::string t = trim(spec);
    const auto colon = t.find(':');
    const std::string head = colon == std::string::npos ? "" : t.substr(0, colon);
    if (head == "poly" || head == "cyclical" || head == "gauss") {
        const auto kv = keyvals(t.substr(colon + 1), ',', "design shorthand");
        const int n = to_int(need(kv, "n", "design"), "design n");
        Eigen::MatrixXd X;
        if (head == "poly") X = polynomial_design(n, to_int(need(kv, "kF", "design"), "design kF"));
        else if (head == "cyclical") X = cyclical_design(n, to_double(need(kv, "omega", "design"), "design omega"));
        else X = gaussian_design(n, to_int(need(kv, "k", "design"), "design k"),
                                 static_cast<std::uint64_t>(to_double(need(kv, "seed", "design"), "design seed")));
        if (!R_text) throw InputError("design shorthand needs --R");
        const Eigen::MatrixXd R = parse_matrix_text(*R_text);
        const Eigen::VectorXd r = r_text ? Eigen::VectorXd(parse_matrix_text(*r_text).reshaped())
                                         : Eigen::VectorXd(Eigen::VectorXd::Zero(R.rows()));
        return DesignProblem(X, R, r);
    }
    return design_from_json(load_json(t, "design"), R_text, r_text);
}

SpectralModel parse_model(const std::string& text)
{
    const std::string t = trim(text);
    if (t == "white") return SpectralModel::white();
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw InputError("model '" + t + "': expected kind:parameters");
    const std::string kind = t.substr(0, colon), rest = t.substr(colon + 1);
    if (kind == "ext") {
        const auto at = rest.find('@');
        if (at == std::string::npos) throw InputError("ext model needs c1@base");
        const double c1 = to_double(rest.substr(0, at), "ext weight");
        return ar2ext(parse_model(rest.substr(at + 1)), c1, 1.0 - c1);
    }
    if (kind == "ar1" || kind == "ar2" || kind == "ar") {
        const auto phi = number_list(rest, ',', "ar coefficients");
        if (kind == "ar1" && phi.size() != 1) throw InputError("ar1 takes one coefficient");
        if (kind == "ar2" && phi.size() != 2) throw InputError("ar2 takes two coefficients");
        return SpectralModel::ar(phi);
    }
    if (kind == "arma") {
        const auto slash = rest.find('/');
        if (slash == std::string::npos) throw InputError("arma needs phi/theta");
        return SpectralModel::arma(number_list(rest.substr(0, slash), ',', "arma phi"),
                                   number_list(rest.substr(slash + 1), ',', "arma theta"));
    }
    if (kind == "spiked") {
        const auto p = number_list(rest, ',', "spiked parameters");
        if (p.size() != 2) throw InputError("spiked takes radius,angle");
        return SpectralModel::spiked_ar2(p[0], p[1]);
    }
    throw InputError("unknown model kind '" + kind + "'");
}

CovModelGrid parse_grid(const std::string& text, const DesignProblem& dp)
{
    const std::string t = trim(text);
    if (t == "boundary:ar1") return default_boundary_grid(false);
    if (t == "boundary:ar1neg") return default_boundary_grid(true);
    if (t.rfind("bseq:", 0) == 0) {
        const auto kv = keyvals(t.substr(5), ',', "bseq grid");
        const double gamma = to_double(need(kv, "gamma", "bseq"), "bseq gamma");
        CovModelGrid g;
        g.label = t;
        for (double m : number_list(need(kv, "m", "bseq"), '|', "bseq m"))
            g.members.push_back(boundary_sequence(gamma, dp.m0lin(), static_cast<int>(m)));
        if (g.members.empty()) throw InputError("bseq grid: no members");
        return g;
    }
    const bool is_file = !t.empty() && (t[0] == '@' || t[0] == '[' || std::filesystem::exists(t));
    CovModelGrid g;
    g.label = t;
    if (is_file) {
        const json j = load_json(t, "grid");
        if (!j.is_array()) throw InputError("grid file: expected a JSON list");
        for (const auto& e : j) g.members.push_back(model_from_json(e));
    } else {
        for (const auto& part : split(t, ';'))
            if (!trim(part).empty()) g.members.push_back(parse_model(part));
    }
    if (g.members.empty()) throw InputError("grid is empty");
    return g;
}

Estimator parse_estimator(const std::string& text, const DesignProblem& dp)
{
    const std::string t = trim(text);
    const auto parts = split(t, ':');
    const std::string head = parts[0];
    const int n = dp.n();
    auto kernel_part = [&](const std::string& name, const std::string& bw) {
        KernelOmega k;
        if (name == "custom") {
            k.weights = matrix_ref(bw, n, "custom W");
            return k;
        }
        k.kernel = parse_kernel(name);
        const auto kv = keyvals(bw, ',', "kernel bandwidth");
        if (kv.count("M")) k.bandwidth = to_double(kv.at("M"), "bandwidth M");
        else if (kv.count("b")) k.bandwidth = to_double(kv.at("b"), "bandwidth b") * n;
        else throw InputError("kernel needs M=... or b=...");
        return k;
    };
    if (head == "kernel") {
        if (parts.size() < 3) throw InputError("kernel estimator: kernel:<name>:M=<value>");
        std::string bw = parts[2];
        for (std::size_t i = 3; i < parts.size(); ++i) bw += ":" + parts[i];
        return Estimator(dp, kernel_part(parts[1], bw));
    }
    if (head == "eicker") {
        EickerOmega e;
        const std::string arg = t.size() > 7 ? t.substr(7) : "identity";
        if (arg != "identity") e.weight = matrix_ref(arg, n, "Eicker weight");
        return Estimator(dp, e);
    }
    if (head == "am") {
        if (parts.size() != 1) throw InputError("am takes no parameters");
        return Estimator(dp, AmOmega{});
    }
    if (head == "vogelsang") {
        const auto kv = keyvals(t.substr(10), ',', "vogelsang");
        VogelsangOmega v;
        v.c = to_double(need(kv, "c", "vogelsang"), "vogelsang c");
        v.variant = to_int(need(kv, "i", "vogelsang"), "vogelsang i");
        const std::string V = need(kv, "V", "vogelsang");
        if (V == "A") v.V = VogelsangV::A;
        else if (V == "I") v.V = VogelsangV::I;
        else throw InputError("vogelsang V must be A or I");
        v.U = matrix_ref(need(kv, "U", "vogelsang"), n, "vogelsang U");
        return Estimator(dp, v);
    }
    if (head == "bvfixed") {
        if (parts.size() < 4) throw InputError("bvfixed estimator: bvfixed:<kernel>:M=<value>:c=<value>[:U=...]");
        BvFixedOmega b;
        b.lrv = kernel_part(parts[1], parts[2]);
        for (std::size_t i = 3; i < parts.size(); ++i) {
            std::string seg = parts[i];
            if (seg.rfind("U=", 0) == 0)
                for (std::size_t j = i + 1; j < parts.size(); ++j, ++i) seg += ":" + parts[j];
            const auto eq = seg.find('=');
            if (eq == std::string::npos) throw InputError("bvfixed: expected key=value, got '" + seg + "'");
            const std::string key = seg.substr(0, eq), val = seg.substr(eq + 1);
            if (key == "c") b.c = to_double(val, "bvfixed c");
            else if (key == "U") b.U = matrix_ref(val, n, "bvfixed U");
            else throw InputError("bvfixed: unknown key '" + key + "'");
        }
        return Estimator(dp, b);
    }
    if (head == "bvdd") {
        const json j = load_json(t.substr(5), "bvdd parameters");
        BvDataDrivenOmega b;
        for (const char* key : {"a", "abar", "h", "p"})
            if (!j.contains(key)) throw InputError(std::string("bvdd parameters: missing '") + key + "'");
        b.a = json_vector(j["a"], "bvdd a");
        b.abar = json_vector(j["abar"], "bvdd abar");
        b.h = json_vector(j["h"], "bvdd h");
        b.p = json_vector(j["p"], "bvdd p");
        if (j.contains("U")) {
            if (j["U"].is_string()) b.U = matrix_ref(j["U"].get<std::string>(), n, "bvdd U");
            else b.U = json_matrix(j["U"], "bvdd U");
        }
        return Estimator(dp, b);
    }
    throw InputError("unknown estimator '" + t + "'");
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string design_hash(const DesignProblem& dp)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const int dims[3] = {dp.n(), dp.k(), dp.q()};
    mix(dims, sizeof dims);
    mix(dp.X().data(), sizeof(double) * dp.X().size());
    mix(dp.R().data(), sizeof(double) * dp.R().size());
    mix(dp.r().data(), sizeof(double) * dp.r().size());
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace hardiag::io
