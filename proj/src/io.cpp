#include "distlasso/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "distlasso/error.hpp"

namespace distlasso::io {

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

template <class T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw InvalidInput("truncated dataset file: " + path.string());
    return to_little(v);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& tok, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(tok);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw InvalidInput(path.string() + ":" + std::to_string(line) + ": '" + t +
                           "' is not a number");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, data.n());
    put<std::uint64_t>(out, data.p());
    for (double v : data.x.data()) put<double>(out, v);
    for (double v : data.y) put<double>(out, v);
    if (!out) throw InvalidInput("failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open dataset: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw InvalidInput("not a DLDS dataset file: " + path.string());
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        throw InvalidInput("unsupported dataset version " + std::to_string(version) + " in " +
                           path.string());
    const auto n = get<std::uint64_t>(in, path);
    const auto p = get<std::uint64_t>(in, path);
    if (n == 0 || p == 0) throw InvalidInput("dataset header has n or p equal to zero");

    const auto expected = kHeaderBytes + (n * p + n) * sizeof(double);
    std::error_code ec;
    const auto actual = std::filesystem::file_size(path, ec);
    if (ec || actual != expected)
        throw InvalidInput("dataset file size does not match its header: " + path.string());

    Dataset d;
    std::vector<double> xs(n * p);
    for (double& v : xs) v = get<double>(in, path);
    d.x = Matrix(n, p, std::move(xs));
    d.y.resize(n);
    for (double& v : d.y) v = get<double>(in, path);
    d.validate();
    return d;
}

Dataset read_csv_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open dataset: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty CSV file: " + path.string());
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(trim(tok));
    }
    if (header.size() < 2 || header[0] != "y")
        throw InvalidInput("CSV header must be y,x1,...,xp: " + path.string());
    for (std::size_t j = 1; j < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j))
            throw InvalidInput("CSV header column " + std::to_string(j + 1) + " must be x" +
                               std::to_string(j) + ": " + path.string());
    const std::size_t p = header.size() - 1;

    std::vector<double> xs;
    Vector ys;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, path, lineno));
        if (row.size() != p + 1)
            throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(p + 1) + " fields");
        ys.push_back(row[0]);
        xs.insert(xs.end(), row.begin() + 1, row.end());
    }
    Dataset d;
    const std::size_t n = ys.size();
    d.x = Matrix(n, p, std::move(xs));
    d.y = std::move(ys);
    d.validate();
    return d;
}

void write_csv_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "y";
    for (std::size_t j = 1; j <= data.p(); ++j) out << ",x" << j;
    out << "\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        out << format_double(data.y[i]);
        for (double v : data.x.row(i)) out << ',' << format_double(v);
        out << "\n";
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InvalidInput("dataset not found: " + path.string());
    if (path.extension() == ".csv") return read_csv_dataset(path);
    return read_dataset(path);
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + " is not key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

KeyValues synth_metadata(const SynthConfig& cfg, const GroundTruth& truth) {
    KeyValues kv;
    kv["format"] = "DLDS";
    kv["n"] = std::to_string(cfg.n);
    kv["p"] = std::to_string(cfg.p);
    kv["s"] = std::to_string(cfg.s);
    kv["cov"] = cfg.cov.name();
    kv["rho"] = format_double(cfg.cov.rho);
    kv["sigma_y"] = format_double(cfg.sigma_y);
    kv["amplitude"] = format_double(cfg.amplitude);
    kv["seed"] = std::to_string(cfg.seed);
    kv["response"] = to_string(cfg.response);
    std::string supp, beta;
    for (std::size_t j : truth.support) {
        if (!supp.empty()) supp += ',';
        supp += std::to_string(j);
    }
    for (std::size_t j = 0; j < truth.beta_star.size(); ++j) {
        if (j) beta += ',';
        beta += format_double(truth.beta_star[j]);
    }
    kv["support"] = supp;
    kv["beta_star"] = beta;
    return kv;
}

void write_coefficients(const std::filesystem::path& path, std::span<const double> beta) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "j,beta\n";
    for (std::size_t j = 0; j < beta.size(); ++j) out << j << ',' << format_double(beta[j]) << '\n';
}

}  // namespace distlasso::io
