#include "synio/common.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace synio {

const std::string& Registry::sector(const std::string& industry) const {
    auto it = sector_of.find(industry);
    if (it == sector_of.end()) {
        static const std::string other = "other";
        return other;
    }
    return it->second;
}

Registry Registry::from_lists(std::vector<std::string> countries, std::vector<std::string> industries,
                              std::map<std::string, std::string> sectors) {
    Registry r;
    r.countries = std::move(countries);
    r.industries = std::move(industries);
    r.sector_of = std::move(sectors);
    for (std::size_t i = 0; i < r.countries.size(); ++i) {
        if (!r.country_index.emplace(r.countries[i], static_cast<int>(i)).second)
            throw ValidationError("duplicate country code: " + r.countries[i]);
    }
    for (std::size_t i = 0; i < r.industries.size(); ++i) {
        if (!r.industry_index.emplace(r.industries[i], static_cast<int>(i)).second)
            throw ValidationError("duplicate industry code: " + r.industries[i]);
    }
    return r;
}

namespace {

std::vector<std::string> read_code_column(const std::filesystem::path& file, const std::string& expected_header) {
    std::ifstream in(file);
    if (!in) throw IngestError("cannot open registry file: " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestError("empty registry file: " + file.string());
    char delim = detect_delimiter(line);
    auto header = split_delimited(line, delim);
    if (header.empty() || header[0] != expected_header)
        throw IngestError(file.string() + ": expected header starting with '" + expected_header + "'");
    std::vector<std::string> codes;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_delimited(line, delim);
        if (fields.empty() || fields[0].empty())
            throw IngestError(file.string() + ":" + std::to_string(lineno) + ": empty code");
        codes.push_back(fields[0]);
    }
    return codes;
}

}  // namespace

Registry Registry::load(const std::filesystem::path& countries_file, const std::filesystem::path& industries_file,
                        const std::filesystem::path& sectors_file) {
    auto countries = read_code_column(countries_file, "country");
    auto industries = read_code_column(industries_file, "industry");

    std::map<std::string, std::string> sectors;
    if (!sectors_file.empty()) {
        static const std::set<std::string> allowed = {"primary", "secondary", "tertiary", "other"};
        std::ifstream in(sectors_file);
        if (!in) throw IngestError("cannot open sector file: " + sectors_file.string());
        std::string line;
        if (!std::getline(in, line)) throw IngestError("empty sector file: " + sectors_file.string());
        char delim = detect_delimiter(line);
        auto header = split_delimited(line, delim);
        if (header.size() < 2 || header[0] != "industry" || header[1] != "sector")
            throw IngestError(sectors_file.string() + ": expected header industry,sector");
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto fields = split_delimited(line, delim);
            if (fields.size() < 2)
                throw IngestError(sectors_file.string() + ":" + std::to_string(lineno) + ": need industry,sector");
            if (!allowed.count(fields[1]))
                throw IngestError(sectors_file.string() + ":" + std::to_string(lineno) + ": unknown sector '" +
                                  fields[1] + "'");
            sectors[fields[0]] = fields[1];
        }
    }
    auto reg = from_lists(std::move(countries), std::move(industries), std::move(sectors));
    for (const auto& [ind, sec] : reg.sector_of) {
        if (!reg.has_industry(ind))
            throw ValidationError("sector map mentions unregistered industry: " + ind);
    }
    return reg;
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot open file for hashing: " + file.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::string_view key) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a64(stage));
    h = splitmix64(h ^ fnv1a64(key));
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(index));
    return derive_seed(master, stage, std::string_view(buf));
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 shifted into (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw ValidationError("Rng::next_below(0)");
    std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_delimited(std::string_view line, char delim) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

char detect_delimiter(std::string_view header_line) {
    return header_line.find('\t') != std::string_view::npos ? '\t' : ',';
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& field, bool* ok) {
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    bool good = end != begin && *end == '\0' && errno == 0 && !field.empty();
    if (ok) *ok = good;
    return good ? v : 0.0;
}

long parse_long(const std::string& field, bool* ok) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    bool good = ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
    if (ok) *ok = good;
    return good ? v : 0;
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError("cannot open for writing: " + file.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IngestError("write failed: " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot open for reading: " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace synio
