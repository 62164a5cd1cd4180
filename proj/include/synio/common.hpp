#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synio {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fatal ingestion problem (unreadable stream, bad header, ...).
class IngestError : public Error {
  public:
    using Error::Error;
};

/// Violated precondition or invalid configuration.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A covariance block (or similar input) is singular beyond tolerance.
class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

/// Conditional covariance collapsed: the variables are (numerically)
/// deterministically related.
class DeterministicRelationshipError : public DegenerateInputError {
  public:
    using DegenerateInputError::DegenerateInputError;
};

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

/// Declared country/industry universes plus the industry -> sector map.
/// Orders are the file orders; codes must be unique.
struct Registry {
    std::vector<std::string> countries;
    std::vector<std::string> industries;
    std::map<std::string, int> country_index;
    std::map<std::string, int> industry_index;
    std::map<std::string, std::string> sector_of;  // industry -> sector name

    bool has_country(std::string_view c) const { return country_index.count(std::string(c)) > 0; }
    bool has_industry(std::string_view i) const { return industry_index.count(std::string(i)) > 0; }
    const std::string& sector(const std::string& industry) const;

    static Registry from_lists(std::vector<std::string> countries, std::vector<std::string> industries,
                               std::map<std::string, std::string> sectors = {});
    /// Loads the three small delimited registry files (countries, industries,
    /// industry -> sector). The sector file is optional (empty path).
    static Registry load(const std::filesystem::path& countries_file, const std::filesystem::path& industries_file,
                         const std::filesystem::path& sectors_file);
};

// ---------------------------------------------------------------------------
// Hashing & seed derivation
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& file);
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic per-task sub-seed: every randomized quantity in the pipeline
/// derives from (master seed, stage name, task key) through this function, so
/// partial re-runs reproduce full-run values.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::string_view key);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index);

/// Owned deterministic generator (splitmix64 stream + Box-Muller normals).
/// Self-contained so that identical seeds give identical draws regardless of
/// standard-library internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_unit();
    /// Standard normal draw.
    double next_normal();
    /// Unbiased uniform integer in [0, n); n must be positive.
    std::uint64_t next_below(std::uint64_t n);

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// In-place Fisher-Yates driven by `rng`.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

// ---------------------------------------------------------------------------
// Delimited text
// ---------------------------------------------------------------------------

/// Splits one record on the given delimiter. No quoting rules: the formats
/// consumed and emitted here are plain codes and numbers. Trailing '\r' is
/// stripped (CRLF input).
std::vector<std::string> split_delimited(std::string_view line, char delim);

/// Picks '\t' when the header line contains one, ',' otherwise.
char detect_delimiter(std::string_view header_line);

/// Shortest round-trippable decimal representation ("%.17g").
std::string format_double(double v);

double parse_double(const std::string& field, bool* ok);
long parse_long(const std::string& field, bool* ok);

/// Writes `content` to `file`, creating parent directories.
void write_text_file(const std::filesystem::path& file, const std::string& content);
std::string read_text_file(const std::filesystem::path& file);

}  // namespace synio
