#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "synio/common.hpp"
#include "synio/gpid.hpp"

namespace synio::io {

struct YearSpan {
    int first = 0;
    int last = 0;
    bool contains(int y) const { return y >= first && y <= last; }
    int length() const { return last >= first ? last - first + 1 : 0; }
};

/// Field name -> zero-based column index.
struct ColumnSchema {
    std::map<std::string, int> index_of;
    int max_index = -1;

    static ColumnSchema from_header(const std::vector<std::string>& header,
                                    const std::vector<std::string>& required_fields);
    int at(const std::string& field) const;
};

const std::vector<std::string>& transaction_fields();   // year, source_country, source_industry, dest_country, dest_industry, value
const std::vector<std::string>& final_demand_fields();  // year, source_country, source_industry, demand_country, value

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct ParseReport {
    std::size_t rows_read = 0;
    std::size_t rows_accepted = 0;
    std::size_t rows_out_of_period = 0;
    std::vector<ParseIssue> issues;
    std::size_t rows_rejected() const { return issues.size(); }
};

struct ParseOptions {
    std::optional<YearSpan> period;   // rows outside are counted, not errors
    std::map<int, double> deflator;   // year -> divisor; empty disables the hook
};

/// Flow aggregates from industry-to-industry transaction records. Values with
/// the same aggregation key are summed at parse time; source countries are
/// already summed out of the inflow view.
class TransactionTable {
  public:
    TransactionTable(Registry registry, std::optional<YearSpan> configured_period);

    void add(int year, const std::string& source_country, const std::string& source_industry,
             const std::string& dest_country, const std::string& dest_industry, double value);

    /// Inflow into (country, industry) from input_industry in one year,
    /// summed over all source countries.
    double inflow(const std::string& country, const std::string& industry, const std::string& input_industry,
                  int year) const;
    /// All intermediate sales of (country, industry) in one year.
    double intermediate_sales(const std::string& country, const std::string& industry, int year) const;

    const Registry& registry() const { return registry_; }
    /// Configured period, or the observed year range when none was set.
    YearSpan span() const;
    bool empty() const { return inflow_.empty() && sales_.empty(); }

  private:
    Registry registry_;
    std::optional<YearSpan> configured_;
    int min_year_ = 0, max_year_ = 0;
    bool any_ = false;
    std::map<std::tuple<std::string, std::string, std::string, int>, double> inflow_;
    std::map<std::tuple<std::string, std::string, int>, double> sales_;
};

class FinalDemandTable {
  public:
    FinalDemandTable(Registry registry, std::optional<YearSpan> configured_period);
    void add(int year, const std::string& source_country, const std::string& source_industry, double value);
    double demand(const std::string& country, const std::string& industry, int year) const;
    const Registry& registry() const { return registry_; }
    YearSpan span() const;
    bool empty() const { return demand_.empty(); }

  private:
    Registry registry_;
    std::optional<YearSpan> configured_;
    int min_year_ = 0, max_year_ = 0;
    bool any_ = false;
    std::map<std::tuple<std::string, std::string, int>, double> demand_;
};

struct TransactionParseResult {
    TransactionTable table;
    ParseReport report;
};

struct FinalDemandParseResult {
    FinalDemandTable table;
    ParseReport report;
};

/// Core parsers take an explicit column mapping; the stream holds data rows
/// only. Malformed rows become line-tagged issues, never silent drops.
/// first_line_number positions issue line numbers when the stream is an
/// excerpt (e.g. the header was already consumed).
TransactionParseResult parse_transactions(std::istream& stream, const ColumnSchema& schema, const Registry& registry,
                                          const ParseOptions& options = {}, std::size_t first_line_number = 1);
FinalDemandParseResult parse_final_demand(std::istream& stream, const ColumnSchema& schema, const Registry& registry,
                                          const ParseOptions& options = {}, std::size_t first_line_number = 1);

/// Convenience wrappers: first stream line is a header naming the canonical
/// fields in any order (comma or tab separated).
TransactionParseResult parse_transactions_with_header(std::istream& stream, const Registry& registry,
                                                      const ParseOptions& options = {});
FinalDemandParseResult parse_final_demand_with_header(std::istream& stream, const Registry& registry,
                                                      const ParseOptions& options = {});

// ---------------------------------------------------------------------------
// Series
// ---------------------------------------------------------------------------

/// Dense year-indexed flow values over a contiguous span. A year with no
/// records is a present zero, distinct from years outside the span.
struct FlowSeries {
    std::string country;
    std::string industry;
    std::optional<std::string> input_industry;  // absent: output series
    int first_year = 0;
    std::vector<double> values;

    int year_of(std::size_t index) const { return first_year + static_cast<int>(index); }
};

/// Log growth rates between consecutive years. Entry k covers the pair
/// (first_year - 1 + k, first_year + k), i.e. first_year is the first year
/// with a growth observation. An entry is valid only when both adjacent flows
/// are strictly positive.
struct FluctuationSeries {
    std::string country;
    std::string industry;
    std::optional<std::string> input_industry;
    int first_year = 0;
    std::vector<double> values;
    std::vector<bool> valid;

    int year_of(std::size_t index) const { return first_year + static_cast<int>(index); }
};

FlowSeries total_input_inflow(const TransactionTable& table, const std::string& input_industry,
                              const std::string& industry, const std::string& country);
FlowSeries total_output(const TransactionTable& table, const FinalDemandTable& demand, const std::string& industry,
                        const std::string& country);
FluctuationSeries log_fluctuations(const FlowSeries& series);

/// All fluctuation series for every (country, industry, input) combination in
/// the registry, including each industry as its own input, plus the output
/// series (empty input key).
struct FluctuationStore {
    std::map<std::tuple<std::string, std::string, std::string>, FluctuationSeries> series;

    static FluctuationStore build(const TransactionTable& table, const FinalDemandTable& demand);
    void add(FluctuationSeries s);
    const FluctuationSeries* find(const std::string& country, const std::string& industry,
                                  const std::optional<std::string>& input_industry) const;
};

inline constexpr std::size_t kDefaultMinPoolRows = 200;

/// Rows are country-year observations where all three fluctuations are valid,
/// sorted by (country code, year). Samples smaller than min_rows are flagged,
/// not rejected.
pid::PooledSample pool_cluster_samples(const FluctuationStore& store, const std::vector<std::string>& cluster_countries,
                                       const std::string& industry, const std::pair<std::string, std::string>& pair,
                                       std::size_t min_rows = kDefaultMinPoolRows);

/// Canonical delimited tables, column order
/// (country, industry, input_industry, year, value, valid), rows sorted.
std::string flow_table_to_delimited(const std::vector<FlowSeries>& series);
std::string fluctuation_table_to_delimited(const std::vector<FluctuationSeries>& series);

}  // namespace synio::io
