#include "synio/iotensor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

namespace synio::io {

namespace {

constexpr const char* kOutputKey = "";  // input slot of an output series

}  // namespace

const std::vector<std::string>& transaction_fields() {
    static const std::vector<std::string> f = {"year",         "source_country", "source_industry",
                                               "dest_country", "dest_industry",  "value"};
    return f;
}

const std::vector<std::string>& final_demand_fields() {
    static const std::vector<std::string> f = {"year", "source_country", "source_industry", "demand_country",
                                               "value"};
    return f;
}

ColumnSchema ColumnSchema::from_header(const std::vector<std::string>& header,
                                       const std::vector<std::string>& required_fields) {
    ColumnSchema s;
    for (const auto& field : required_fields) {
        auto it = std::find(header.begin(), header.end(), field);
        if (it == header.end()) throw IngestError("header is missing required column '" + field + "'");
        int idx = static_cast<int>(it - header.begin());
        s.index_of[field] = idx;
        s.max_index = std::max(s.max_index, idx);
    }
    return s;
}

int ColumnSchema::at(const std::string& field) const {
    auto it = index_of.find(field);
    if (it == index_of.end()) throw ValidationError("schema does not map column '" + field + "'");
    return it->second;
}

// ---------------------------------------------------------------------------

TransactionTable::TransactionTable(Registry registry, std::optional<YearSpan> configured_period)
    : registry_(std::move(registry)), configured_(configured_period) {}

void TransactionTable::add(int year, const std::string& source_country, const std::string& source_industry,
                           const std::string& dest_country, const std::string& dest_industry, double value) {
    inflow_[{dest_country, dest_industry, source_industry, year}] += value;
    sales_[{source_country, source_industry, year}] += value;
    if (!any_ || year < min_year_) min_year_ = year;
    if (!any_ || year > max_year_) max_year_ = year;
    any_ = true;
}

double TransactionTable::inflow(const std::string& country, const std::string& industry,
                                const std::string& input_industry, int year) const {
    auto it = inflow_.find({country, industry, input_industry, year});
    return it == inflow_.end() ? 0.0 : it->second;
}

double TransactionTable::intermediate_sales(const std::string& country, const std::string& industry, int year) const {
    auto it = sales_.find({country, industry, year});
    return it == sales_.end() ? 0.0 : it->second;
}

YearSpan TransactionTable::span() const {
    if (configured_) return *configured_;
    if (!any_) throw ValidationError("transaction table covers no years");
    return {min_year_, max_year_};
}

FinalDemandTable::FinalDemandTable(Registry registry, std::optional<YearSpan> configured_period)
    : registry_(std::move(registry)), configured_(configured_period) {}

void FinalDemandTable::add(int year, const std::string& source_country, const std::string& source_industry,
                           double value) {
    demand_[{source_country, source_industry, year}] += value;
    if (!any_ || year < min_year_) min_year_ = year;
    if (!any_ || year > max_year_) max_year_ = year;
    any_ = true;
}

double FinalDemandTable::demand(const std::string& country, const std::string& industry, int year) const {
    auto it = demand_.find({country, industry, year});
    return it == demand_.end() ? 0.0 : it->second;
}

YearSpan FinalDemandTable::span() const {
    if (configured_) return *configured_;
    if (!any_) throw ValidationError("final-demand table covers no years");
    return {min_year_, max_year_};
}

// ---------------------------------------------------------------------------

namespace {

struct RowContext {
    const ColumnSchema& schema;
    const Registry& registry;
    const ParseOptions& options;
    ParseReport& report;
    std::size_t lineno;

    bool fail(const std::string& message) {
        report.issues.push_back({lineno, message});
        return false;
    }

    bool get_year(const std::vector<std::string>& fields, int col, int* year) {
        bool ok = false;
        long y = parse_long(fields[static_cast<std::size_t>(col)], &ok);
        if (!ok) return fail("unparseable year '" + fields[static_cast<std::size_t>(col)] + "'");
        *year = static_cast<int>(y);
        return true;
    }

    bool get_value(const std::vector<std::string>& fields, int col, double* value) {
        bool ok = false;
        double v = parse_double(fields[static_cast<std::size_t>(col)], &ok);
        if (!ok || !std::isfinite(v)) return fail("unparseable value '" + fields[static_cast<std::size_t>(col)] + "'");
        if (v < 0.0) return fail("negative flow value");
        *value = v;
        return true;
    }

    bool check_country(const std::string& code) {
        if (!registry.has_country(code)) return fail("unknown country code '" + code + "'");
        return true;
    }

    bool check_industry(const std::string& code) {
        if (!registry.has_industry(code)) return fail("unknown industry code '" + code + "'");
        return true;
    }

    /// Applies the deflator hook; false means the row was rejected.
    bool deflate(int year, double* value) {
        if (options.deflator.empty()) return true;
        auto it = options.deflator.find(year);
        if (it == options.deflator.end()) return fail("no deflator for year " + std::to_string(year));
        if (!(it->second > 0.0)) return fail("nonpositive deflator for year " + std::to_string(year));
        *value /= it->second;
        return true;
    }
};

template <typename RowFn>
ParseReport parse_rows(std::istream& stream, const ColumnSchema& schema, std::size_t first_line_number,
                       RowFn&& row_fn) {
    if (!stream) throw IngestError("unreadable input stream");
    ParseReport report;
    std::string line;
    std::size_t lineno = first_line_number - 1;
    char delim = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        if (delim == 0) delim = detect_delimiter(line);
        ++report.rows_read;
        auto fields = split_delimited(line, delim);
        if (static_cast<int>(fields.size()) <= schema.max_index) {
            report.issues.push_back({lineno, "too few columns"});
            continue;
        }
        row_fn(fields, lineno, report);
    }
    if (stream.bad()) throw IngestError("stream failed mid-read");
    return report;
}

}  // namespace

TransactionParseResult parse_transactions(std::istream& stream, const ColumnSchema& schema, const Registry& registry,
                                          const ParseOptions& options, std::size_t first_line_number) {
    TransactionTable table(registry, options.period);
    int c_year = schema.at("year"), c_sc = schema.at("source_country"), c_si = schema.at("source_industry");
    int c_dc = schema.at("dest_country"), c_di = schema.at("dest_industry"), c_val = schema.at("value");

    ParseReport report = parse_rows(stream, schema, first_line_number,
                                    [&](const std::vector<std::string>& f, std::size_t lineno, ParseReport& rep) {
        RowContext ctx{schema, registry, options, rep, lineno};
        int year = 0;
        double value = 0.0;
        if (!ctx.get_year(f, c_year, &year) || !ctx.get_value(f, c_val, &value)) return;
        const auto& sc = f[static_cast<std::size_t>(c_sc)];
        const auto& si = f[static_cast<std::size_t>(c_si)];
        const auto& dc = f[static_cast<std::size_t>(c_dc)];
        const auto& di = f[static_cast<std::size_t>(c_di)];
        if (!ctx.check_country(sc) || !ctx.check_industry(si) || !ctx.check_country(dc) || !ctx.check_industry(di))
            return;
        if (options.period && !options.period->contains(year)) {
            ++rep.rows_out_of_period;
            return;
        }
        if (!ctx.deflate(year, &value)) return;
        table.add(year, sc, si, dc, di, value);
        ++rep.rows_accepted;
    });
    return {std::move(table), std::move(report)};
}

FinalDemandParseResult parse_final_demand(std::istream& stream, const ColumnSchema& schema, const Registry& registry,
                                          const ParseOptions& options, std::size_t first_line_number) {
    FinalDemandTable table(registry, options.period);
    int c_year = schema.at("year"), c_sc = schema.at("source_country"), c_si = schema.at("source_industry");
    int c_dc = schema.at("demand_country"), c_val = schema.at("value");

    ParseReport report = parse_rows(stream, schema, first_line_number,
                                    [&](const std::vector<std::string>& f, std::size_t lineno, ParseReport& rep) {
        RowContext ctx{schema, registry, options, rep, lineno};
        int year = 0;
        double value = 0.0;
        if (!ctx.get_year(f, c_year, &year) || !ctx.get_value(f, c_val, &value)) return;
        const auto& sc = f[static_cast<std::size_t>(c_sc)];
        const auto& si = f[static_cast<std::size_t>(c_si)];
        const auto& dc = f[static_cast<std::size_t>(c_dc)];
        if (!ctx.check_country(sc) || !ctx.check_industry(si) || !ctx.check_country(dc)) return;
        if (options.period && !options.period->contains(year)) {
            ++rep.rows_out_of_period;
            return;
        }
        if (!ctx.deflate(year, &value)) return;
        table.add(year, sc, si, value);
        ++rep.rows_accepted;
    });
    return {std::move(table), std::move(report)};
}

namespace {

std::string first_line(std::istream& stream) {
    std::string line;
    if (!std::getline(stream, line)) throw IngestError("empty input: no header line");
    return line;
}

}  // namespace

TransactionParseResult parse_transactions_with_header(std::istream& stream, const Registry& registry,
                                                      const ParseOptions& options) {
    auto header = first_line(stream);
    auto schema = ColumnSchema::from_header(split_delimited(header, detect_delimiter(header)), transaction_fields());
    return parse_transactions(stream, schema, registry, options, 2);
}

FinalDemandParseResult parse_final_demand_with_header(std::istream& stream, const Registry& registry,
                                                      const ParseOptions& options) {
    auto header = first_line(stream);
    auto schema = ColumnSchema::from_header(split_delimited(header, detect_delimiter(header)), final_demand_fields());
    return parse_final_demand(stream, schema, registry, options, 2);
}

// ---------------------------------------------------------------------------

namespace {

void require_codes(const Registry& reg, const std::string& country, const std::string& industry) {
    if (!reg.has_country(country)) throw ValidationError("unregistered country code '" + country + "'");
    if (!reg.has_industry(industry)) throw ValidationError("unregistered industry code '" + industry + "'");
}

}  // namespace

FlowSeries total_input_inflow(const TransactionTable& table, const std::string& input_industry,
                              const std::string& industry, const std::string& country) {
    require_codes(table.registry(), country, industry);
    if (!table.registry().has_industry(input_industry))
        throw ValidationError("unregistered industry code '" + input_industry + "'");
    YearSpan span = table.span();
    FlowSeries s;
    s.country = country;
    s.industry = industry;
    s.input_industry = input_industry;
    s.first_year = span.first;
    s.values.resize(static_cast<std::size_t>(span.length()));
    for (int y = span.first; y <= span.last; ++y)
        s.values[static_cast<std::size_t>(y - span.first)] = table.inflow(country, industry, input_industry, y);
    return s;
}

FlowSeries total_output(const TransactionTable& table, const FinalDemandTable& demand, const std::string& industry,
                        const std::string& country) {
    require_codes(table.registry(), country, industry);
    YearSpan span = table.span();
    if (!demand.empty()) {
        YearSpan d = demand.span();
        if (d.first != span.first || d.last != span.last) {
            span.first = std::min(span.first, d.first);
            span.last = std::max(span.last, d.last);
        }
    }
    FlowSeries s;
    s.country = country;
    s.industry = industry;
    s.first_year = span.first;
    s.values.resize(static_cast<std::size_t>(span.length()));
    for (int y = span.first; y <= span.last; ++y)
        s.values[static_cast<std::size_t>(y - span.first)] =
            table.intermediate_sales(country, industry, y) + demand.demand(country, industry, y);
    return s;
}

FluctuationSeries log_fluctuations(const FlowSeries& series) {
    if (series.values.size() < 2) throw ValidationError("log fluctuations need at least 2 years");
    FluctuationSeries f;
    f.country = series.country;
    f.industry = series.industry;
    f.input_industry = series.input_industry;
    f.first_year = series.first_year + 1;
    std::size_t n = series.values.size() - 1;
    f.values.resize(n, 0.0);
    f.valid.resize(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        double prev = series.values[k];
        double next = series.values[k + 1];
        if (prev > 0.0 && next > 0.0) {
            f.values[k] = std::log(next / prev);
            f.valid[k] = true;
        }
    }
    return f;
}

void FluctuationStore::add(FluctuationSeries s) {
    std::string input = s.input_industry ? *s.input_industry : kOutputKey;
    series[{s.country, s.industry, input}] = std::move(s);
}

const FluctuationSeries* FluctuationStore::find(const std::string& country, const std::string& industry,
                                                const std::optional<std::string>& input_industry) const {
    auto it = series.find({country, industry, input_industry ? *input_industry : kOutputKey});
    return it == series.end() ? nullptr : &it->second;
}

FluctuationStore FluctuationStore::build(const TransactionTable& table, const FinalDemandTable& demand) {
    FluctuationStore store;
    const Registry& reg = table.registry();
    for (const auto& country : reg.countries) {
        for (const auto& industry : reg.industries) {
            store.add(log_fluctuations(total_output(table, demand, industry, country)));
            for (const auto& input : reg.industries)
                store.add(log_fluctuations(total_input_inflow(table, input, industry, country)));
        }
    }
    return store;
}

pid::PooledSample pool_cluster_samples(const FluctuationStore& store, const std::vector<std::string>& cluster_countries,
                                       const std::string& industry, const std::pair<std::string, std::string>& pair,
                                       std::size_t min_rows) {
    pid::PooledSample sample;
    sample.industry = industry;
    sample.input_pair = pair;

    std::vector<std::string> countries = cluster_countries;
    std::sort(countries.begin(), countries.end());
    for (const auto& country : countries) {
        const FluctuationSeries* fx1 = store.find(country, industry, pair.first);
        const FluctuationSeries* fx2 = store.find(country, industry, pair.second);
        const FluctuationSeries* fy = store.find(country, industry, std::nullopt);
        if (!fx1 || !fx2 || !fy)
            throw ValidationError("missing fluctuation series for country '" + country + "', industry '" + industry +
                                  "'");
        if (fx1->values.empty() || fx2->values.empty() || fy->values.empty()) continue;
        // Align the three series on calendar years.
        int lo = std::max({fx1->first_year, fx2->first_year, fy->first_year});
        int hi = std::min({fx1->year_of(fx1->values.size() - 1), fx2->year_of(fx2->values.size() - 1),
                           fy->year_of(fy->values.size() - 1)});
        for (int y = lo; y <= hi; ++y) {
            std::size_t k1 = static_cast<std::size_t>(y - fx1->first_year);
            std::size_t k2 = static_cast<std::size_t>(y - fx2->first_year);
            std::size_t ky = static_cast<std::size_t>(y - fy->first_year);
            if (!fx1->valid[k1] || !fx2->valid[k2] || !fy->valid[ky]) continue;
            sample.x1.push_back(fx1->values[k1]);
            sample.x2.push_back(fx2->values[k2]);
            sample.y.push_back(fy->values[ky]);
            sample.provenance.emplace_back(country, y);
        }
    }
    sample.below_minimum = sample.rows() < min_rows;
    return sample;
}

// ---------------------------------------------------------------------------

namespace {

struct CanonicalRow {
    std::string country, industry, input;
    int year;
    double value;
    bool valid;

    bool operator<(const CanonicalRow& o) const {
        return std::tie(country, industry, input, year) < std::tie(o.country, o.industry, o.input, o.year);
    }
};

std::string rows_to_delimited(std::vector<CanonicalRow> rows) {
    std::sort(rows.begin(), rows.end());
    std::string out = "country,industry,input_industry,year,value,valid\n";
    for (const auto& r : rows) {
        out += r.country;
        out += ',';
        out += r.industry;
        out += ',';
        out += r.input;
        out += ',';
        out += std::to_string(r.year);
        out += ',';
        out += format_double(r.value);
        out += ',';
        out += r.valid ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace

std::string flow_table_to_delimited(const std::vector<FlowSeries>& series) {
    std::vector<CanonicalRow> rows;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.values.size(); ++k)
            rows.push_back({s.country, s.industry, s.input_industry.value_or(""), s.year_of(k), s.values[k], true});
    return rows_to_delimited(std::move(rows));
}

std::string fluctuation_table_to_delimited(const std::vector<FluctuationSeries>& series) {
    std::vector<CanonicalRow> rows;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.values.size(); ++k)
            rows.push_back(
                {s.country, s.industry, s.input_industry.value_or(""), s.year_of(k), s.values[k], bool(s.valid[k])});
    return rows_to_delimited(std::move(rows));
}

}  // namespace synio::io
