#include "doctest.h"

#include <cmath>
#include <sstream>

#include "synio/common.hpp"
#include "synio/iotensor.hpp"

using namespace synio;
using namespace synio::io;

namespace {

Registry test_registry() {
    return Registry::from_lists({"CHN", "MEX", "USA"}, {"AGR", "MIN", "TEX"},
                                {{"AGR", "primary"}, {"MIN", "primary"}, {"TEX", "secondary"}});
}

TransactionParseResult parse_tx(const std::string& body, const ParseOptions& options = {}) {
    std::istringstream in("year,source_country,source_industry,dest_country,dest_industry,value\n" + body);
    return parse_transactions_with_header(in, test_registry(), options);
}

FinalDemandParseResult parse_fd(const std::string& body, const ParseOptions& options = {}) {
    std::istringstream in("year,source_country,source_industry,demand_country,value\n" + body);
    return parse_final_demand_with_header(in, test_registry(), options);
}

}  // namespace

TEST_SUITE("iotensor") {

TEST_CASE("well-formed rows map to aggregated flows") {
    auto res = parse_tx("2000,USA,AGR,MEX,TEX,1500.0\n");
    CHECK(res.report.rows_read == 1);
    CHECK(res.report.rows_accepted == 1);
    CHECK(res.report.rows_rejected() == 0);
    CHECK(res.table.inflow("MEX", "TEX", "AGR", 2000) == 1500.0);
    CHECK(res.table.intermediate_sales("USA", "AGR", 2000) == 1500.0);
}

TEST_CASE("empty stream yields an empty table") {
    auto res = parse_tx("");
    CHECK(res.report.rows_read == 0);
    CHECK(res.report.rows_rejected() == 0);
    CHECK(res.table.empty());
    CHECK_THROWS_AS(res.table.span(), ValidationError);
}

TEST_CASE("malformed rows are collected with line numbers") {
    auto res = parse_tx(
        "2000,USA,AGR,MEX,TEX,-5\n"
        "2000,USA,AGR,MEX,TEX\n"
        "abcd,USA,AGR,MEX,TEX,1\n"
        "2000,ZZZ,AGR,MEX,TEX,1\n"
        "2000,USA,QQQ,MEX,TEX,1\n"
        "2000,USA,AGR,MEX,TEX,nanx\n"
        "2001,CHN,MIN,USA,TEX,7\n");
    CHECK(res.report.rows_read == 7);
    CHECK(res.report.rows_accepted == 1);
    REQUIRE(res.report.rows_rejected() == 6);
    CHECK(res.report.issues[0].line == 2);  // header is line 1
    CHECK(res.report.issues[0].message == "negative flow value");
    CHECK(res.report.issues[1].message == "too few columns");
    CHECK(res.report.issues[3].message.find("ZZZ") != std::string::npos);
    CHECK(res.table.inflow("USA", "TEX", "MIN", 2001) == 7.0);
}

TEST_CASE("period filtering counts rows without flagging them as errors") {
    ParseOptions opt;
    opt.period = YearSpan{2000, 2001};
    auto res = parse_tx(
        "1999,USA,AGR,MEX,TEX,1\n"
        "2000,USA,AGR,MEX,TEX,2\n"
        "2002,USA,AGR,MEX,TEX,3\n",
        opt);
    CHECK(res.report.rows_accepted == 1);
    CHECK(res.report.rows_out_of_period == 2);
    CHECK(res.report.rows_rejected() == 0);
    auto span = res.table.span();
    CHECK(span.first == 2000);
    CHECK(span.last == 2001);
}

TEST_CASE("deflator hook rescales values by year") {
    ParseOptions opt;
    opt.deflator = {{2000, 1.0}, {2001, 2.0}};
    auto res = parse_tx(
        "2000,USA,AGR,MEX,TEX,10\n"
        "2001,USA,AGR,MEX,TEX,10\n");
    CHECK(res.table.inflow("MEX", "TEX", "AGR", 2001) == 10.0);  // off by default
    auto defl = parse_tx(
        "2000,USA,AGR,MEX,TEX,10\n"
        "2001,USA,AGR,MEX,TEX,10\n"
        "2003,USA,AGR,MEX,TEX,10\n",
        opt);
    CHECK(defl.table.inflow("MEX", "TEX", "AGR", 2000) == 10.0);
    CHECK(defl.table.inflow("MEX", "TEX", "AGR", 2001) == 5.0);
    CHECK(defl.report.rows_rejected() == 1);  // 2003 has no deflator entry
}

TEST_CASE("input inflow sums over source countries") {
    auto res = parse_tx(
        "2001,USA,AGR,MEX,TEX,10\n"
        "2001,CHN,AGR,MEX,TEX,5\n"
        "2000,MEX,TEX,MEX,TEX,7\n");
    auto s = total_input_inflow(res.table, "AGR", "TEX", "MEX");
    CHECK(s.first_year == 2000);
    REQUIRE(s.values.size() == 2);
    CHECK(s.values[1] == 15.0);
    CHECK(s.values[0] == 0.0);  // no AGR inflow in 2000: present zero

    auto self = total_input_inflow(res.table, "TEX", "TEX", "MEX");
    CHECK(self.values[0] == 7.0);  // self-input counts

    CHECK_THROWS_AS(total_input_inflow(res.table, "AGR", "TEX", "ZZZ"), ValidationError);
}

TEST_CASE("total output adds intermediate sales and final demand") {
    auto tx = parse_tx("2000,MEX,TEX,USA,AGR,20\n2001,MEX,TEX,USA,AGR,8\n");
    auto fd = parse_fd("2000,MEX,TEX,USA,5\n2001,CHN,MIN,USA,12\n");
    auto s = total_output(tx.table, fd.table, "TEX", "MEX");
    REQUIRE(s.values.size() == 2);
    CHECK(s.values[0] == 25.0);
    CHECK(s.values[1] == 8.0);
    auto only_demand = total_output(tx.table, fd.table, "MIN", "CHN");
    CHECK(only_demand.values[1] == 12.0);
    auto zero = total_output(tx.table, fd.table, "AGR", "USA");
    CHECK(zero.values[0] == 0.0);
}

TEST_CASE("aggregation is linear over row partitions") {
    // Integer-valued flows make the partition sums exact.
    std::string rows1 = "2000,USA,AGR,MEX,TEX,10\n2001,USA,AGR,MEX,TEX,30\n";
    std::string rows2 = "2000,CHN,AGR,MEX,TEX,4\n2001,CHN,AGR,MEX,TEX,6\n";
    auto whole = parse_tx(rows1 + rows2);
    auto part1 = parse_tx(rows1);
    auto part2 = parse_tx(rows2);
    for (int y : {2000, 2001}) {
        CHECK(whole.table.inflow("MEX", "TEX", "AGR", y) ==
              part1.table.inflow("MEX", "TEX", "AGR", y) + part2.table.inflow("MEX", "TEX", "AGR", y));
    }
}

TEST_CASE("log fluctuations and validity rules") {
    FlowSeries s;
    s.country = "USA";
    s.industry = "TEX";
    s.first_year = 2000;
    s.values = {100.0, 110.0};
    auto f = log_fluctuations(s);
    REQUIRE(f.values.size() == 1);
    CHECK(f.first_year == 2001);
    CHECK(f.values[0] == doctest::Approx(std::log(1.1)).epsilon(1e-15));
    CHECK(f.valid[0]);

    s.values = {100.0, 100.0};
    CHECK(log_fluctuations(s).values[0] == 0.0);

    s.values = {100.0, 0.0, 50.0};
    auto g = log_fluctuations(s);
    CHECK_FALSE(g.valid[0]);
    CHECK_FALSE(g.valid[1]);

    s.values = {100.0};
    CHECK_THROWS_AS(log_fluctuations(s), ValidationError);
}

TEST_CASE("log fluctuations are scale invariant") {
    FlowSeries s;
    s.country = "USA";
    s.industry = "TEX";
    s.first_year = 2000;
    s.values = {3.0, 7.0, 2.0, 0.0, 5.0};
    auto base = log_fluctuations(s);
    for (auto& v : s.values) v *= 1000.0;
    auto scaled = log_fluctuations(s);
    CHECK(scaled.valid == base.valid);
    for (std::size_t k = 0; k < base.values.size(); ++k)
        CHECK(scaled.values[k] == doctest::Approx(base.values[k]).epsilon(1e-12));
}

TEST_CASE("pooling joins countries and drops jointly invalid rows") {
    // Hand-built store: two countries, one industry, inputs AGR/MIN.
    FluctuationStore store;
    auto mk = [](const std::string& c, std::optional<std::string> input, std::vector<double> v,
                 std::vector<bool> ok) {
        FluctuationSeries f;
        f.country = c;
        f.industry = "TEX";
        f.input_industry = std::move(input);
        f.first_year = 2001;
        f.values = std::move(v);
        f.valid = std::move(ok);
        return f;
    };
    store.add(mk("USA", "AGR", {0.1, 0.2, 0.3}, {true, true, true}));
    store.add(mk("USA", "MIN", {0.4, 0.5, 0.6}, {true, false, true}));
    store.add(mk("USA", std::nullopt, {0.7, 0.8, 0.9}, {true, true, true}));
    store.add(mk("MEX", "AGR", {1.1, 1.2, 1.3}, {true, true, true}));
    store.add(mk("MEX", "MIN", {1.4, 1.5, 1.6}, {true, true, true}));
    store.add(mk("MEX", std::nullopt, {1.7, 1.8, 1.9}, {true, true, false}));

    auto sample = pool_cluster_samples(store, {"USA", "MEX"}, "TEX", {"AGR", "MIN"}, 4);
    // USA drops 2002 (X2 invalid); MEX drops 2003 (Y invalid); order is
    // MEX-before-USA by country code, then year.
    REQUIRE(sample.rows() == 4);
    CHECK(sample.provenance[0] == std::pair<std::string, int>{"MEX", 2001});
    CHECK(sample.provenance[1] == std::pair<std::string, int>{"MEX", 2002});
    CHECK(sample.provenance[2] == std::pair<std::string, int>{"USA", 2001});
    CHECK(sample.provenance[3] == std::pair<std::string, int>{"USA", 2003});
    CHECK(sample.x1[0] == 1.1);
    CHECK(sample.x2[3] == 0.6);
    CHECK(sample.y[2] == 0.7);
    CHECK_FALSE(sample.below_minimum);

    auto flagged = pool_cluster_samples(store, {"USA"}, "TEX", {"AGR", "MIN"});
    CHECK(flagged.below_minimum);  // default floor is 200 rows

    auto empty = pool_cluster_samples(store, {}, "TEX", {"AGR", "MIN"});
    CHECK(empty.rows() == 0);
    CHECK(empty.below_minimum);

    CHECK_THROWS_AS(pool_cluster_samples(store, {"CHN"}, "TEX", {"AGR", "MIN"}), ValidationError);
}

TEST_CASE("store built from tables covers the full registry universe") {
    auto tx = parse_tx(
        "2000,USA,AGR,USA,TEX,10\n2001,USA,AGR,USA,TEX,12\n2002,USA,AGR,USA,TEX,9\n"
        "2000,USA,TEX,USA,AGR,4\n2001,USA,TEX,USA,AGR,5\n2002,USA,TEX,USA,AGR,6\n");
    auto fd = parse_fd("2000,USA,TEX,USA,3\n2001,USA,TEX,USA,3\n2002,USA,TEX,USA,4\n");
    auto store = FluctuationStore::build(tx.table, fd.table);
    // 3 countries x 3 industries x (3 inputs + 1 output) series.
    CHECK(store.series.size() == 3 * 3 * 4);
    const auto* f = store.find("USA", "TEX", std::string("AGR"));
    REQUIRE(f != nullptr);
    CHECK(f->values[0] == doctest::Approx(std::log(12.0 / 10.0)));
    const auto* out = store.find("USA", "TEX", std::nullopt);
    REQUIRE(out != nullptr);
    // Output 2000: sales 4 + demand 3 = 7; 2001: 5 + 3 = 8.
    CHECK(out->values[0] == doctest::Approx(std::log(8.0 / 7.0)));
    // A country with no records has all-invalid fluctuations.
    const auto* idle = store.find("CHN", "TEX", std::string("AGR"));
    REQUIRE(idle != nullptr);
    CHECK(std::none_of(idle->valid.begin(), idle->valid.end(), [](bool b) { return b; }));
}

TEST_CASE("canonical tables are sorted and reproducible") {
    FlowSeries a;
    a.country = "USA";
    a.industry = "TEX";
    a.input_industry = "AGR";
    a.first_year = 2000;
    a.values = {1.5, 2.0};
    FlowSeries b;
    b.country = "MEX";
    b.industry = "TEX";
    b.first_year = 2000;
    b.values = {3.25};
    auto text = flow_table_to_delimited({a, b});
    auto text_permuted = flow_table_to_delimited({b, a});
    CHECK(text == text_permuted);
    CHECK(text ==
          "country,industry,input_industry,year,value,valid\n"
          "MEX,TEX,,2000,3.25,1\n"
          "USA,TEX,AGR,2000,1.5,1\n"
          "USA,TEX,AGR,2001,2,1\n");

    FluctuationSeries f;
    f.country = "USA";
    f.industry = "TEX";
    f.input_industry = "AGR";
    f.first_year = 2001;
    f.values = {0.5, 0.0};
    f.valid = {true, false};
    CHECK(fluctuation_table_to_delimited({f}) ==
          "country,industry,input_industry,year,value,valid\n"
          "USA,TEX,AGR,2001,0.5,1\n"
          "USA,TEX,AGR,2002,0,0\n");
}

TEST_CASE("schema from header accepts any column order and rejects gaps") {
    auto schema = ColumnSchema::from_header({"value", "dest_industry", "dest_country", "source_industry",
                                             "source_country", "year", "extra"},
                                            transaction_fields());
    CHECK(schema.at("year") == 5);
    CHECK(schema.at("value") == 0);
    CHECK(schema.max_index == 5);
    CHECK_THROWS_AS(ColumnSchema::from_header({"year", "value"}, transaction_fields()), IngestError);
    CHECK_THROWS_AS(schema.at("nonexistent"), ValidationError);
}

}  // TEST_SUITE
