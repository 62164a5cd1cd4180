#include "synio/techclust.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <queue>

#include "json.hpp"
#include "synio/stats.hpp"

namespace synio::clust {

std::size_t MpSeries::defined_count() const {
    return static_cast<std::size_t>(std::count(defined.begin(), defined.end(), true));
}

MpSeries marginal_product_series(const io::FlowSeries& input_flow, const io::FlowSeries& output_flow) {
    int lo = std::max(input_flow.first_year, output_flow.first_year);
    int hi = std::min(input_flow.year_of(input_flow.values.empty() ? 0 : input_flow.values.size() - 1),
                      output_flow.year_of(output_flow.values.empty() ? 0 : output_flow.values.size() - 1));
    if (input_flow.values.empty() || output_flow.values.empty() || hi - lo < 1)
        throw ValidationError("marginal products need at least 2 aligned years");

    MpSeries mp;
    mp.country = input_flow.country;
    mp.industry = input_flow.industry;
    mp.input_industry = input_flow.input_industry.value_or("");
    mp.first_year = lo + 1;
    for (int y = lo + 1; y <= hi; ++y) {
        double dx = input_flow.values[static_cast<std::size_t>(y - input_flow.first_year)] -
                    input_flow.values[static_cast<std::size_t>(y - 1 - input_flow.first_year)];
        double dy = output_flow.values[static_cast<std::size_t>(y - output_flow.first_year)] -
                    output_flow.values[static_cast<std::size_t>(y - 1 - output_flow.first_year)];
        if (dx == 0.0) {
            mp.values.push_back(0.0);
            mp.defined.push_back(false);
        } else {
            mp.values.push_back(dy / dx);
            mp.defined.push_back(true);
        }
    }
    return mp;
}

MarginalProductFeature median_log_mp(const MpSeries& series, MpLogTransform transform) {
    MarginalProductFeature f;
    f.country = series.country;
    f.industry = series.industry;
    f.input_industry = series.input_industry;
    std::vector<double> defined;
    for (std::size_t k = 0; k < series.values.size(); ++k)
        if (series.defined[k]) defined.push_back(series.values[k]);
    if (defined.empty()) return f;  // missing
    f.mp_median = stats::median(defined);
    f.valid_years = static_cast<int>(defined.size());
    switch (transform) {
        case MpLogTransform::symmetric_log1p:
            f.mp_log = (f.mp_median < 0.0 ? -1.0 : 1.0) * std::log1p(std::fabs(f.mp_median));
            f.missing = false;
            break;
        case MpLogTransform::plain_log:
            if (f.mp_median > 0.0) {
                f.mp_log = std::log(f.mp_median);
                f.missing = false;
            }
            break;
    }
    return f;
}

// ---------------------------------------------------------------------------

IndicatorTable::LoadResult IndicatorTable::load(std::istream& stream, const Registry& registry) {
    if (!stream) throw IngestError("unreadable indicator stream");
    LoadResult out;
    std::string line;
    if (!std::getline(stream, line)) throw IngestError("indicator file has no header");
    char delim = detect_delimiter(line);
    auto schema =
        io::ColumnSchema::from_header(split_delimited(line, delim), {"country", "year", "indicator", "value"});
    int c_c = schema.at("country"), c_y = schema.at("year"), c_i = schema.at("indicator"), c_v = schema.at("value");
    std::size_t lineno = 1;
    while (std::getline(stream, line)) {
        ++lineno;
        if (line.empty()) continue;
        ++out.report.rows_read;
        auto f = split_delimited(line, delim);
        if (static_cast<int>(f.size()) <= schema.max_index) {
            out.report.issues.push_back({lineno, "too few columns"});
            continue;
        }
        const auto& country = f[static_cast<std::size_t>(c_c)];
        if (!registry.has_country(country)) {
            out.report.issues.push_back({lineno, "unknown country code '" + country + "'"});
            continue;
        }
        bool ok = false;
        long year = parse_long(f[static_cast<std::size_t>(c_y)], &ok);
        if (!ok) {
            out.report.issues.push_back({lineno, "unparseable year"});
            continue;
        }
        double value = parse_double(f[static_cast<std::size_t>(c_v)], &ok);
        if (!ok || !std::isfinite(value)) {
            out.report.issues.push_back({lineno, "unparseable value"});
            continue;
        }
        const auto& name = f[static_cast<std::size_t>(c_i)];
        if (name.empty()) {
            out.report.issues.push_back({lineno, "empty indicator name"});
            continue;
        }
        out.table.add(country, static_cast<int>(year), name, value);
        ++out.report.rows_accepted;
    }
    return out;
}

void IndicatorTable::add(const std::string& country, int year, const std::string& indicator, double value) {
    data_[indicator][country][year] = value;
}

std::vector<std::string> IndicatorTable::indicator_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : data_) names.push_back(name);
    return names;
}

std::map<std::string, std::map<std::string, double>> IndicatorTable::averaged(
    std::optional<io::YearSpan> span) const {
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& [name, per_country] : data_) {
        for (const auto& [country, per_year] : per_country) {
            double sum = 0.0;
            int n = 0;
            for (const auto& [year, value] : per_year) {
                if (span && !span->contains(year)) continue;
                sum += value;
                ++n;
            }
            if (n > 0) out[name][country] = sum / n;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

int FeatureMatrix::row_of(const std::string& country) const {
    auto it = std::lower_bound(countries.begin(), countries.end(), country);
    if (it == countries.end() || *it != country) throw ValidationError("country not in feature matrix: " + country);
    return static_cast<int>(it - countries.begin());
}

FeatureMatrix build_feature_matrix(const std::vector<MarginalProductFeature>& features,
                                   const std::map<std::string, std::map<std::string, double>>& indicator_means,
                                   const FeatureOptions& options) {
    FeatureMatrix fm;
    std::map<std::string, std::map<std::string, const MarginalProductFeature*>> by_input;  // input -> country -> f
    std::map<std::string, int> countries_with_defined;
    for (const auto& f : features) {
        by_input[f.input_industry][f.country] = &f;
        if (!f.missing) ++countries_with_defined[f.country];
        if (fm.countries.empty() || !std::binary_search(fm.countries.begin(), fm.countries.end(), f.country)) {
            fm.countries.push_back(f.country);
            std::sort(fm.countries.begin(), fm.countries.end());
        }
    }
    if (countries_with_defined.size() < 2)
        throw ValidationError("feature matrix needs at least 2 countries with a defined feature");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = fm.countries.size();
    std::vector<std::vector<double>> raw_cols;
    std::vector<std::string> names;
    std::vector<bool> is_indicator;
    for (const auto& [input, per_country] : by_input) {
        std::vector<double> col(n, nan);
        for (std::size_t r = 0; r < n; ++r) {
            auto it = per_country.find(fm.countries[r]);
            if (it != per_country.end() && !it->second->missing) col[r] = it->second->mp_log;
        }
        raw_cols.push_back(std::move(col));
        names.push_back("mp:" + input);
        is_indicator.push_back(false);
    }
    for (const auto& [name, per_country] : indicator_means) {
        std::vector<double> col(n, nan);
        for (std::size_t r = 0; r < n; ++r) {
            auto it = per_country.find(fm.countries[r]);
            if (it != per_country.end()) col[r] = it->second;
        }
        raw_cols.push_back(std::move(col));
        names.push_back("ind:" + name);
        is_indicator.push_back(true);
    }

    std::vector<std::vector<double>> kept_cols;
    std::vector<std::vector<bool>> kept_mask;
    std::vector<std::string> kept_names;
    std::vector<bool> kept_indicator;
    for (std::size_t c = 0; c < raw_cols.size(); ++c) {
        auto& col = raw_cols[c];
        std::vector<double> present;
        for (double v : col)
            if (!std::isnan(v)) present.push_back(v);
        if (present.empty()) {
            fm.dropped_columns.push_back(names[c] + " (all missing)");
            continue;
        }
        double fill = stats::median(present);
        std::vector<bool> mask(n, false);
        for (std::size_t r = 0; r < n; ++r)
            if (std::isnan(col[r])) {
                col[r] = fill;
                mask[r] = true;
            }
        double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (sd == 0.0) {
            fm.dropped_columns.push_back(names[c] + " (constant)");
            continue;
        }
        double weight = is_indicator[c] ? options.indicator_weight : 1.0;
        for (auto& v : col) v = weight * (v - mean) / sd;
        kept_cols.push_back(std::move(col));
        kept_mask.push_back(std::move(mask));
        kept_names.push_back(names[c]);
        kept_indicator.push_back(is_indicator[c]);
    }
    if (kept_cols.empty()) throw ValidationError("all feature columns were dropped");

    fm.feature_names = std::move(kept_names);
    fm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept_cols.size()));
    fm.imputed.assign(n, std::vector<bool>(kept_cols.size(), false));
    for (std::size_t c = 0; c < kept_cols.size(); ++c)
        for (std::size_t r = 0; r < n; ++r) {
            fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = kept_cols[c][r];
            fm.imputed[r][c] = kept_mask[c][r];
        }
    return fm;
}

// ---------------------------------------------------------------------------
// Min-cost-flow assignment
// ---------------------------------------------------------------------------

namespace {

/// Successive-shortest-path min-cost max-flow with Dijkstra and Johnson
/// potentials. All stored costs are nonnegative; ties in the priority queue
/// break on node index for determinism.
class MinCostFlow {
  public:
    explicit MinCostFlow(int nodes) : head_(nodes, -1) {}

    void add_edge(int u, int v, double cap, double cost) {
        edges_.push_back({v, head_[static_cast<std::size_t>(u)], cap, cost});
        head_[static_cast<std::size_t>(u)] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({u, head_[static_cast<std::size_t>(v)], 0.0, -cost});
        head_[static_cast<std::size_t>(v)] = static_cast<int>(edges_.size()) - 1;
    }

    /// Pushes up to max_flow units from s to t; returns (flow, cost).
    std::pair<double, double> solve(int s, int t, double max_flow) {
        int n = static_cast<int>(head_.size());
        std::vector<double> potential(static_cast<std::size_t>(n), 0.0);
        double flow = 0.0, cost = 0.0;
        while (flow < max_flow) {
            std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
            std::vector<int> prev_edge(static_cast<std::size_t>(n), -1);
            using Item = std::pair<double, int>;
            std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
            dist[static_cast<std::size_t>(s)] = 0.0;
            pq.push({0.0, s});
            while (!pq.empty()) {
                auto [d, u] = pq.top();
                pq.pop();
                if (d > dist[static_cast<std::size_t>(u)]) continue;
                for (int e = head_[static_cast<std::size_t>(u)]; e != -1; e = edges_[static_cast<std::size_t>(e)].next) {
                    const Edge& ed = edges_[static_cast<std::size_t>(e)];
                    if (ed.cap <= 0.0) continue;
                    double nd = d + ed.cost + potential[static_cast<std::size_t>(u)] -
                                potential[static_cast<std::size_t>(ed.to)];
                    if (nd < dist[static_cast<std::size_t>(ed.to)] - 1e-15) {
                        dist[static_cast<std::size_t>(ed.to)] = nd;
                        prev_edge[static_cast<std::size_t>(ed.to)] = e;
                        pq.push({nd, ed.to});
                    }
                }
            }
            if (prev_edge[static_cast<std::size_t>(t)] == -1) break;  // no augmenting path
            for (int v = 0; v < n; ++v)
                if (std::isfinite(dist[static_cast<std::size_t>(v)]))
                    potential[static_cast<std::size_t>(v)] += dist[static_cast<std::size_t>(v)];
            // Bottleneck along the path.
            double push = max_flow - flow;
            for (int v = t; v != s;) {
                const Edge& ed = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)])];
                push = std::min(push, ed.cap);
                v = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)] ^ 1)].to;
            }
            for (int v = t; v != s;) {
                int e = prev_edge[static_cast<std::size_t>(v)];
                edges_[static_cast<std::size_t>(e)].cap -= push;
                edges_[static_cast<std::size_t>(e ^ 1)].cap += push;
                cost += push * edges_[static_cast<std::size_t>(e)].cost;
                v = edges_[static_cast<std::size_t>(e ^ 1)].to;
            }
            flow += push;
        }
        return {flow, cost};
    }

    const std::vector<int>& heads() const { return head_; }
    struct Edge {
        int to;
        int next;
        double cap;
        double cost;
    };
    const std::vector<Edge>& edges() const { return edges_; }

  private:
    std::vector<int> head_;
    std::vector<Edge> edges_;
};

}  // namespace

std::vector<int> bounded_assignment(const Eigen::MatrixXd& cost, int min_size, int max_size) {
    int n = static_cast<int>(cost.rows());
    int k = static_cast<int>(cost.cols());
    if (n == 0 || k == 0) throw ValidationError("empty assignment problem");
    if (min_size < 0 || max_size < min_size) throw ValidationError("invalid cluster size bounds");
    if (static_cast<long>(k) * min_size > n || static_cast<long>(k) * max_size < n)
        throw ValidationError("infeasible cluster size bounds for " + std::to_string(n) + " points");

    // Nodes: source, n points, k clusters, overflow collector, sink.
    int source = 0, sink = n + k + 2, overflow = n + k + 1;
    MinCostFlow mcf(n + k + 3);
    for (int i = 0; i < n; ++i) mcf.add_edge(source, 1 + i, 1.0, 0.0);
    for (int i = 0; i < n; ++i)
        for (int g = 0; g < k; ++g) mcf.add_edge(1 + i, 1 + n + g, 1.0, cost(i, g));
    for (int g = 0; g < k; ++g) {
        if (min_size > 0) mcf.add_edge(1 + n + g, sink, static_cast<double>(min_size), 0.0);
        if (max_size > min_size)
            mcf.add_edge(1 + n + g, overflow, static_cast<double>(max_size - min_size), 0.0);
    }
    if (n > k * min_size) mcf.add_edge(overflow, sink, static_cast<double>(n - static_cast<long>(k) * min_size), 0.0);

    auto [flow, total_cost] = mcf.solve(source, sink, static_cast<double>(n));
    (void)total_cost;
    if (flow < static_cast<double>(n) - 0.5)
        throw ValidationError("assignment flow infeasible");  // unreachable given the pre-checks

    // Point i is assigned to the cluster whose edge was saturated.
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    const auto& edges = mcf.edges();
    const auto& heads = mcf.heads();
    for (int i = 0; i < n; ++i) {
        for (int e = heads[static_cast<std::size_t>(1 + i)]; e != -1; e = edges[static_cast<std::size_t>(e)].next) {
            int to = edges[static_cast<std::size_t>(e)].to;
            if (to >= 1 + n && to < 1 + n + k && edges[static_cast<std::size_t>(e)].cap < 0.5 &&
                (e % 2) == 0) {  // forward edge fully used
                labels[static_cast<std::size_t>(i)] = to - 1 - n;
                break;
            }
        }
        if (labels[static_cast<std::size_t>(i)] < 0) throw ValidationError("point left unassigned");
    }
    return labels;
}

// ---------------------------------------------------------------------------

namespace {

double wcss(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::MatrixXd& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

Eigen::MatrixXd update_centroids(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k,
                                 const Eigen::MatrixXd& previous) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        c.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        ++count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int g = 0; g < k; ++g) {
        if (count[static_cast<std::size_t>(g)] > 0)
            c.row(g) /= static_cast<double>(count[static_cast<std::size_t>(g)]);
        else
            c.row(g) = previous.row(g);  // empty cluster keeps its centroid
    }
    return c;
}

/// Relabels clusters by the row index of their first member.
void canonicalize(std::vector<int>& labels, int k) {
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int lab : labels)
        if (remap[static_cast<std::size_t>(lab)] < 0) remap[static_cast<std::size_t>(lab)] = next++;
    for (auto& lab : labels) lab = remap[static_cast<std::size_t>(lab)];
}

}  // namespace

ClusterAssignment constrained_kmeans(const FeatureMatrix& features, const KmeansOptions& options) {
    const Eigen::MatrixXd& x = features.values;
    int n = static_cast<int>(x.rows());
    int k = options.k;
    if (k < 2) throw ValidationError("clustering needs k >= 2");
    if (n < k) throw ValidationError("fewer points than clusters");
    int min_size = options.min_size >= 0 ? options.min_size
                                         : static_cast<int>(std::floor(0.8 * static_cast<double>(n) / k));
    int max_size = options.max_size >= 0 ? options.max_size
                                         : static_cast<int>(std::ceil(1.2 * static_cast<double>(n) / k));
    if (static_cast<long>(k) * min_size > n || static_cast<long>(k) * max_size < n || min_size > max_size)
        throw ValidationError("infeasible cluster size bounds");
    if (options.restarts < 1) throw ValidationError("clustering needs at least 1 restart");

    struct Candidate {
        std::vector<int> labels;
        double objective = std::numeric_limits<double>::infinity();
        bool converged = false;
        int iterations = 0;
        std::vector<double> trace;
    };
    Candidate best;

    for (int restart = 0; restart < options.restarts; ++restart) {
        Rng rng(derive_seed(options.seed, "kmeans-restart", static_cast<std::uint64_t>(restart)));
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_indices(order, rng);
        Eigen::MatrixXd centroids(k, x.cols());
        for (int g = 0; g < k; ++g) centroids.row(g) = x.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(g)]));

        Candidate cand;
        std::vector<int> labels;
        Eigen::MatrixXd cost(n, k);
        for (int iter = 0; iter < options.max_iterations; ++iter) {
            for (int i = 0; i < n; ++i)
                for (int g = 0; g < k; ++g) cost(i, g) = (x.row(i) - centroids.row(g)).squaredNorm();
            std::vector<int> next = bounded_assignment(cost, min_size, max_size);
            centroids = update_centroids(x, next, k, centroids);
            cand.trace.push_back(wcss(x, next, centroids));
            cand.iterations = iter + 1;
            if (next == labels) {
                cand.converged = true;
                labels = std::move(next);
                break;
            }
            labels = std::move(next);
        }
        cand.labels = std::move(labels);
        cand.objective = cand.trace.empty() ? std::numeric_limits<double>::infinity() : cand.trace.back();
        canonicalize(cand.labels, k);
        if (cand.objective < best.objective ||
            (cand.objective == best.objective && cand.labels < best.labels)) {
            best = std::move(cand);
        }
    }

    ClusterAssignment out;
    out.k = k;
    out.min_size = min_size;
    out.max_size = max_size;
    out.objective = best.objective;
    out.converged = best.converged;
    out.iterations = best.iterations;
    out.objective_trace = best.trace;
    out.sizes.assign(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
        out.labels[features.countries[static_cast<std::size_t>(i)]] = best.labels[static_cast<std::size_t>(i)];
        ++out.sizes[static_cast<std::size_t>(best.labels[static_cast<std::size_t>(i)])];
    }
    return out;
}

std::vector<std::string> ClusterAssignment::members(int cluster) const {
    std::vector<std::string> out;
    for (const auto& [country, lab] : labels)
        if (lab == cluster) out.push_back(country);
    return out;
}

std::string assignment_to_delimited(const ClusterAssignment& assignment) {
    std::string out = "industry,country,cluster\n";
    for (const auto& [country, lab] : assignment.labels) {
        out += assignment.industry;
        out += ',';
        out += country;
        out += ',';
        out += std::to_string(lab);
        out += '\n';
    }
    return out;
}

std::string assignment_sidecar_json(const ClusterAssignment& assignment, const KmeansOptions& options_used,
                                    const FeatureMatrix& features) {
    nlohmann::json j;
    j["industry"] = assignment.industry;
    j["objective"] = assignment.objective;
    j["sizes"] = assignment.sizes;
    j["converged"] = assignment.converged;
    j["iterations"] = assignment.iterations;
    j["config"] = {{"k", assignment.k},
                   {"min_size", assignment.min_size},
                   {"max_size", assignment.max_size},
                   {"seed", options_used.seed},
                   {"restarts", options_used.restarts},
                   {"max_iterations", options_used.max_iterations}};
    j["feature_names"] = features.feature_names;
    j["dropped_columns"] = features.dropped_columns;
    return j.dump(2);
}

}  // namespace synio::clust
