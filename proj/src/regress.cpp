#include "synio/regress.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "synio/stats.hpp"

namespace synio::reg {

namespace {

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    return out;
}

const std::vector<double>& numeric_column(const ObservationTable& data, const std::string& name,
                                          const char* role) {
    if (!data.has_column(name)) throw ValidationError(std::string(role) + " column not in table: " + name);
    auto it = data.numeric.find(name);
    if (it == data.numeric.end()) throw ValidationError(std::string(role) + " column is not numeric: " + name);
    for (double v : it->second) {
        if (!std::isfinite(v)) throw ValidationError(std::string(role) + " column has a non-finite cell: " + name);
    }
    return it->second;
}

}  // namespace

ObservationTable read_observation_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("observation table: empty input");
    const char delim = detect_delimiter(line);
    ObservationTable table;
    table.columns = split_delimited(line, delim);
    for (const auto& name : table.columns) {
        if (name.empty()) throw IngestError("observation table: empty column name in header");
        if (!table.text.emplace(name, std::vector<std::string>{}).second)
            throw IngestError("observation table: duplicate column " + name);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_delimited(line, delim);
        if (fields.size() != table.columns.size())
            throw IngestError("observation table: line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.columns.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) table.text[table.columns[c]].push_back(std::move(fields[c]));
        ++table.rows;
    }
    // A column gets a numeric view when every non-empty cell parses.
    for (const auto& name : table.columns) {
        const auto& cells = table.text[name];
        std::vector<double> parsed(cells.size(), std::numeric_limits<double>::quiet_NaN());
        bool all_numeric = true;
        bool any_value = false;
        for (std::size_t r = 0; r < cells.size(); ++r) {
            if (cells[r].empty()) continue;
            bool ok = false;
            parsed[r] = parse_double(cells[r], &ok);
            if (!ok) {
                all_numeric = false;
                break;
            }
            any_value = true;
        }
        if (all_numeric && any_value) table.numeric.emplace(name, std::move(parsed));
    }
    return table;
}

RegressionResult ols_cluster(const ObservationTable& data, const RegressionSpec& spec) {
    if (spec.regressors.empty()) throw ValidationError("ols_cluster: no regressors");
    {
        std::set<std::string> seen;
        for (const auto& name : spec.regressors) {
            if (name == spec.dependent) throw ValidationError("ols_cluster: dependent reused as regressor: " + name);
            if (!seen.insert(name).second) throw ValidationError("ols_cluster: duplicate regressor " + name);
        }
    }
    const auto& y_col = numeric_column(data, spec.dependent, "dependent");
    const std::size_t n = data.rows;
    const std::size_t k = spec.regressors.size() + (spec.intercept ? 1 : 0);
    if (n <= k)
        throw ValidationError("ols_cluster: " + std::to_string(n) + " observations cannot identify " +
                              std::to_string(k) + " coefficients");

    if (!data.has_column(spec.cluster_column))
        throw ValidationError("cluster column not in table: " + spec.cluster_column);
    const auto& cluster_cells = data.text.at(spec.cluster_column);
    std::map<std::string, std::vector<int>> cluster_rows;
    for (std::size_t r = 0; r < n; ++r) cluster_rows[cluster_cells[r]].push_back(static_cast<int>(r));
    const std::size_t groups = cluster_rows.size();
    if (groups < 2) throw ValidationError("ols_cluster: all observations fall in one cluster");

    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    std::vector<std::string> names;
    names.reserve(k);
    std::size_t col = 0;
    if (spec.intercept) {
        x.col(0).setOnes();
        names.push_back("(intercept)");
        col = 1;
    }
    for (const auto& name : spec.regressors) {
        const auto& values = numeric_column(data, name, "regressor");
        for (std::size_t r = 0; r < n; ++r) x(static_cast<int>(r), static_cast<int>(col)) = values[r];
        names.push_back(name);
        ++col;
    }
    for (std::size_t r = 0; r < n; ++r) y(static_cast<int>(r)) = y_col[r];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (static_cast<std::size_t>(qr.rank()) < k) {
        // Columns pivoted past the numerical rank are linear combinations of
        // the ones before them.
        std::vector<std::string> redundant;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < perm.size(); ++i)
            redundant.push_back(names[static_cast<std::size_t>(perm(i))]);
        std::sort(redundant.begin(), redundant.end());
        throw ValidationError("ols_cluster: design matrix is rank deficient (collinear: " + join_names(redundant) +
                              ")");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd residuals = y - x * beta;

    const Eigen::MatrixXd bread = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [key, rows] : cluster_rows) {
        Eigen::VectorXd score = Eigen::VectorXd::Zero(k);
        for (int r : rows) score += x.row(r).transpose() * residuals(r);
        meat += score * score.transpose();
    }
    const double g = static_cast<double>(groups);
    const double small_sample = g / (g - 1.0) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - k);
    const Eigen::MatrixXd vcov = small_sample * bread * meat * bread;

    const double ssr = residuals.squaredNorm();
    double sst = 0.0;
    if (spec.intercept) {
        const double mean_y = y.mean();
        sst = (y.array() - mean_y).matrix().squaredNorm();
    } else {
        sst = y.squaredNorm();
    }
    if (sst <= 0.0) throw DegenerateInputError("ols_cluster: dependent variable is constant");

    RegressionResult result;
    result.observations = n;
    result.clusters = groups;
    result.r_squared = 1.0 - ssr / sst;
    result.adjusted_r_squared =
        1.0 - (1.0 - result.r_squared) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - k);
    const double df = g - 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        CoefficientResult c;
        c.name = names[j];
        c.coefficient = beta(static_cast<int>(j));
        const double var = vcov(static_cast<int>(j), static_cast<int>(j));
        c.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
        if (c.std_error > 0.0) {
            c.t_value = c.coefficient / c.std_error;
            c.p_value = stats::student_t_two_sided_p(c.t_value, df);
        } else if (c.coefficient != 0.0) {
            // Exact fit: the point estimate carries no sampling noise.
            c.t_value = std::numeric_limits<double>::infinity();
            c.p_value = 0.0;
        } else {
            c.t_value = 0.0;
            c.p_value = 1.0;
        }
        c.stars = stats::significance_stars(c.p_value);
        result.coefficients.push_back(std::move(c));
    }
    return result;
}

LogSynergyResult log_synergy(const std::vector<double>& values, double floor_value) {
    if (!(floor_value > 0.0) || !std::isfinite(floor_value))
        throw ValidationError("log_synergy: floor must be positive");
    LogSynergyResult result;
    result.values.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("log_synergy: non-finite input");
        if (v < floor_value) {
            ++result.floored;
            result.values.push_back(std::log(floor_value));
        } else {
            result.values.push_back(std::log(v));
        }
    }
    return result;
}

BinnedScatter binned_scatter(const std::vector<double>& x, const std::vector<double>& y, int bins) {
    if (x.size() != y.size()) throw ValidationError("binned_scatter: size mismatch");
    const std::size_t n = x.size();
    if (bins < 2) throw ValidationError("binned_scatter: need at least 2 bins");
    if (static_cast<std::size_t>(bins) > n)
        throw ValidationError("binned_scatter: more bins than observations");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("binned_scatter: non-finite input");
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return a < b;
    });
    if (x[order.front()] == x[order.back()]) throw DegenerateInputError("binned_scatter: x is constant");

    BinnedScatter scatter;
    scatter.edges.push_back(x[order.front()]);
    for (int b = 0; b < bins; ++b) {
        const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
        const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(bins);
        double sx = 0.0;
        double sy = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            sx += x[order[i]];
            sy += y[order[i]];
        }
        const auto count = hi - lo;
        scatter.counts.push_back(count);
        scatter.mean_x.push_back(sx / static_cast<double>(count));
        scatter.mean_y.push_back(sy / static_cast<double>(count));
        if (b + 1 < bins)
            scatter.edges.push_back(0.5 * (x[order[hi - 1]] + x[order[hi]]));
        else
            scatter.edges.push_back(x[order.back()]);
    }

    const double mean_x = stats::mean(x);
    const double mean_y = stats::mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
    }
    scatter.slope = sxy / sxx;
    scatter.intercept = mean_y - scatter.slope * mean_x;
    return scatter;
}

std::string regression_table_to_delimited(const std::vector<std::string>& model_names,
                                          const std::vector<RegressionResult>& models) {
    if (model_names.size() != models.size())
        throw ValidationError("regression table: model name count mismatch");
    std::vector<std::string> terms;  // first-appearance order, intercept omitted
    for (const auto& model : models) {
        for (const auto& c : model.coefficients) {
            if (c.name == "(intercept)") continue;
            if (std::find(terms.begin(), terms.end(), c.name) == terms.end()) terms.push_back(c.name);
        }
    }
    std::ostringstream out;
    out << "term";
    for (const auto& name : model_names) out << ',' << name;
    out << '\n';
    for (const auto& term : terms) {
        out << term;
        for (const auto& model : models) {
            out << ',';
            for (const auto& c : model.coefficients) {
                if (c.name != term) continue;
                out << format_double(c.coefficient) << c.stars << " (" << format_double(c.std_error) << ")";
                break;
            }
        }
        out << '\n';
    }
    out << "observations";
    for (const auto& model : models) out << ',' << model.observations;
    out << "\nclusters";
    for (const auto& model : models) out << ',' << model.clusters;
    out << "\nadjusted_r2";
    for (const auto& model : models) out << ',' << format_double(model.adjusted_r_squared);
    out << '\n';
    return out.str();
}

std::string regression_results_to_json(const std::vector<std::string>& model_names,
                                       const std::vector<RegressionResult>& models) {
    if (model_names.size() != models.size())
        throw ValidationError("regression table: model name count mismatch");
    nlohmann::ordered_json doc;
    doc["models"] = nlohmann::ordered_json::array();
    for (std::size_t m = 0; m < models.size(); ++m) {
        nlohmann::ordered_json entry;
        entry["name"] = model_names[m];
        entry["observations"] = models[m].observations;
        entry["clusters"] = models[m].clusters;
        entry["r_squared"] = models[m].r_squared;
        entry["adjusted_r_squared"] = models[m].adjusted_r_squared;
        entry["coefficients"] = nlohmann::ordered_json::array();
        for (const auto& c : models[m].coefficients) {
            nlohmann::ordered_json coef;
            coef["term"] = c.name;
            coef["coefficient"] = c.coefficient;
            coef["std_error"] = c.std_error;
            coef["t_value"] = c.t_value;
            coef["p_value"] = c.p_value;
            coef["stars"] = c.stars;
            entry["coefficients"].push_back(std::move(coef));
        }
        doc["models"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
}

std::string binned_scatter_to_delimited(const BinnedScatter& scatter) {
    std::ostringstream out;
    out << "bin,left_edge,right_edge,mean_x,mean_y,count\n";
    for (std::size_t b = 0; b < scatter.counts.size(); ++b) {
        out << b << ',' << format_double(scatter.edges[b]) << ',' << format_double(scatter.edges[b + 1]) << ','
            << format_double(scatter.mean_x[b]) << ',' << format_double(scatter.mean_y[b]) << ','
            << scatter.counts[b] << '\n';
    }
    out << "fit_slope," << format_double(scatter.slope) << ",,,,\n";
    out << "fit_intercept," << format_double(scatter.intercept) << ",,,,\n";
    return out.str();
}

}  // namespace synio::reg
