#include "synio/ecx.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "synio/stats.hpp"

namespace synio::cx {
namespace {

const std::vector<std::string>& trade_fields() {
    static const std::vector<std::string> fields = {"year", "exporter", "product", "value"};
    return fields;
}

const std::vector<std::string>& mapping_fields() {
    static const std::vector<std::string> fields = {"product", "industry"};
    return fields;
}

void check_matrix(const RcaMatrix& m, const char* op) {
    if (m.m.rows() != static_cast<Eigen::Index>(m.countries.size()) ||
        m.m.cols() != static_cast<Eigen::Index>(m.industries.size()))
        throw ValidationError(std::string(op) + ": matrix does not match code lists");
    if (m.countries.empty() || m.industries.empty())
        throw ValidationError(std::string(op) + ": empty matrix");
    for (int c = 0; c < m.m.rows(); ++c)
        if (m.m.row(c).sum() == 0) throw ValidationError(std::string(op) + ": all-zero country row");
    for (int p = 0; p < m.m.cols(); ++p)
        if (m.m.col(p).sum() == 0) throw ValidationError(std::string(op) + ": all-zero industry column");
}

}  // namespace

ProductMapping load_product_mapping(std::istream& in, const Registry& registry) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("mapping file is empty");
    char delim = detect_delimiter(line);
    io::ColumnSchema schema = io::ColumnSchema::from_header(split_delimited(line, delim), mapping_fields());

    ProductMapping mapping;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_delimited(line, delim);
        if (static_cast<int>(cells.size()) <= schema.max_index)
            throw IngestError("mapping line " + std::to_string(lineno) + ": too few columns");
        const std::string& product = cells[static_cast<std::size_t>(schema.at("product"))];
        const std::string& industry = cells[static_cast<std::size_t>(schema.at("industry"))];
        if (product.empty()) throw IngestError("mapping line " + std::to_string(lineno) + ": empty product code");
        if (!registry.has_industry(industry))
            throw ValidationError("mapping line " + std::to_string(lineno) + ": unknown industry " + industry);
        auto [it, inserted] = mapping.emplace(product, industry);
        if (!inserted && it->second != industry)
            throw ValidationError("mapping line " + std::to_string(lineno) + ": conflicting industry for " + product);
    }
    return mapping;
}

TradeParseResult parse_trade_rows(std::istream& in, const Registry& registry,
                                  const std::optional<io::YearSpan>& period) {
    TradeParseResult result;
    std::string line;
    if (!std::getline(in, line)) throw IngestError("trade file is empty");
    char delim = detect_delimiter(line);
    io::ColumnSchema schema = io::ColumnSchema::from_header(split_delimited(line, delim), trade_fields());

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ++result.report.rows_read;
        auto cells = split_delimited(line, delim);
        auto reject = [&](const std::string& message) {
            result.report.issues.push_back({lineno, message});
        };
        if (static_cast<int>(cells.size()) <= schema.max_index) {
            reject("too few columns");
            continue;
        }
        TradeRow row;
        bool ok = false;
        row.year = static_cast<int>(parse_long(cells[static_cast<std::size_t>(schema.at("year"))], &ok));
        if (!ok) {
            reject("unparseable year: " + cells[static_cast<std::size_t>(schema.at("year"))]);
            continue;
        }
        row.country = cells[static_cast<std::size_t>(schema.at("exporter"))];
        if (!registry.has_country(row.country)) {
            reject("unknown exporter: " + row.country);
            continue;
        }
        row.product = cells[static_cast<std::size_t>(schema.at("product"))];
        if (row.product.empty()) {
            reject("empty product code");
            continue;
        }
        row.value = parse_double(cells[static_cast<std::size_t>(schema.at("value"))], &ok);
        if (!ok) {
            reject("unparseable value: " + cells[static_cast<std::size_t>(schema.at("value"))]);
            continue;
        }
        if (!(row.value >= 0.0)) {
            reject("negative export value");
            continue;
        }
        if (period && !period->contains(row.year)) {
            ++result.report.rows_out_of_period;
            continue;
        }
        ++result.report.rows_accepted;
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::vector<ExportMatrix> aggregate_exports(const std::vector<TradeRow>& rows, const ProductMapping& mapping,
                                            const Registry& registry, AggregateReport* report) {
    std::map<int, ExportMatrix> by_year;
    AggregateReport local;
    const int n_countries = static_cast<int>(registry.countries.size());
    const int n_industries = static_cast<int>(registry.industries.size());

    for (const TradeRow& row : rows) {
        ExportMatrix& matrix = by_year
                                   .try_emplace(row.year, ExportMatrix{row.year, registry.countries,
                                                                       registry.industries,
                                                                       Eigen::MatrixXd::Zero(n_countries, n_industries)})
                                   .first->second;
        auto mapped = mapping.find(row.product);
        if (mapped == mapping.end()) {
            ++local.unmapped_rows;
            local.unmapped_products.insert(row.product);
            continue;
        }
        int c = registry.country_index.at(row.country);
        int p = registry.industry_index.at(mapped->second);
        matrix.values(c, p) += row.value;
    }

    if (report != nullptr) *report = std::move(local);
    std::vector<ExportMatrix> matrices;
    matrices.reserve(by_year.size());
    for (auto& [year, matrix] : by_year) {
        (void)year;
        matrices.push_back(std::move(matrix));
    }
    return matrices;
}

RcaMatrix rca_binarize(const ExportMatrix& exports, double threshold, RcaReport* report) {
    const Eigen::MatrixXd& x = exports.values;
    if (x.rows() != static_cast<Eigen::Index>(exports.countries.size()) ||
        x.cols() != static_cast<Eigen::Index>(exports.industries.size()))
        throw ValidationError("export matrix does not match code lists");
    if ((x.array() < 0.0).any()) throw ValidationError("negative export value");
    const double total = x.sum();
    if (!(total > 0.0)) throw ValidationError("total exports are zero");
    if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");

    Eigen::VectorXd row_sum = x.rowwise().sum();
    Eigen::VectorXd col_sum = x.colwise().sum();
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(x.rows(), x.cols());
    for (int c = 0; c < x.rows(); ++c) {
        for (int p = 0; p < x.cols(); ++p) {
            if (row_sum(c) <= 0.0 || col_sum(p) <= 0.0) continue;  // RCA 0 by convention
            double rca = (x(c, p) / row_sum(c)) / (col_sum(p) / total);
            if (rca >= threshold) m(c, p) = 1;
        }
    }

    RcaReport local;
    std::vector<int> keep_rows, keep_cols;
    for (int c = 0; c < m.rows(); ++c) {
        if (m.row(c).sum() > 0)
            keep_rows.push_back(c);
        else
            local.dropped_countries.push_back(exports.countries[static_cast<std::size_t>(c)]);
    }
    for (int p = 0; p < m.cols(); ++p) {
        if (m.col(p).sum() > 0)
            keep_cols.push_back(p);
        else
            local.dropped_industries.push_back(exports.industries[static_cast<std::size_t>(p)]);
    }
    if (keep_rows.empty() || keep_cols.empty()) throw ValidationError("no comparative advantage survives binarization");

    RcaMatrix rca;
    rca.year = exports.year;
    rca.m = Eigen::MatrixXi(static_cast<Eigen::Index>(keep_rows.size()), static_cast<Eigen::Index>(keep_cols.size()));
    for (std::size_t a = 0; a < keep_rows.size(); ++a) {
        rca.countries.push_back(exports.countries[static_cast<std::size_t>(keep_rows[a])]);
        for (std::size_t b = 0; b < keep_cols.size(); ++b)
            rca.m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = m(keep_rows[a], keep_cols[b]);
    }
    for (int p : keep_cols) rca.industries.push_back(exports.industries[static_cast<std::size_t>(p)]);
    if (report != nullptr) *report = std::move(local);
    return rca;
}

ComplexityScores fitness_complexity(const RcaMatrix& m, const FcOptions& options) {
    check_matrix(m, "fitness_complexity");
    if (options.max_iterations < 1) throw ValidationError("fitness_complexity: max_iterations must be positive");
    const int nc = static_cast<int>(m.countries.size());
    const int np = static_cast<int>(m.industries.size());
    Eigen::MatrixXd md = m.m.cast<double>();

    Eigen::VectorXd fitness = Eigen::VectorXd::Ones(nc);
    Eigen::VectorXd quality = Eigen::VectorXd::Ones(np);
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::VectorXd f_raw = md * quality;
        Eigen::VectorXd f_new = f_raw * (nc / f_raw.sum());
        Eigen::VectorXd q_raw = (md.transpose() * f_new.cwiseInverse()).cwiseInverse();
        Eigen::VectorXd q_new = q_raw * (np / q_raw.sum());

        // Divergent structures drive the weakest scores toward zero without
        // the relative-change criterion ever firing; stop at the last iterate
        // that keeps everything finite and positive.
        if (!f_new.allFinite() || !q_new.allFinite() || f_new.minCoeff() <= 0.0 || q_new.minCoeff() <= 0.0) break;

        residual = 0.0;
        for (int c = 0; c < nc; ++c) residual = std::max(residual, std::abs(f_new(c) - fitness(c)) / fitness(c));
        for (int p = 0; p < np; ++p) residual = std::max(residual, std::abs(q_new(p) - quality(p)) / quality(p));
        fitness = f_new;
        quality = q_new;
        ++iterations;
        if (residual < options.tolerance) {
            converged = true;
            break;
        }
    }

    ComplexityScores scores;
    scores.year_label = std::to_string(m.year);
    scores.fc_converged = converged;
    scores.fc_iterations = iterations;
    scores.fc_residual = residual;
    for (int c = 0; c < nc; ++c) scores.fitness[m.countries[static_cast<std::size_t>(c)]] = fitness(c);
    for (int p = 0; p < np; ++p) scores.q_score[m.industries[static_cast<std::size_t>(p)]] = quality(p);
    return scores;
}

ComplexityScores eci_pci(const RcaMatrix& m) {
    check_matrix(m, "eci_pci");
    const int np = static_cast<int>(m.industries.size());
    if (np < 2) throw ValidationError("eci_pci: need at least two industries");
    Eigen::MatrixXd md = m.m.cast<double>();
    Eigen::VectorXd diversity = md.rowwise().sum();   // k_c
    Eigen::VectorXd ubiquity = md.colwise().sum();    // k_p

    // Transition matrix T_{pp'} = sum_c M_{cp} M_{cp'} / (k_c k_{p'}); its
    // spectrum is computed through the symmetric conjugate
    // S = K_p^{-1/2} (M' K_c^{-1} M) K_p^{-1/2}.
    Eigen::MatrixXd w = md.transpose() * diversity.cwiseInverse().asDiagonal() * md;
    Eigen::VectorXd scale = ubiquity.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd s = scale.asDiagonal() * w * scale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) throw Error("eci_pci: eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();  // ascending
    const double top = evals(np - 1);
    const double second = evals(np - 2);
    const double gap_tol = 1e-10 * std::max(1.0, std::abs(top));
    if (top - second <= gap_tol) throw DegenerateInputError("eci_pci: degenerate structure");
    if (np >= 3 && second - evals(np - 3) <= gap_tol)
        throw DegenerateInputError("eci_pci: degenerate structure");

    // Back-transform to the transition matrix's eigenvector, then standardize.
    Eigen::VectorXd u = solver.eigenvectors().col(np - 2);
    Eigen::VectorXd v = ubiquity.cwiseSqrt().asDiagonal() * u;
    double mean = v.mean();
    Eigen::VectorXd centered = v.array() - mean;
    double sd = std::sqrt(centered.squaredNorm() / np);
    if (!(sd > 0.0)) throw DegenerateInputError("eci_pci: degenerate structure");
    Eigen::VectorXd z = centered / sd;

    // Anchor the sign: complexity should fall with ubiquity.
    double anchor = 0.0;
    for (int p = 0; p < np; ++p) anchor += z(p) * (ubiquity(p) - ubiquity.mean());
    if (anchor > 0.0) z = -z;

    ComplexityScores scores;
    scores.year_label = std::to_string(m.year);
    for (int p = 0; p < np; ++p) scores.eci_style[m.industries[static_cast<std::size_t>(p)]] = z(p);
    return scores;
}

namespace {

// Mean per code over the maps (one per contributing year), keeping only codes
// present in every map.
std::map<std::string, double> average_maps(const std::vector<const std::map<std::string, double>*>& maps,
                                           std::vector<std::string>* excluded) {
    std::map<std::string, double> out;
    if (maps.empty()) return out;
    for (const auto& [code, value] : *maps.front()) {
        bool everywhere = true;
        double sum = value;
        for (std::size_t k = 1; k < maps.size(); ++k) {
            auto it = maps[k]->find(code);
            if (it == maps[k]->end()) {
                everywhere = false;
                break;
            }
            sum += it->second;
        }
        if (everywhere)
            out[code] = sum / static_cast<double>(maps.size());
        else if (excluded != nullptr)
            excluded->push_back(code);
    }
    // Codes absent from the first map but present later are exclusions too.
    if (excluded != nullptr) {
        for (std::size_t k = 1; k < maps.size(); ++k)
            for (const auto& [code, value] : *maps[k]) {
                (void)value;
                if (!maps.front()->count(code)) excluded->push_back(code);
            }
        std::sort(excluded->begin(), excluded->end());
        excluded->erase(std::unique(excluded->begin(), excluded->end()), excluded->end());
    }
    return out;
}

}  // namespace

ComplexityScores intertemporal_average(const std::vector<ComplexityScores>& per_year, AverageReport* report) {
    if (per_year.empty()) throw ValidationError("intertemporal_average: no years");

    AverageReport local;
    ComplexityScores out;
    out.year_label = "averaged";
    out.fc_converged = true;
    double residual = 0.0;
    int iterations = 0;
    bool any_fc = false;

    std::vector<const std::map<std::string, double>*> fitness_maps, q_maps, eci_maps;
    for (const auto& year : per_year) {
        if (!year.fitness.empty()) fitness_maps.push_back(&year.fitness);
        if (!year.q_score.empty()) {
            q_maps.push_back(&year.q_score);
            any_fc = true;
            out.fc_converged = out.fc_converged && year.fc_converged;
            residual = std::max(residual, year.fc_residual);
            iterations = std::max(iterations, year.fc_iterations);
        }
        if (!year.eci_style.empty()) eci_maps.push_back(&year.eci_style);
    }
    out.fitness = average_maps(fitness_maps, &local.excluded_countries);
    out.q_score = average_maps(q_maps, &local.excluded_industries);
    out.eci_style = average_maps(eci_maps, &local.excluded_industries);
    std::sort(local.excluded_industries.begin(), local.excluded_industries.end());
    local.excluded_industries.erase(std::unique(local.excluded_industries.begin(), local.excluded_industries.end()),
                                    local.excluded_industries.end());
    if (any_fc) {
        out.fc_residual = residual;
        out.fc_iterations = iterations;
    }

    if (!fitness_maps.empty() && out.fitness.empty())
        throw ValidationError("intertemporal_average: no common countries across years");
    if ((!q_maps.empty() && out.q_score.empty()) || (!eci_maps.empty() && out.eci_style.empty()))
        throw ValidationError("intertemporal_average: no common industries across years");
    if (report != nullptr) *report = std::move(local);
    return out;
}

std::string scores_to_delimited(const ComplexityScores& scores) {
    std::ostringstream out;
    out << "year,level,code,index,value\n";
    for (const auto& [code, value] : scores.fitness)
        out << scores.year_label << ",country," << code << ",fitness," << format_double(value) << '\n';
    for (const auto& [code, value] : scores.q_score)
        out << scores.year_label << ",industry," << code << ",efi_q," << format_double(value) << '\n';
    for (const auto& [code, value] : scores.eci_style)
        out << scores.year_label << ",industry," << code << ",eci," << format_double(value) << '\n';
    return out.str();
}

std::string scores_diagnostics_json(const ComplexityScores& scores) {
    nlohmann::ordered_json diag;
    diag["year"] = scores.year_label;
    diag["fc_converged"] = scores.fc_converged;
    diag["fc_iterations"] = scores.fc_iterations;
    diag["fc_residual"] = scores.fc_residual;
    diag["countries"] = scores.fitness.size();
    diag["industries"] = std::max(scores.q_score.size(), scores.eci_style.size());
    return diag.dump(2) + "\n";
}

}  // namespace synio::cx
