#pragma once

#include <vector>

namespace synio::stats {

double mean(const std::vector<double>& v);
/// Sample variance (n-1 denominator). Requires n >= 2.
double sample_variance(const std::vector<double>& v);
/// Median; averages the two middle order statistics for even n.
double median(std::vector<double> v);

/// Spearman rank correlation with midranks for ties. Requires n >= 2 and
/// nonzero rank variance on both sides.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;       // Welch-Satterthwaite degrees of freedom
    double p_value = 1.0;  // two-sided
};

/// Two-sample t-test with unequal variances. Each sample needs n >= 2 and at
/// least one must have positive variance.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided p-value for a t statistic with the given degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Significance marker from a two-sided p-value: "***" below 1%, "**" below
/// 5%, "*" below 10%, "" otherwise (strict thresholds).
const char* significance_stars(double p_value);

}  // namespace synio::stats
