#include "doctest.h"

#include <cmath>
#include <vector>

#include "synio/common.hpp"
#include "synio/gpid.hpp"

using namespace synio;
using namespace synio::pid;

namespace {

CovarianceSummary make_cov(std::initializer_list<double> nine) {
    CovarianceSummary c;
    c.matrix = Eigen::Matrix3d(Eigen::Map<const Eigen::Matrix3d>(std::data(nine)).transpose());
    c.sample_count = 0;
    return c;
}

CovarianceSummary pair_cov(double rho) {
    CovarianceSummary c;
    c.matrix = Eigen::Matrix2d{{1.0, rho}, {rho, 1.0}};
    return c;
}

// Numerical differential entropies of the bivariate normal with correlation
// rho, via midpoint sums over a wide grid. Independent of the closed-form MI
// expression: only the density formula enters.
double quadrature_pair_mi(double rho) {
    const double lo = -9.0, hi = 9.0, h = 0.01;
    const int n = static_cast<int>((hi - lo) / h);
    const double norm2 = 1.0 / (2.0 * M_PI * std::sqrt(1.0 - rho * rho));
    const double q = 1.0 / (2.0 * (1.0 - rho * rho));

    double h_joint = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = lo + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) {
            double y = lo + (j + 0.5) * h;
            double p = norm2 * std::exp(-q * (x * x - 2.0 * rho * x * y + y * y));
            if (p > 0.0) h_joint -= p * std::log(p) * h * h;
        }
    }
    double h_marg = 0.0;
    const double norm1 = 1.0 / std::sqrt(2.0 * M_PI);
    for (int i = 0; i < n; ++i) {
        double x = lo + (i + 0.5) * h;
        double p = norm1 * std::exp(-0.5 * x * x);
        if (p > 0.0) h_marg -= p * std::log(p) * h;
    }
    return 2.0 * h_marg - h_joint;
}

}  // namespace

TEST_SUITE("gpid") {

TEST_CASE("pairwise MI matches the quadrature oracle") {
    for (double rho : {0.0, 0.3, 0.5, -0.8}) {
        double est = gaussian_mutual_information(pair_cov(rho), {0}, {1});
        CHECK(est == doctest::Approx(quadrature_pair_mi(rho)).epsilon(0).scale(1).epsilon(1e-9));
    }
    // Frozen spot value for rho = 0.5.
    CHECK(gaussian_mutual_information(pair_cov(0.5), {0}, {1}) ==
          doctest::Approx(0.14384103622589045).epsilon(1e-13));
    CHECK(gaussian_mutual_information(pair_cov(0.0), {0}, {1}) == 0.0);
}

TEST_CASE("MI rejects degenerate and overlapping inputs") {
    CHECK_THROWS_AS(gaussian_mutual_information(pair_cov(1.0), {0}, {1}), DeterministicRelationshipError);
    CHECK_THROWS_AS(gaussian_mutual_information(pair_cov(0.5), {0}, {0}), ValidationError);
    CHECK_THROWS_AS(gaussian_mutual_information(pair_cov(0.5), {}, {1}), ValidationError);
    // Zero-variance conditioning block.
    CovarianceSummary flat;
    flat.matrix = Eigen::Matrix2d{{1.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(gaussian_mutual_information(flat, {0}, {1}), DegenerateInputError);
    // A lowered cap converts an ordinary value into a deterministic-relationship signal.
    CHECK_THROWS_AS(gaussian_mutual_information(pair_cov(0.5), {0}, {1}, 0.1), DeterministicRelationshipError);
}

TEST_CASE("decomposition of the unit sum-with-noise system") {
    // Y = X1 + X2 + noise, all unit variance. Marginal MI = half ln(3/2),
    // joint = half ln 3, synergy = half ln 2, uniques vanish.
    auto cov = make_cov({1, 0, 1, 0, 1, 1, 1, 1, 3});
    auto r = pid_mmi(cov);
    CHECK(r.mi_x1 == doctest::Approx(0.20273255405408219).epsilon(1e-13));
    CHECK(r.mi_x2 == doctest::Approx(0.20273255405408219).epsilon(1e-13));
    CHECK(r.mi_joint == doctest::Approx(0.54930614433405489).epsilon(1e-13));
    CHECK(r.synergy_raw == doctest::Approx(0.34657359027997264).epsilon(1e-13));
    CHECK(r.redundancy == doctest::Approx(0.20273255405408219).epsilon(1e-13));
    CHECK(r.unique_x1 == 0.0);
    CHECK(r.unique_x2 == 0.0);
    CHECK(r.synergy_corrected == r.synergy_raw);
}

TEST_CASE("decomposition of the asymmetric system") {
    // Y = 2*X1 + X2 + noise: mi_x1 = half ln 3 > mi_x2 = half ln(6/5),
    // joint = half ln 6, synergy = joint - mi_x1 = half ln 2.
    auto cov = make_cov({1, 0, 2, 0, 1, 1, 2, 1, 6});
    auto r = pid_mmi(cov);
    CHECK(r.mi_x1 == doctest::Approx(0.54930614433405489).epsilon(1e-13));
    CHECK(r.mi_x2 == doctest::Approx(0.091160778396977296).epsilon(1e-13));
    CHECK(r.mi_joint == doctest::Approx(0.89587973461402748).epsilon(1e-13));
    CHECK(r.synergy_raw == doctest::Approx(0.34657359027997264).epsilon(1e-12));
    CHECK(r.redundancy == r.mi_x2);
    CHECK(r.unique_x2 == 0.0);
    CHECK(r.unique_x1 == doctest::Approx(r.mi_x1 - r.mi_x2).epsilon(1e-13));
}

TEST_CASE("irrelevant second input adds nothing") {
    auto cov = make_cov({1, 0, 0.8, 0, 1, 0, 0.8, 0, 1.64});
    auto r = pid_mmi(cov);
    CHECK(r.mi_x2 == 0.0);
    CHECK(r.redundancy == 0.0);
    CHECK(std::fabs(r.synergy_raw) <= 1e-12);
}

TEST_CASE("identity and MMI structure hold on random covariances") {
    Rng rng(20260823);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::Matrix3d a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = rng.next_normal();
        CovarianceSummary cov;
        cov.matrix = a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity();
        auto r = pid_mmi(cov);
        CHECK(std::fabs(r.mi_joint - (r.synergy_raw + r.redundancy + r.unique_x1 + r.unique_x2)) <= 1e-9);
        CHECK(r.redundancy == std::min(r.mi_x1, r.mi_x2));
        CHECK(std::min(r.unique_x1, r.unique_x2) == 0.0);
        CHECK(r.unique_x1 >= 0.0);
        CHECK(r.unique_x2 >= 0.0);
        CHECK(r.synergy_raw >= -1e-9);

        // Swapping the inputs swaps the unique terms and fixes the rest.
        CovarianceSummary swapped;
        Eigen::PermutationMatrix<3> p;
        p.indices() << 1, 0, 2;
        swapped.matrix = p.transpose() * cov.matrix * p;
        auto s = pid_mmi(swapped);
        CHECK(s.mi_joint == doctest::Approx(r.mi_joint).epsilon(1e-12));
        CHECK(s.redundancy == doctest::Approx(r.redundancy).epsilon(1e-12));
        CHECK(s.synergy_raw == doctest::Approx(r.synergy_raw).epsilon(1e-11));
        CHECK(s.unique_x1 == doctest::Approx(r.unique_x2).epsilon(1e-11));
        CHECK(s.unique_x2 == doctest::Approx(r.unique_x1).epsilon(1e-11));
    }
}

TEST_CASE("sample covariance of iid normals is near identity") {
    SynthSpec spec;
    spec.kind = SynthKind::independent;
    spec.sample_count = 10000;
    spec.seed = 7;
    auto sys = generate_synthetic_system(spec);
    auto cov = covariance_matrix(sys.sample);
    CHECK(cov.sample_count == 10000);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double target = i == j ? 1.0 : 0.0;
            CHECK(std::fabs(cov.matrix(i, j) - target) < 0.05);
        }
}

TEST_CASE("synthetic generators match their analytic covariances") {
    SynthSpec spec;
    spec.kind = SynthKind::sum_with_noise;
    spec.coefficients = {1.0, 1.0};
    spec.noise_variance = 1.0;
    auto sys = generate_synthetic_system(spec);
    CHECK(sys.analytic.matrix(2, 2) == 3.0);
    CHECK(sys.analytic.matrix(0, 2) == 1.0);
    CHECK(sys.analytic.matrix(1, 2) == 1.0);
    CHECK(sys.analytic.matrix(0, 1) == 0.0);

    spec.kind = SynthKind::redundant_duplicate;
    auto dup = generate_synthetic_system(spec);
    CHECK(dup.sample.x1 == dup.sample.x2);
    CHECK_THROWS_AS(pid_mmi(covariance_matrix(dup.sample)), DegenerateInputError);

    spec.kind = SynthKind::linear_map;
    spec.coefficients = {0.5, 0.25, 0.4};
    auto lin = generate_synthetic_system(spec);
    CHECK(lin.analytic.matrix(0, 1) == 0.4);
    CHECK(lin.analytic.matrix(0, 2) == doctest::Approx(0.5 + 0.25 * 0.4).epsilon(1e-15));
    CHECK(lin.analytic.matrix(2, 2) == doctest::Approx(0.25 + 0.0625 + 2 * 0.5 * 0.25 * 0.4 + 1.0).epsilon(1e-15));
    // Empirical covariance approaches the analytic one.
    spec.sample_count = 20000;
    auto big = generate_synthetic_system(spec);
    auto est = covariance_matrix(big.sample);
    CHECK((est.matrix - big.analytic.matrix).cwiseAbs().maxCoeff() < 0.06);
}

TEST_CASE("generator reproducibility and validation") {
    SynthSpec spec;
    spec.kind = SynthKind::independent;
    spec.sample_count = 4;
    spec.seed = 99;
    auto a = generate_synthetic_system(spec);
    auto b = generate_synthetic_system(spec);
    CHECK(a.sample.x1 == b.sample.x1);
    CHECK(a.sample.y == b.sample.y);
    spec.seed = 100;
    auto c = generate_synthetic_system(spec);
    CHECK(a.sample.x1 != c.sample.x1);

    spec.noise_variance = 0.0;
    CHECK_THROWS_AS(generate_synthetic_system(spec), ValidationError);
    spec.noise_variance = 1.0;
    spec.sample_count = 1;
    CHECK_THROWS_AS(generate_synthetic_system(spec), ValidationError);
}

TEST_CASE("estimated joint MI converges to the closed form") {
    // Sum-with-noise target: half ln 3. The sampling std of the estimate at
    // n = 10000 is about 0.008 nats (multiple correlation 2/3), so the
    // per-seed band is set at 2.6 sigma and the seed-averaged error much
    // tighter.
    SynthSpec spec;
    spec.kind = SynthKind::sum_with_noise;
    spec.sample_count = 10000;
    int within = 0;
    double err_sum = 0.0;
    for (int s = 0; s < 100; ++s) {
        spec.seed = 1000 + static_cast<std::uint64_t>(s);
        auto sys = generate_synthetic_system(spec);
        auto r = pid_mmi(covariance_matrix(sys.sample));
        double err = r.mi_joint - 0.54930614433405489;
        err_sum += err;
        if (std::fabs(err) < 0.02) ++within;
    }
    CHECK(within >= 95);
    CHECK(std::fabs(err_sum / 100.0) < 0.003);
}

TEST_CASE("synergy invariant under per-column affine rescaling") {
    SynthSpec spec;
    spec.kind = SynthKind::sum_with_noise;
    spec.sample_count = 500;
    spec.seed = 31;
    auto sys = generate_synthetic_system(spec);
    auto base = pid_mmi(covariance_matrix(sys.sample));

    PooledSample scaled = sys.sample;
    for (auto& v : scaled.x1) v = 2.0 * v + 7.0;
    for (auto& v : scaled.x2) v = -3.0 * v + 1.0;
    for (auto& v : scaled.y) v = 0.5 * v - 4.0;
    auto r = pid_mmi(covariance_matrix(scaled));
    CHECK(r.synergy_raw == doctest::Approx(base.synergy_raw).epsilon(1e-9));
    CHECK(r.mi_joint == doctest::Approx(base.mi_joint).epsilon(1e-9));
}

TEST_CASE("bias-corrected synergy is reproducible bit for bit") {
    SynthSpec spec;
    spec.kind = SynthKind::sum_with_noise;
    spec.sample_count = 120;
    spec.seed = 5;
    auto sys = generate_synthetic_system(spec);
    auto a = synergy_score(sys.sample, 1, 42);
    auto b = synergy_score(sys.sample, 1, 42);
    CHECK(a.synergy_corrected == b.synergy_corrected);
    CHECK(a.synergy_bias == b.synergy_bias);
    auto c = synergy_score(sys.sample, 1, 43);
    CHECK(a.synergy_bias != c.synergy_bias);
    CHECK(a.surrogates_used == 1);
    CHECK_THROWS_AS(synergy_score(sys.sample, 0, 42), ValidationError);
}

TEST_CASE("shuffle correction removes small-sample inflation on average") {
    // Independent system: raw synergy is biased upward at n = 200; the
    // corrected score centers near zero. Light version of the closed-loop
    // check, averaged over 20 seeds.
    SynthSpec spec;
    spec.kind = SynthKind::independent;
    spec.sample_count = 200;
    double sum_corr = 0.0;
    for (int s = 0; s < 20; ++s) {
        spec.seed = 500 + static_cast<std::uint64_t>(s);
        auto sys = generate_synthetic_system(spec);
        auto r = synergy_score(sys.sample, 50, derive_seed(9, "test", static_cast<std::uint64_t>(s)));
        sum_corr += r.synergy_corrected;
        CHECK(r.surrogates_used == 50);
    }
    CHECK(std::fabs(sum_corr / 20.0) < 0.02);
}

TEST_CASE("unit conversion to bits") {
    auto cov = make_cov({1, 0, 1, 0, 1, 1, 1, 1, 3});
    auto nats = pid_mmi(cov);
    auto bits = to_bits(nats);
    CHECK(bits.unit == Unit::bits);
    CHECK(bits.synergy_raw == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(bits.mi_joint == doctest::Approx(0.79248125036057804).epsilon(1e-13));
    CHECK(to_bits(pid_mmi(make_cov({1, 0, 0, 0, 1, 0, 0, 0, 1}))).mi_joint == 0.0);
    CHECK_THROWS_AS(to_bits(bits), ValidationError);
}

TEST_CASE("serialization carries every field and the unit flag") {
    auto cov = make_cov({1, 0, 1, 0, 1, 1, 1, 1, 3});
    auto r = pid_mmi(cov);
    auto j = pid_to_json(r);
    for (const auto& name : pid_field_names()) CHECK(j.find('"' + name + '"') != std::string::npos);
    CHECK(j.find("\"unit\":\"nats\"") != std::string::npos);
    CHECK(pid_field_values(r).size() == pid_field_names().size());
}

}  // TEST_SUITE
