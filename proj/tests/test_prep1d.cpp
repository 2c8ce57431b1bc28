#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "spectrafuse/prep1d.hpp"
#include "spectrafuse/search.hpp"
#include "spectrafuse/synth.hpp"
#include "support.hpp"

using namespace spectrafuse;
using namespace spectrafuse::prep1d;

namespace {

double gaussian(double x, double c, double w) { return std::exp(-0.5 * (x - c) * (x - c) / (w * w)); }

std::vector<double> dense_penalized(const std::vector<double>& w, double lambda, const std::vector<double>& rhs) {
    const auto n = static_cast<Eigen::Index>(w.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n - 2, n);
    for (Eigen::Index i = 0; i < n - 2; ++i) {
        D(i, i) = 1;
        D(i, i + 1) = -2;
        D(i, i + 2) = 1;
    }
    Eigen::MatrixXd A = lambda * D.transpose() * D;
    for (Eigen::Index i = 0; i < n; ++i) A(i, i) += w[static_cast<std::size_t>(i)];
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);
    const Eigen::VectorXd z = A.fullPivLu().solve(b);
    return {z.data(), z.data() + n};
}

}  // namespace

TEST_CASE("replicate averaging") {
    Rng rng(1);
    std::vector<Spectrum1D> reps;
    for (int r = 0; r < 3; ++r) reps.push_back(testing::make_spectrum(0, 20, 1, [&](double) { return rng.normal(); }));
    const auto avg = average_replicates(reps);
    for (std::size_t i = 0; i < avg.size(); ++i) {
        double s = 0;
        for (const auto& r : reps) s += r.intensity[i];
        CHECK(std::abs(avg.intensity[i] - s / 3.0) <= 1e-12);
    }
    CHECK(average_replicates(std::span(reps).first(1)).intensity == reps[0].intensity);
}

TEST_CASE("region selection") {
    const auto s = testing::make_spectrum(100, 3200, 2, [](double x) { return x; });
    const auto r = select_region(s, kRamanLo, kRamanHi);
    CHECK(r.axis.front() == 600);
    CHECK(r.axis.back() == 1800);
    CHECK(select_region(s, 0, 5000).intensity == s.intensity);
    CHECK_THROWS_AS(select_region(s, 5000, 6000), SpectraError);
}

TEST_CASE("polynomial baseline") {
    SUBCASE("exact quadratic is removed") {
        const auto s = testing::make_spectrum(650, 4000, 2, [](double x) { return 1e-7 * x * x - 3e-4 * x + 2; });
        for (double v : baseline_polynomial(s, 2).intensity) CHECK(std::abs(v) <= 1e-8);
    }
    SUBCASE("constant is removed") {
        const auto s = testing::make_spectrum(0, 100, 1, [](double) { return 4.2; });
        for (double v : baseline_polynomial(s, 3).intensity) CHECK(std::abs(v) <= 1e-8);
    }
    SUBCASE("flat base under one narrow peak") {
        // ModPoly's residual bias grows with peak area; a narrow band stays within 2%.
        const auto s = testing::make_spectrum(0, 1000, 1, [](double x) { return 1.0 + gaussian(x, 500, 4); });
        const auto out = baseline_polynomial(s, 3).intensity;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (std::abs(s.axis[i] - 500) > 16) CHECK(std::abs(out[i]) <= 0.02);
        CHECK(out[500] == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("asymmetric least squares") {
    SUBCASE("constant spectrum") {
        const auto s = testing::make_spectrum(0, 199, 1, [](double) { return 3.0; });
        for (double v : baseline_als(s).intensity) CHECK(std::abs(v) <= 1e-8);
    }
    SUBCASE("flat base with a narrow peak") {
        const auto s = testing::make_spectrum(0, 999, 1, [](double x) { return 1.0 + 10.0 * gaussian(x, 500, 4); });
        const auto out = baseline_als(s, 1e5, 0.01, 10).intensity;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (std::abs(s.axis[i] - 500) > 25) CHECK(std::abs(out[i]) < 0.05);
        CHECK(out[500] == doctest::Approx(10.0).epsilon(0.1));
    }
    SUBCASE("banded solve matches a dense solve") {
        Rng rng(2);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> w(50), rhs(50);
            for (auto& v : w) v = rng.uniform() < 0.5 ? 0.01 : 0.99;
            for (auto& v : rhs) v = rng.uniform(-5, 5);
            const double lambda = std::pow(10.0, rng.uniform(0, 6));
            const auto fast = solve_penalized(w, lambda, rhs);
            const auto dense = dense_penalized(w, lambda, rhs);
            double scale = 0;
            for (double v : dense) scale = std::max(scale, std::abs(v));
            for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(fast[i] - dense[i]) <= 1e-9 * std::max(1.0, scale));
        }
    }
    SUBCASE("invalid arguments") {
        const std::vector<double> y(10, 1.0);
        CHECK_THROWS_AS(als_fit(y, -1, 0.01, 10), SpectraError);
        CHECK_THROWS_AS(als_fit(y, 1e5, 1.5, 10), SpectraError);
    }
}

TEST_CASE("snv rejects constant input") {
    const auto s = testing::make_spectrum(0, 10, 1, [](double) { return 2.0; });
    CHECK_THROWS_AS(snv(s), SpectraError);
}

TEST_CASE("Savitzky-Golay derivatives") {
    SUBCASE("second derivative of x^2 is 2") {
        const auto s = testing::make_spectrum(0, 10, 0.1, [](double x) { return x * x; });
        for (double v : savitzky_golay(s, 11, 3, 2).intensity) CHECK(std::abs(v - 2.0) <= 1e-8);
    }
    SUBCASE("derivatives agree with finite differences") {
        const auto s = testing::make_spectrum(0, 20, 0.05, [](double x) { return std::sin(x) + 0.1 * x; });
        const auto d1 = savitzky_golay(s, 11, 3, 1).intensity;
        const auto d2 = savitzky_golay(s, 11, 3, 2).intensity;
        const double h = 0.05;
        for (std::size_t i = 20; i + 20 < s.size(); ++i) {
            const double fd1 = (s.intensity[i + 1] - s.intensity[i - 1]) / (2 * h);
            const double fd2 = (s.intensity[i + 1] - 2 * s.intensity[i] + s.intensity[i - 1]) / (h * h);
            if (std::abs(fd1) > 0.05) CHECK(std::abs(d1[i] - fd1) <= 0.01 * std::abs(fd1));
            if (std::abs(fd2) > 0.05) CHECK(std::abs(d2[i] - fd2) <= 0.01 * std::abs(fd2));
        }
    }
    SUBCASE("smoothing reduces white-noise variance") {
        Rng rng(4);
        const auto s = testing::make_spectrum(0, 499, 1, [&](double) { return rng.normal(); });
        const auto out = savitzky_golay(s, 11, 3, 0).intensity;
        auto var = [](const std::vector<double>& v) {
            const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double a = 0;
            for (double x : v) a += (x - m) * (x - m);
            return a / static_cast<double>(v.size());
        };
        CHECK(var(out) < var(s.intensity));
    }
    SUBCASE("argument checks") {
        const auto s = testing::make_spectrum(0, 20, 1, [](double x) { return x; });
        CHECK_THROWS_AS(savitzky_golay(s, 10, 3, 0), SpectraError);
        CHECK_THROWS_AS(savitzky_golay(s, 5, 5, 0), SpectraError);
        CHECK_THROWS_AS(savitzky_golay(s, 31, 3, 0), SpectraError);
        const Spectrum1D uneven(SpectralAxis({0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12}, AxisUnit::Wavenumber),
                                std::vector<double>(12, 1.0));
        CHECK_THROWS_WITH_AS(savitzky_golay(uneven, 5, 2, 0), doctest::Contains("non-uniform"), SpectraError);
    }
}

TEST_CASE("moving average against a naive oracle") {
    Rng rng(5);
    const auto s = testing::make_spectrum(0, 99, 1, [&](double) { return rng.normal(); });
    for (int w : {1, 3, 9, 15}) {
        const auto out = moving_average(s, w).intensity;
        const int h = w / 2;
        for (int i = 0; i < 100; ++i) {
            double sum = 0;
            int n = 0;
            for (int j = std::max(0, i - h); j <= std::min(99, i + h); ++j, ++n) sum += s.intensity[static_cast<std::size_t>(j)];
            CHECK(std::abs(out[static_cast<std::size_t>(i)] - sum / n) <= 1e-12);
        }
    }
}

TEST_CASE("derivative blocks") {
    const auto line = testing::make_spectrum(0, 50, 0.5, [](double x) { return 3 * x + 1; });
    for (double v : derivative_block(line, Derivative::First, 11, 3)) CHECK(std::abs(v - 3.0) <= 1e-8);
    CHECK(derivative_block(line, Derivative::FirstAndSecond, 11, 3).size() == 2 * line.size());
    Rng rng(6);
    const auto noisy = testing::make_spectrum(0, 50, 0.5, [&](double) { return rng.normal(); });
    const auto a = derivative_block(noisy, Derivative::Second, 11, 3);
    const auto b = savitzky_golay(noisy, 11, 3, 2).intensity;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    CHECK(derivative_block(noisy, Derivative::None, 11, 3) == noisy.intensity);
}

TEST_CASE("area normalization") {
    Rng rng(7);
    const auto v = testing::random_vector(rng, 40);
    const auto out = normalize(v, Normalization::Area, 2.5);
    double area = 0;
    for (double x : out) area += std::abs(x) * 2.5;
    CHECK(std::abs(area - 1.0) <= 1e-12);
    const std::vector<double> zeros(5, 0.0);
    CHECK_THROWS_AS(normalize(zeros, Normalization::L2), SpectraError);
}

TEST_CASE("pipeline chains") {
    Rng rng(8);
    std::vector<Spectrum1D> reps;
    for (int r = 0; r < 3; ++r)
        reps.push_back(testing::make_spectrum(650, 4000, 4, [&](double x) {
            return 0.5 * gaussian(x, 1650, 20) + 0.2 * gaussian(x, 2920, 15) + 1e-4 * x + 0.01 * rng.normal();
        }));
    SUBCASE("all-none is the identity") {
        const auto out = apply_pipeline(PipelineConfig{ReplicateMode::KeepAll}, reps);
        REQUIRE(out.size() == 3);
        CHECK(out[1] == reps[1].intensity);
        CHECK(apply_pipeline(PipelineConfig{}, reps).size() == 1);
    }
    SUBCASE("first_and_second doubles the region length") {
        PipelineConfig cfg;
        cfg.region = Region::Fingerprint;
        cfg.derivative = Derivative::FirstAndSecond;
        const auto out = apply_pipeline(cfg, reps);
        CHECK(out.front().size() == 2 * select_region(reps[0], 900, 1800).size());
    }
    SUBCASE("selected FTIR pipeline runs on synthetic data") {
        auto spec = synth::SynthSpec::table1();
        spec.ftir.step = 8;
        spec.patients = {{Group::Breast, 2}, {Group::Colon, 2}, {Group::Control, 2}};
        spec.availability = {{Group::Breast, {2, 2, 2}}, {Group::Colon, {2, 2, 2}}, {Group::Control, {2, 2, 2}}};
        const auto t = synth::gen_1d(spec, Modality::FTIR);
        std::vector<Spectrum1D> patient;
        for (const auto* r : t.records_of("breast_001")) patient.push_back(r->spectrum());
        const auto out = apply_pipeline(selected_ftir_pipeline(), patient);
        REQUIRE(out.size() == 3);
        for (const auto& v : out) {
            CHECK(v.size() == patient[0].size());
            for (double x : v) CHECK(std::isfinite(x));
        }
    }
    SUBCASE("every configuration runs on smooth input") {
        for (const auto& cfg : search::enumerate_pipelines()) {
            const auto out = apply_pipeline(cfg, reps);
            CHECK(out.size() == (cfg.replicate_mode == ReplicateMode::KeepAll ? 3u : 1u));
        }
    }
}

TEST_CASE("pipeline config JSON round trip") {
    for (const auto& cfg : search::enumerate_pipelines()) CHECK(pipeline_from_json(to_json(cfg)) == cfg);
    CHECK_THROWS_AS(pipeline_from_json(nlohmann::json{{"baseline", "cubic"}}), SpectraError);
}

TEST_CASE("Raman pipeline") {
    auto spec = synth::SynthSpec::table1();
    spec.patients = {{Group::Breast, 1}, {Group::Colon, 1}, {Group::Control, 1}};
    spec.availability = {{Group::Breast, {1, 1, 1}}, {Group::Colon, {1, 1, 1}}, {Group::Control, {1, 1, 1}}};
    spec.raman.noise = 0.0;
    const auto with_ramp = synth::gen_1d(spec, Modality::Raman).records.front().spectrum();
    spec.raman.ramp_amplitude = 0.0;
    const auto without = synth::gen_1d(spec, Modality::Raman).records.front().spectrum();

    const auto out = raman_pipeline(with_ramp);
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    double var = 0;
    for (double v : out) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) <= 1e-12);
    CHECK(std::abs(std::sqrt(var / static_cast<double>(out.size())) - 1.0) <= 1e-12);

    auto peaks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 1; i + 1 < v.size(); ++i)
            if (v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] > 0.5) idx.push_back(i);
        return idx;
    };
    CHECK(peaks(out) == peaks(raman_pipeline(without)));
    CHECK_FALSE(peaks(out).empty());

    const auto flat = testing::make_spectrum(100, 3200, 2, [](double) { return 1.0; });
    CHECK_THROWS_AS(raman_pipeline(flat), SpectraError);
}
