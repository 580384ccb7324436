#include "wug/errors.hpp"
#include "wug/rng.hpp"
#include "wug/special_functions.hpp"
#include "wug/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace wug;

namespace {

// Independent closed-form OLS slope/intercept.
std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

} // namespace

TEST_CASE("pearson on exact linear data") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> up = {2, 4, 6, 8, 10}, down = {5, 4, 3, 2, 1};
    CHECK(pearson(x, up).r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(x, down).r == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson(x, up).n == 5);
}

TEST_CASE("pearson hand-checked value and p") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 1, 4, 3, 5};
    Correlation c = pearson(x, y);
    CHECK(c.r == doctest::Approx(0.8).epsilon(1e-12));
    // t = r sqrt(df/(1-r^2)), df = 3; p from the t distribution.
    double t = 0.8 * std::sqrt(3.0 / (1.0 - 0.64));
    CHECK(c.p == doctest::Approx(student_t_two_sided_p(t, 3)).epsilon(1e-10));
    CHECK(c.p > 0.05);   // n=5, r=0.8 is not significant
}

TEST_CASE("pearson is invariant under positive affine maps") {
    std::vector<double> x = {0.3, 1.7, 2.2, 5.0, 3.3, 0.1};
    std::vector<double> y = {1.0, 0.4, 2.9, 3.8, 2.0, 0.7};
    Correlation base = pearson(x, y);
    std::vector<double> xs = x, ys = y;
    for (double& v : xs) v = 3.5 * v - 2.0;
    for (double& v : ys) v = 0.25 * v + 10.0;
    Correlation mapped = pearson(xs, ys);
    CHECK(mapped.r == doctest::Approx(base.r).epsilon(1e-12));
    CHECK(mapped.p == doctest::Approx(base.p).epsilon(1e-12));
}

TEST_CASE("pearson preconditions") {
    CHECK_THROWS_AS(pearson({1, 2}, {3, 4}), NumericError);                // n < 3
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), NumericError);          // zero variance
    CHECK_THROWS_AS(pearson({1, 2, 3}, {1, 2}), NumericError);             // length mismatch
}

TEST_CASE("spearman is invariant under monotone transforms and handles ties") {
    std::vector<double> x = {1, 2, 3, 4, 5, 6};
    std::vector<double> y = {1.2, 0.9, 2.0, 2.5, 4.0, 3.9};
    Correlation base = spearman(x, y);
    std::vector<double> xs = x, ys = y;
    for (double& v : xs) v = std::exp(v);
    for (double& v : ys) v = v * v * v;
    Correlation mapped = spearman(xs, ys);
    CHECK(mapped.r == doctest::Approx(base.r).epsilon(1e-12));

    // Perfect monotone agreement and disagreement.
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}).r == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {8, 6, 4, 2}).r == doctest::Approx(-1.0));

    // Ties get mean ranks: both orderings of the tied pair agree.
    Correlation tied = spearman({1, 2, 2, 3}, {1, 5, 5, 9});
    CHECK(tied.r == doctest::Approx(1.0));
}

TEST_CASE("mixed model matches the OLS oracle when random effects vanish") {
    // Many groups, identical slope/intercept, tiny residual noise: the MLE
    // of the random-effect variances is ~0 and beta reduces to OLS.
    SplitMix64 rng(1234);
    ObservationSet obs;
    obs.level = ObservationLevel::Form;
    std::vector<double> xs, ys;
    for (int g = 0; g < 8; ++g) {
        for (int i = 0; i < 25; ++i) {
            double x = rng.uniform(-2.0, 2.0);
            double y = 1.5 + 0.7 * x + rng.uniform(-0.01, 0.01);
            obs.rows.push_back({"g" + std::to_string(g), "u", x, y});
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    MixedModelFit fit = fit_mixed(obs);
    auto [slope, intercept] = ols(xs, ys);
    CHECK(fit.converged);
    CHECK(fit.beta1 == doctest::Approx(slope).epsilon(1e-3));
    CHECK(fit.beta0 == doctest::Approx(intercept).epsilon(1e-3));
    CHECK(fit.n_params == 6);
    CHECK(fit.n_groups == 8);
}

TEST_CASE("mixed model full vs null behaves sanely on sloped data") {
    SplitMix64 rng(99);
    ObservationSet obs;
    for (int g = 0; g < 6; ++g) {
        double u0 = rng.uniform(-0.5, 0.5);
        for (int i = 0; i < 30; ++i) {
            double x = rng.uniform(0.0, 4.0);
            double y = u0 + 1.0 * x + rng.uniform(-0.2, 0.2);
            obs.rows.push_back({"g" + std::to_string(g), "u", x, y});
        }
    }
    MixedModelFit full = fit_mixed(obs);
    MixedModelFit null_fit = fit_mixed_null(obs);
    CHECK(full.n_params == 6);
    CHECK(null_fit.n_params == 5);
    CHECK(null_fit.slope_fixed_zero);
    CHECK(full.loglik >= null_fit.loglik - 1e-6);   // nested models
    CHECK(full.beta1 == doctest::Approx(1.0).epsilon(0.05));

    LikelihoodRatioTest lrt = likelihood_ratio_test(full, null_fit);
    CHECK(lrt.df == 1);
    CHECK(lrt.chi2 >= 0.0);
    CHECK(lrt.p < 0.001);   // slope 1.0 with this n is overwhelming
    CHECK(lrt.p == doctest::Approx(chi2_sf(lrt.chi2, 1)).epsilon(1e-10));
    CHECK(aic_log_odds(full, null_fit) ==
          doctest::Approx((null_fit.aic - full.aic) / 2.0).epsilon(1e-12));
    CHECK(aic_log_odds(full, null_fit) > 0.0);
}

TEST_CASE("likelihood ratio statistic floors at zero") {
    MixedModelFit full, null_fit;
    full.loglik = -100.5;      // numerically below the null
    null_fit.loglik = -100.0;
    LikelihoodRatioTest lrt = likelihood_ratio_test(full, null_fit);
    CHECK(lrt.chi2 == 0.0);
    CHECK(lrt.floored);
    CHECK(lrt.p == doctest::Approx(1.0));
}

TEST_CASE("mixed model requires enough data") {
    ObservationSet obs;
    obs.rows = {{"g", "u", 1.0, 2.0}, {"g", "u", 2.0, 3.0}};
    CHECK_THROWS_AS(fit_mixed(obs), NumericError);
}

TEST_CASE("build_observations filters levels and zero counts") {
    std::vector<ScoredForm> scores = {
        {"aa", "lex1", "PST;V", "wug1", -0.5, -1.0},
        {"aa", "lex1", "PRS;V", "wug2", -0.5, -3.0},
        {"aa", "lex2", "PST;V", "nofreq", -0.5, 2.0},
        {"bb", "lex3", "PST;V", "other", -0.5, 1.0},
        {"cc", "lex4", "PST;V", "excluded", -0.5, 1.0},
    };
    std::map<std::string, std::vector<CollapsedParadigm>> paradigms;
    for (const char* lang : {"aa", "bb", "cc"}) {
        for (const auto& s : scores) {
            if (s.language != lang) continue;
            CollapsedParadigm p;
            p.lexeme = s.lexeme;
            p.lemma_slot = MergedSlot{{"LEMMA"}};
            p.cells[p.lemma_slot] = s.lexeme;
            bool fresh = true;
            for (auto& q : paradigms[lang])
                if (q.lexeme == s.lexeme) {
                    q.cells[MergedSlot{{s.slot}}] = s.form;
                    fresh = false;
                }
            if (fresh) {
                p.cells[MergedSlot{{s.slot}}] = s.form;
                paradigms[lang].push_back(p);
            }
        }
    }
    std::map<std::string, FrequencyTable> freq;
    freq["aa"].counts = {{"wug1", 10}, {"wug2", 5}};
    freq["bb"].counts = {{"other", 7}};
    freq["cc"].counts = {{"excluded", 3}};

    auto form = build_observations(scores, paradigms, freq, ObservationLevel::Form, {"aa", "bb"});
    REQUIRE(form.rows.size() == 3);   // nofreq (count 0) and cc (excluded) dropped
    for (const auto& row : form.rows) CHECK(row.language != "cc");
    // log_count is the natural log of the summed count.
    CHECK(form.rows[0].log_count == doctest::Approx(std::log(10.0)));

    auto lex = build_observations(scores, paradigms, freq, ObservationLevel::Lexeme, {"aa", "bb"});
    // lex1 (counts 15), lex3 (7); lex2 has zero paradigm count.
    REQUIRE(lex.rows.size() == 2);
    CHECK(lex.rows[0].unit == "lex1");
    CHECK(lex.rows[0].log_count == doctest::Approx(std::log(15.0)));
    CHECK(lex.rows[0].iota == doctest::Approx(-2.0));   // mean of -1 and -3
}
