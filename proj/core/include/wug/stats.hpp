#ifndef WUG_STATS_HPP
#define WUG_STATS_HPP

#include "wug/irregularity.hpp"
#include "wug/paradigm_prep.hpp"

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wug {

struct Correlation {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

// Sample Pearson r with a two-sided p-value from the t approximation.
// Requires n >= 3 and nonzero variance in both arguments.
Correlation pearson(const std::vector<double>& x, const std::vector<double>& y);

// Pearson on average-ranked data (ties get the mean rank).
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

enum class ObservationLevel { Form, Lexeme };

struct Observation {
    std::string language;
    std::string unit;       // form or lexeme id
    double log_count;
    double iota;
};

struct ObservationSet {
    ObservationLevel level = ObservationLevel::Form;
    std::vector<Observation> rows;
};

// Maximum-likelihood fit of
//   iota = b0 + b1*logcount + u0_lang + u1_lang*logcount + e
// with per-language random intercepts and slopes. The 2x2 random-effect
// covariance is searched over a log-Cholesky parameterization by Nelder-Mead
// while beta and the residual variance are profiled out by GLS.
struct MixedModelFit {
    double beta0 = 0.0;
    double beta1 = 0.0;
    std::array<std::array<double, 2>, 2> random_cov{};   // absolute scale
    double residual_var = 0.0;
    double loglik = 0.0;
    double aic = 0.0;
    int n_params = 0;        // 6 full, 5 null
    bool slope_fixed_zero = false;
    bool converged = false;
    std::size_t n_obs = 0;
    std::size_t n_groups = 0;
};

MixedModelFit fit_mixed(const ObservationSet& obs);

// Same model with the fixed slope pinned at 0; random slopes are retained.
MixedModelFit fit_mixed_null(const ObservationSet& obs);

struct LikelihoodRatioTest {
    double chi2 = 0.0;
    int df = 1;
    double p = 1.0;
    bool floored = false;    // full fit scored below null; stat clamped to 0
};

LikelihoodRatioTest likelihood_ratio_test(const MixedModelFit& full, const MixedModelFit& null_fit);

// (AIC_null - AIC_full) / 2: log relative likelihood favoring the full model.
double aic_log_odds(const MixedModelFit& full, const MixedModelFit& null_fit);

// Form level: one row per scored non-lemma form with count >= 1,
// log_count = ln(count). Lexeme level: one row per lexeme with summed
// paradigm count >= 1 and iota averaged over its scored cells. Zero-count
// units are excluded; languages outside `included_languages` are dropped.
ObservationSet build_observations(const std::vector<ScoredForm>& scores,
                                  const std::map<std::string, std::vector<CollapsedParadigm>>& paradigms_by_language,
                                  const std::map<std::string, FrequencyTable>& freq_by_language,
                                  ObservationLevel level,
                                  const std::set<std::string>& included_languages);

} // namespace wug

#endif
