#ifndef WUG_PIPELINE_HPP
#define WUG_PIPELINE_HPP

#include "wug/corpus.hpp"
#include "wug/cvsplit.hpp"
#include "wug/irregularity.hpp"
#include "wug/paradigm_prep.hpp"
#include "wug/stats.hpp"
#include "wug/transducer.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wug {

struct LanguageInput {
    std::string name;
    std::string unimorph_path;
    std::string freq_path;
    std::string gold_path;       // optional
};

struct PipelineConfig {
    std::vector<LanguageInput> languages;
    int folds = 10;
    std::uint64_t seed = 1;
    TrainConfig train;
    int beam_width = 4;
    double accuracy_threshold = 0.75;   // language inclusion gate
    std::string out_dir;                // empty: no artifacts written
    int jobs = 1;
    bool filter_derived_lexemes = true;
    bool write_checkpoints = true;

    void validate() const;
};

// Flat `key = value` configuration text with WUGSCOPE_* environment
// overrides (WUGSCOPE_SEED overrides key "seed", and so on).
std::map<std::string, std::string> parse_flat_config(const std::string& text);
void apply_env_overrides(std::map<std::string, std::string>& config);
PipelineConfig config_from_map(const std::map<std::string, std::string>& kv);
std::string resolved_config_text(const PipelineConfig& config);

struct LanguageReport {
    std::string name;
    std::size_t lexemes = 0;            // after collapse + derived filter
    std::size_t forms = 0;              // scored non-lemma forms
    double forms_per_lexeme = 0.0;
    double accuracy = 0.0;
    std::vector<double> fold_accuracy;
    double fold_accuracy_variance = 0.0;
    double avg_iota = 0.0;
    bool included = false;              // passed the accuracy gate
    std::size_t removed_derived = 0;
    std::size_t lemma_only_excluded = 0;
    std::optional<Correlation> form_correlation;     // pearson, within language
    std::optional<Correlation> lexeme_correlation;
    std::optional<Correlation> gold_validation;      // spearman vs annotations
};

struct PooledAnalysis {
    MixedModelFit full;
    MixedModelFit null_fit;
    LikelihoodRatioTest lrt;
    double aic_log_odds_value = 0.0;
    std::size_t n_obs = 0;
};

struct AnalysisReport {
    std::vector<LanguageReport> languages;
    std::optional<PooledAnalysis> form_level;
    std::optional<PooledAnalysis> lexeme_level;
    // Provenance: every number in the report traces back through these.
    std::uint64_t seed = 0;
    int folds = 0;
    int beam_width = 0;
    double accuracy_threshold = 0.75;
    TrainConfig train;
    double iota_epsilon = kIotaEps;
    std::string log_base = "e";
    std::string prng = "splitmix64";
    std::string config_hash;
    std::vector<ScoredForm> scores;     // all scored held-out forms
};

// ingest -> collapse -> filter -> split -> per-fold train/score -> iota ->
// accuracy gate -> statistics. Languages failing the gate stay in the
// accuracy table but are excluded from the irregularity/frequency analyses.
AnalysisReport run_pipeline(const PipelineConfig& config);

std::string report_json(const AnalysisReport& report);

// Spearman between iota and expert labels over the intersection of units;
// gold maps forms (or lexeme ids) to numeric labels.
Correlation validate_against_gold(const std::vector<ScoredForm>& scores,
                                  const std::map<std::string, double>& gold);

std::map<std::string, double> parse_gold_file(const std::string& text);

} // namespace wug

#endif
