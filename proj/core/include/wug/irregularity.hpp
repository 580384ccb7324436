#ifndef WUG_IRREGULARITY_HPP
#define WUG_IRREGULARITY_HPP

#include "wug/paradigm_prep.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wug {

// Probabilities are clamped to [kIotaEps, 1-kIotaEps] before the odds are
// taken; the model can assign numerically 1.0 to easy forms, which would
// otherwise give infinite odds. Caps |iota| at about 20.72.
inline constexpr double kIotaEps = 1e-9;

enum class IotaLevel { Form, Lexeme, Language };

struct IrregularityScore {
    double value = 0.0;
    double probability = 0.5;   // after clamping
    IotaLevel level = IotaLevel::Form;
};

// Negative log odds -ln(p/(1-p)) of the wug-test probability. Zero at
// p = 0.5, negative when the correct form carries most of the mass.
IrregularityScore iota_form(double p);

// Mean of the form scores over all non-lemma cells (denominator
// |cells| - 1). A paradigm whose only cell is the lemma has no score;
// such lexemes are excluded from lexeme-level analyses.
std::optional<IrregularityScore> iota_lexeme(const CollapsedParadigm& paradigm,
                                             const std::map<MergedSlot, IrregularityScore>& form_scores);

double language_average(const std::vector<double>& form_iotas);

// One scored held-out form; the probability comes from the fold whose test
// split contained the form's lexeme.
struct ScoredForm {
    std::string language;
    std::string lexeme;
    std::string slot;        // canonical ';'-joined merged features
    std::string form;
    double log_p = 0.0;
    double iota = 0.0;
};

// `language<TAB>lexeme<TAB>slot_features<TAB>form<TAB>log_p<TAB>iota`
std::string scores_tsv(const std::vector<ScoredForm>& scores);
std::vector<ScoredForm> parse_scores_tsv(const std::string& text);

} // namespace wug

#endif
