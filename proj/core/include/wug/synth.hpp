#ifndef WUG_SYNTH_HPP
#define WUG_SYNTH_HPP

#include "wug/corpus.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace wug {

enum class FrequencyCoupling {
    HighFrequency,   // suppletive lexemes occupy the top Zipf ranks
    Uniform          // suppletive lexemes scattered through the rank range
};

struct SynthConfig {
    int n_lexemes = 100;
    int n_slots = 4;
    int alphabet_size = 10;
    std::vector<std::string> suffixes;   // per slot; auto-derived when empty
    int n_suppletive = 0;
    FrequencyCoupling coupling = FrequencyCoupling::Uniform;
    double zipf_s = 1.0;
    std::uint64_t seed = 1;
    int stem_min = 3;
    int stem_max = 6;
    std::uint64_t top_count = 1000000;   // count of the rank-1 lexeme
};

struct SynthCorpus {
    std::vector<Paradigm> paradigms;
    FrequencyTable freq;
    std::set<std::string> gold_irregular;   // lexeme ids of the suppletives

    std::string unimorph_tsv() const;
    std::string frequency_tsv() const;
};

// Regular lexemes inflect by stem + slot-determined suffix; suppletive
// lexemes replace every non-lemma cell with an unrelated random stem plus
// the slot suffix. Lexeme counts are Zipfian (count proportional to
// rank^-s) and split across cells by fixed per-slot proportions.
// Deterministic given the config.
SynthCorpus generate(const SynthConfig& config);

} // namespace wug

#endif
