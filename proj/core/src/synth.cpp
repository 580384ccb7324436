#include "wug/synth.hpp"

#include "wug/errors.hpp"
#include "wug/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace wug {

namespace {

std::string random_stem(SplitMix64& rng, int alphabet_size, int min_len, int max_len) {
    int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    std::string s;
    s.reserve(len);
    for (int i = 0; i < len; ++i) s += static_cast<char>('a' + rng.below(static_cast<std::uint64_t>(alphabet_size)));
    return s;
}

// True when a is a proper prefix or proper suffix of b (either order); such
// stem pairs could trip the derivation predicate, so they are rejected.
bool affix_related(const std::string& a, const std::string& b) {
    const std::string& s = a.size() < b.size() ? a : b;
    const std::string& l = a.size() < b.size() ? b : a;
    if (s.size() == l.size()) return false;
    return l.compare(0, s.size(), s) == 0 || l.compare(l.size() - s.size(), s.size(), s) == 0;
}

} // namespace

SynthCorpus generate(const SynthConfig& config) {
    if (config.n_lexemes < 1 || config.n_slots < 1) throw ConfigError("n_lexemes and n_slots must be positive");
    if (config.n_suppletive > config.n_lexemes) throw ConfigError("n_suppletive exceeds n_lexemes");
    if (config.alphabet_size < 2 || config.alphabet_size > 26) throw ConfigError("alphabet_size must be in [2, 26]");
    if (config.stem_min < 1 || config.stem_max < config.stem_min) throw ConfigError("bad stem length range");

    std::vector<std::string> suffixes = config.suffixes;
    if (suffixes.empty()) {
        // Deterministic distinct 2-character suffixes, enumerated in base-S order.
        long capacity = static_cast<long>(config.alphabet_size) * config.alphabet_size;
        if (config.n_slots > capacity)
            throw ConfigError("alphabet too small to derive " + std::to_string(config.n_slots) + " distinct suffixes");
        for (int k = 0; k < config.n_slots; ++k) {
            std::string suf;
            suf += static_cast<char>('a' + k / config.alphabet_size);
            suf += static_cast<char>('a' + k % config.alphabet_size);
            suffixes.push_back(suf);
        }
    } else {
        if (static_cast<int>(suffixes.size()) != config.n_slots)
            throw ConfigError("suffix table size must equal n_slots");
        std::set<std::string> distinct(suffixes.begin(), suffixes.end());
        if (distinct.size() != suffixes.size()) throw ConfigError("suffixes must be distinct per slot");
    }

    SplitMix64 rng(config.seed);
    SplitMix64 stem_rng = rng.split();
    SplitMix64 rank_rng = rng.split();
    SplitMix64 suppl_rng = rng.split();

    // Stems: unique and never affix-related to one another, so the generated
    // regular paradigms contain no derivation-predicate pairs.
    std::vector<std::string> stems;
    std::unordered_set<std::string> seen;
    int attempts = 0;
    while (static_cast<int>(stems.size()) < config.n_lexemes) {
        if (++attempts > config.n_lexemes * 1000)
            throw ConfigError("could not generate enough distinct stems; enlarge alphabet or stem range");
        std::string s = random_stem(stem_rng, config.alphabet_size, config.stem_min, config.stem_max);
        if (seen.count(s)) continue;
        bool related = false;
        for (const auto& t : stems)
            if (affix_related(s, t)) {
                related = true;
                break;
            }
        if (related) continue;
        seen.insert(s);
        stems.push_back(s);
    }

    // Suppletive subset.
    std::vector<int> order(config.n_lexemes);
    for (int i = 0; i < config.n_lexemes; ++i) order[i] = i;
    suppl_rng.shuffle(order);
    std::set<int> suppletive(order.begin(), order.begin() + config.n_suppletive);

    SynthCorpus corpus;
    for (int i = 0; i < config.n_lexemes; ++i) {
        Paradigm p;
        p.lexeme = stems[i];
        p.lemma_slot = SlotTag::lemma_tag();
        p.cells[p.lemma_slot] = stems[i];
        bool is_suppletive = suppletive.count(i) > 0;
        if (is_suppletive) corpus.gold_irregular.insert(stems[i]);
        for (int k = 0; k < config.n_slots; ++k) {
            SlotTag tag;
            tag.features = {"V", "S" + std::to_string(k + 1)};
            std::string stem = stems[i];
            if (is_suppletive) {
                // Unrelated stem per cell: nothing about the lemma predicts it.
                stem = random_stem(stem_rng, config.alphabet_size, config.stem_min, config.stem_max);
            }
            p.cells[tag] = stem + suffixes[k];
        }
        corpus.paradigms.push_back(std::move(p));
    }

    // Zipfian lexeme counts. Ranks are a seeded shuffle; in high-frequency
    // coupling the suppletives are moved to the front.
    std::vector<int> ranks(config.n_lexemes);
    for (int i = 0; i < config.n_lexemes; ++i) ranks[i] = i;
    rank_rng.shuffle(ranks);
    if (config.coupling == FrequencyCoupling::HighFrequency) {
        std::stable_partition(ranks.begin(), ranks.end(), [&](int i) { return suppletive.count(i) > 0; });
    }

    for (int r = 0; r < config.n_lexemes; ++r) {
        int lex = ranks[r];
        double count = static_cast<double>(config.top_count) / std::pow(static_cast<double>(r + 1), config.zipf_s);
        const Paradigm& p = corpus.paradigms[lex];
        // Fixed harmonic proportions across cells, lemma first.
        std::vector<const std::string*> forms;
        forms.push_back(&p.cells.at(p.lemma_slot));
        for (const auto& [slot, form] : p.cells)
            if (!(slot == p.lemma_slot)) forms.push_back(&form);
        double wsum = 0.0;
        for (std::size_t k = 0; k < forms.size(); ++k) wsum += 1.0 / static_cast<double>(k + 1);
        for (std::size_t k = 0; k < forms.size(); ++k) {
            double share = (1.0 / static_cast<double>(k + 1)) / wsum;
            auto c = static_cast<std::uint64_t>(std::llround(count * share));
            if (c > 0) corpus.freq.counts[*forms[k]] += c;
        }
    }
    return corpus;
}

std::string SynthCorpus::unimorph_tsv() const { return to_unimorph(paradigms); }

std::string SynthCorpus::frequency_tsv() const {
    std::string out;
    for (const auto& [form, count] : freq.counts) out += form + "\t" + std::to_string(count) + "\n";
    return out;
}

} // namespace wug
