#ifndef WUG_CORPUS_HPP
#define WUG_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wug {

// Reserved slot tag for the synthesized lemma cell. UniMorph files list only
// inflected forms; the model conditions on the lemma string, so the identity
// cell is added during parsing.
inline const std::string kLemmaFeature = "LEMMA";

// Morphosyntactic tag: an unordered bag of feature-value strings.
// UniMorph ships flat tags, so key=value structure is not modeled.
struct SlotTag {
    std::set<std::string> features;

    bool operator==(const SlotTag&) const = default;
    auto operator<=>(const SlotTag&) const = default;

    bool is_lemma() const { return features.size() == 1 && *features.begin() == kLemmaFeature; }

    // Canonical ';'-joined rendering (set order, i.e. lexicographic).
    std::string str() const;

    static SlotTag lemma_tag() { return SlotTag{{kLemmaFeature}}; }
    static SlotTag parse(const std::string& joined);
};

// Ordered universe of feature-value strings seen in a corpus.
struct FeatureInventory {
    std::vector<std::string> features;           // sorted lexicographically
    std::map<std::string, int> index;

    static FeatureInventory build(const std::set<std::string>& values);
    int lookup(const std::string& f) const;      // -1 when absent
    std::size_t size() const { return features.size(); }
};

struct Triple {
    std::string lexeme;
    SlotTag slot;
    std::string form;
};

// A lexeme's map from slots to surface forms, with a designated lemma cell.
struct Paradigm {
    std::string lexeme;
    std::map<SlotTag, std::string> cells;
    SlotTag lemma_slot;

    const std::string& lemma_form() const { return cells.at(lemma_slot); }
};

struct FrequencyTable {
    std::map<std::string, std::uint64_t> counts;

    std::uint64_t count(const std::string& form) const {
        auto it = counts.find(form);
        return it == counts.end() ? 0 : it->second;
    }
};

// Input: tab-separated `lemma<TAB>form<TAB>feat1;feat2;...`, blank lines
// permitted. One paradigm per distinct lemma string; a {LEMMA} cell mapping
// to the lemma itself is synthesized. Duplicate (lemma, slot) lines with
// identical forms are deduplicated; conflicting forms raise ParseError.
std::vector<Paradigm> parse_unimorph(std::istream& in);
std::vector<Paradigm> parse_unimorph(const std::string& text);

// Inverse of parse_unimorph: emits the inflected cells as UniMorph lines
// (the synthesized lemma cell is skipped). Deterministic line order.
std::string to_unimorph(const std::vector<Paradigm>& paradigms);

// Input: `form<TAB>count` lines; counts for repeated forms are summed.
FrequencyTable parse_frequency(std::istream& in);
FrequencyTable parse_frequency(const std::string& text);

} // namespace wug

#endif
