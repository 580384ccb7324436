#ifndef WUG_PARADIGM_PREP_HPP
#define WUG_PARADIGM_PREP_HPP

#include "wug/corpus.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wug {

// Slot after syncretism merging: the union of the feature sets of the
// original slots realized by the same surface form.
struct MergedSlot {
    std::set<std::string> features;

    bool operator==(const MergedSlot&) const = default;
    auto operator<=>(const MergedSlot&) const = default;

    bool contains(const std::string& f) const { return features.count(f) > 0; }
    std::string str() const { return SlotTag{features}.str(); }
};

// Paradigm after per-lexeme syncretism collapse: all cell forms are
// pairwise distinct, and syncretism_map records which original slots were
// merged into which cell.
struct CollapsedParadigm {
    std::string lexeme;
    std::map<MergedSlot, std::string> cells;
    MergedSlot lemma_slot;
    std::map<SlotTag, MergedSlot> syncretism_map;

    const std::string& lemma_form() const { return cells.at(lemma_slot); }
    std::size_t inflected_cell_count() const { return cells.size() - 1; }
};

// Groups cells by identical surface string; the lemma cell participates in
// grouping like any other cell.
CollapsedParadigm collapse(const Paradigm& paradigm);

// One audit row per removed lexeme: which base it derives from, the affix
// string, and the direction it attaches.
struct DerivedLexeme {
    std::string lexeme;
    std::string base_lexeme;
    std::string affix;
    bool is_prefix;  // affix attaches in front of every base form
};

// A lexeme l' is derived from l when a single non-empty string s, attached
// uniformly as prefix or suffix, maps every cell of l onto the matching cell
// of l'. Both paradigms must have identical merged-slot sets.
std::vector<DerivedLexeme> find_derived(const std::vector<CollapsedParadigm>& paradigms);

// Removes every derived lexeme; base lexemes are retained.
std::vector<CollapsedParadigm> filter_derived(const std::vector<CollapsedParadigm>& paradigms);

// Audit dump: `lexeme<TAB>base_lexeme<TAB>s<TAB>direction` lines.
std::string derived_audit_tsv(const std::vector<DerivedLexeme>& removed);

// Sum of the counts of the paradigm's distinct surface forms, each counted
// once (the lemma form included). Forms absent from the table contribute 0.
std::uint64_t lexeme_count(const CollapsedParadigm& paradigm, const FrequencyTable& freq);

} // namespace wug

#endif
