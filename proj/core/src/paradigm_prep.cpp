#include "wug/paradigm_prep.hpp"

#include <algorithm>
#include <unordered_map>

namespace wug {

CollapsedParadigm collapse(const Paradigm& paradigm) {
    // Group original slots by surface string.
    std::map<std::string, std::vector<const SlotTag*>> groups;
    for (const auto& [slot, form] : paradigm.cells) groups[form].push_back(&slot);

    CollapsedParadigm out;
    out.lexeme = paradigm.lexeme;
    for (const auto& [form, slots] : groups) {
        MergedSlot merged;
        for (const SlotTag* s : slots) merged.features.insert(s->features.begin(), s->features.end());
        out.cells[merged] = form;
        for (const SlotTag* s : slots) {
            out.syncretism_map[*s] = merged;
            if (*s == paradigm.lemma_slot) out.lemma_slot = merged;
        }
    }
    return out;
}

namespace {

bool slot_sets_equal(const CollapsedParadigm& a, const CollapsedParadigm& b) {
    if (a.cells.size() != b.cells.size()) return false;
    auto ia = a.cells.begin();
    auto ib = b.cells.begin();
    for (; ia != a.cells.end(); ++ia, ++ib)
        if (!(ia->first == ib->first)) return false;
    return true;
}

// Checks derived.cell == base.cell + s (or s + base.cell) for every slot.
bool affix_matches(const CollapsedParadigm& derived, const CollapsedParadigm& base, const std::string& s,
                   bool prefix) {
    auto id = derived.cells.begin();
    auto ib = base.cells.begin();
    for (; id != derived.cells.end(); ++id, ++ib) {
        const std::string& dw = id->second;
        const std::string& bw = ib->second;
        if (dw.size() != bw.size() + s.size()) return false;
        if (prefix) {
            if (dw.compare(0, s.size(), s) != 0 || dw.compare(s.size(), bw.size(), bw) != 0) return false;
        } else {
            if (dw.compare(0, bw.size(), bw) != 0 || dw.compare(bw.size(), s.size(), s) != 0) return false;
        }
    }
    return true;
}

} // namespace

std::vector<DerivedLexeme> find_derived(const std::vector<CollapsedParadigm>& paradigms) {
    // Candidate bases are found by matching lemma strings: the lemma cell is
    // quantified over like any other slot, so base.lemma must be a proper
    // prefix (suffixation) or proper suffix (prefixation) of derived.lemma.
    std::unordered_map<std::string, std::vector<std::size_t>> by_lemma;
    for (std::size_t i = 0; i < paradigms.size(); ++i) by_lemma[paradigms[i].lemma_form()].push_back(i);

    std::vector<DerivedLexeme> removed;
    for (std::size_t i = 0; i < paradigms.size(); ++i) {
        const CollapsedParadigm& cand = paradigms[i];
        const std::string& lemma = cand.lemma_form();
        bool found = false;
        // s non-empty, so only proper prefixes/suffixes qualify.
        for (std::size_t cut = 1; cut < lemma.size() && !found; ++cut) {
            // Suffix direction: lemma = base_lemma + s with s = lemma[cut:].
            if (auto it = by_lemma.find(lemma.substr(0, cut)); it != by_lemma.end()) {
                std::string s = lemma.substr(cut);
                for (std::size_t j : it->second) {
                    if (j == i) continue;
                    const CollapsedParadigm& base = paradigms[j];
                    if (slot_sets_equal(cand, base) && affix_matches(cand, base, s, /*prefix=*/false)) {
                        removed.push_back({cand.lexeme, base.lexeme, s, false});
                        found = true;
                        break;
                    }
                }
            }
            if (found) break;
            // Prefix direction: lemma = s + base_lemma with s = lemma[:cut].
            if (auto it = by_lemma.find(lemma.substr(cut)); it != by_lemma.end()) {
                std::string s = lemma.substr(0, cut);
                for (std::size_t j : it->second) {
                    if (j == i) continue;
                    const CollapsedParadigm& base = paradigms[j];
                    if (slot_sets_equal(cand, base) && affix_matches(cand, base, s, /*prefix=*/true)) {
                        removed.push_back({cand.lexeme, base.lexeme, s, true});
                        found = true;
                        break;
                    }
                }
            }
        }
    }
    return removed;
}

std::vector<CollapsedParadigm> filter_derived(const std::vector<CollapsedParadigm>& paradigms) {
    auto removed = find_derived(paradigms);
    std::set<std::string> drop;
    for (const auto& d : removed) drop.insert(d.lexeme);
    std::vector<CollapsedParadigm> kept;
    kept.reserve(paradigms.size() - drop.size());
    for (const auto& p : paradigms)
        if (!drop.count(p.lexeme)) kept.push_back(p);
    return kept;
}

std::string derived_audit_tsv(const std::vector<DerivedLexeme>& removed) {
    std::string out;
    for (const auto& d : removed) {
        out += d.lexeme;
        out += '\t';
        out += d.base_lexeme;
        out += '\t';
        out += d.affix;
        out += '\t';
        out += d.is_prefix ? "prefix" : "suffix";
        out += '\n';
    }
    return out;
}

std::uint64_t lexeme_count(const CollapsedParadigm& paradigm, const FrequencyTable& freq) {
    std::uint64_t total = 0;
    for (const auto& [slot, form] : paradigm.cells) total += freq.count(form);
    return total;
}

} // namespace wug
