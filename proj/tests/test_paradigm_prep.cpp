#include "wug/corpus.hpp"
#include "wug/paradigm_prep.hpp"

#include <doctest.h>

#include <algorithm>

using namespace wug;

namespace {

Paradigm make_paradigm(const std::string& lexeme,
                       const std::vector<std::pair<std::string, std::string>>& cells) {
    Paradigm p;
    p.lexeme = lexeme;
    p.lemma_slot = SlotTag::lemma_tag();
    p.cells[p.lemma_slot] = lexeme;
    for (const auto& [tag, form] : cells) p.cells[SlotTag::parse(tag)] = form;
    return p;
}

} // namespace

TEST_CASE("collapse merges the German Herr cells as in the full declension") {
    // Herr: all plural cells are Herren; gen/acc/dat singular are all Herrn.
    Paradigm herr = make_paradigm("Herr", {
        {"N;NOM;SG", "Herr"}, {"N;GEN;SG", "Herrn"}, {"N;ACC;SG", "Herrn"}, {"N;DAT;SG", "Herrn"},
        {"N;NOM;PL", "Herren"}, {"N;GEN;PL", "Herren"}, {"N;ACC;PL", "Herren"}, {"N;DAT;PL", "Herren"},
    });
    CollapsedParadigm c = collapse(herr);
    // Herr == lemma, Herrn, Herren: three distinct surface strings.
    CHECK(c.cells.size() == 3);
    CHECK(c.inflected_cell_count() == 2);
    MergedSlot gad = c.syncretism_map.at(SlotTag::parse("N;GEN;SG"));
    CHECK(gad == c.syncretism_map.at(SlotTag::parse("N;ACC;SG")));
    CHECK(gad == c.syncretism_map.at(SlotTag::parse("N;DAT;SG")));
    CHECK(c.cells.at(gad) == "Herrn");
    CHECK(gad.contains("GEN"));
    CHECK(gad.contains("ACC"));
    CHECK(gad.contains("DAT"));
    CHECK(gad.contains("SG"));
    MergedSlot pl = c.syncretism_map.at(SlotTag::parse("N;NOM;PL"));
    CHECK(c.cells.at(pl) == "Herren");
    CHECK(pl.contains("NOM"));
    CHECK(pl.contains("DAT"));
    // The nominative singular merged with the synthesized lemma cell.
    CHECK(c.syncretism_map.at(SlotTag::parse("N;NOM;SG")) == c.lemma_slot);
}

TEST_CASE("collapse keeps distinct Wort cells apart") {
    Paradigm wort = make_paradigm("Wort", {
        {"N;NOM;SG", "Wort"}, {"N;GEN;SG", "Wortes"}, {"N;ACC;SG", "Wort"}, {"N;DAT;SG", "Worte"},
        {"N;NOM;PL", "Wörter"}, {"N;GEN;PL", "Wörter"}, {"N;ACC;PL", "Wörter"}, {"N;DAT;PL", "Wörtern"},
    });
    CollapsedParadigm c = collapse(wort);
    // Wort (nom/acc sg + lemma), Wortes, Worte, Wörter (nom/gen/acc pl), Wörtern.
    CHECK(c.cells.size() == 5);
    std::set<std::string> forms;
    for (const auto& [slot, form] : c.cells) forms.insert(form);
    CHECK(forms == std::set<std::string>{"Wort", "Wortes", "Worte", "Wörter", "Wörtern"});
    // nom.sg and acc.sg collapse together; nom.pl and dat.pl stay apart.
    CHECK(c.syncretism_map.at(SlotTag::parse("N;NOM;SG")) == c.syncretism_map.at(SlotTag::parse("N;ACC;SG")));
    CHECK(c.syncretism_map.at(SlotTag::parse("N;NOM;PL")) != c.syncretism_map.at(SlotTag::parse("N;DAT;PL")));
}

namespace {

std::vector<CollapsedParadigm> collapse_all(const std::vector<Paradigm>& ps) {
    std::vector<CollapsedParadigm> out;
    for (const auto& p : ps) out.push_back(collapse(p));
    return out;
}

} // namespace

TEST_CASE("derived-lexeme filter removes redo but keeps sing/ring") {
    auto paradigms = collapse_all({
        make_paradigm("do", {{"V;PST", "did"}, {"V;V.PTCP;PST", "done"}}),
        make_paradigm("redo", {{"V;PST", "redid"}, {"V;V.PTCP;PST", "redone"}}),
        make_paradigm("sing", {{"V;PST", "sang"}, {"V;V.PTCP;PST", "sung"}}),
        make_paradigm("ring", {{"V;PST", "rang"}, {"V;V.PTCP;PST", "rung"}}),
    });
    auto removed = find_derived(paradigms);
    REQUIRE(removed.size() == 1);
    CHECK(removed[0].lexeme == "redo");
    CHECK(removed[0].base_lexeme == "do");
    CHECK(removed[0].affix == "re");
    CHECK(removed[0].is_prefix);
    auto kept = filter_derived(paradigms);
    std::vector<std::string> names;
    for (const auto& p : kept) names.push_back(p.lexeme);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"do", "ring", "sing"});
}

TEST_CASE("derivation must be uniform across every cell") {
    // "undo" prefixed in the past but not the participle: not derived.
    auto paradigms = collapse_all({
        make_paradigm("do", {{"V;PST", "did"}, {"V;V.PTCP;PST", "done"}}),
        make_paradigm("undo", {{"V;PST", "undid"}, {"V;V.PTCP;PST", "misdone"}}),
    });
    CHECK(find_derived(paradigms).empty());
}

TEST_CASE("derivation requires identical merged-slot sets") {
    auto paradigms = collapse_all({
        make_paradigm("do", {{"V;PST", "did"}}),
        make_paradigm("redo", {{"V;PST", "redid"}, {"V;V.PTCP;PST", "redone"}}),
    });
    CHECK(find_derived(paradigms).empty());
}

TEST_CASE("suffix-derived lexemes are caught too") {
    auto paradigms = collapse_all({
        make_paradigm("ab", {{"V;PST", "abx"}}),
        make_paradigm("abzz", {{"V;PST", "abxzz"}}),
    });
    auto removed = find_derived(paradigms);
    REQUIRE(removed.size() == 1);
    CHECK(removed[0].lexeme == "abzz");
    CHECK(removed[0].affix == "zz");
    CHECK_FALSE(removed[0].is_prefix);
}

TEST_CASE("derivation chains are fully removed") {
    auto paradigms = collapse_all({
        make_paradigm("do", {{"V;PST", "did"}}),
        make_paradigm("redo", {{"V;PST", "redid"}}),
        make_paradigm("reredo", {{"V;PST", "reredid"}}),
    });
    auto kept = filter_derived(paradigms);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].lexeme == "do");
}

TEST_CASE("derived audit serializes one row per removal") {
    auto paradigms = collapse_all({
        make_paradigm("do", {{"V;PST", "did"}}),
        make_paradigm("redo", {{"V;PST", "redid"}}),
    });
    std::string tsv = derived_audit_tsv(find_derived(paradigms));
    CHECK(tsv == "redo\tdo\tre\tprefix\n");
}

TEST_CASE("lexeme counts sum distinct surface forms once") {
    CollapsedParadigm c = collapse(make_paradigm("go", {
        {"V;PST", "went"}, {"V;PRS;3;SG", "goes"}, {"V;NFIN", "go"},   // go merges with lemma
    }));
    FrequencyTable freq;
    freq.counts = {{"go", 100}, {"went", 40}, {"goes", 7}};
    CHECK(lexeme_count(c, freq) == 147);
    freq.counts.erase("goes");
    CHECK(lexeme_count(c, freq) == 140);
}
