#include "wug/corpus.hpp"
#include "wug/errors.hpp"

#include <doctest.h>

using namespace wug;

TEST_CASE("slot tags render canonically and parse back") {
    SlotTag tag{{"V", "PST", "3", "SG"}};
    CHECK(tag.str() == "3;PST;SG;V");   // set order is lexicographic
    CHECK(SlotTag::parse("V;PST;3;SG") == tag);
    CHECK(SlotTag::parse(tag.str()) == tag);
    CHECK(SlotTag::lemma_tag().is_lemma());
    CHECK_FALSE(tag.is_lemma());
}

TEST_CASE("unimorph parsing groups lines into paradigms with a lemma cell") {
    std::string text = "go\twent\tV;PST\n"
                       "go\tgoes\tV;3;SG;PRS\n"
                       "walk\twalked\tV;PST\n";
    auto paradigms = parse_unimorph(text);
    REQUIRE(paradigms.size() == 2);
    CHECK(paradigms[0].lexeme == "go");
    CHECK(paradigms[0].cells.size() == 3);   // two inflected + lemma
    CHECK(paradigms[0].lemma_form() == "go");
    CHECK(paradigms[0].cells.at(SlotTag::parse("V;PST")) == "went");
    CHECK(paradigms[1].lexeme == "walk");
}

TEST_CASE("unimorph parsing tolerates blank lines and dedupes repeats") {
    std::string text = "go\twent\tV;PST\n\n\ngo\twent\tV;PST\n";
    auto paradigms = parse_unimorph(text);
    REQUIRE(paradigms.size() == 1);
    CHECK(paradigms[0].cells.size() == 2);
}

TEST_CASE("unimorph parsing rejects malformed input") {
    CHECK_THROWS_AS(parse_unimorph("go\twent\n"), ParseError);                 // missing field
    CHECK_THROWS_AS(parse_unimorph("go\twent\tV;PST\ngo\tgone\tV;PST\n"), ParseError);  // conflict
    CHECK_THROWS_AS(parse_unimorph("go\twent\tLEMMA\n"), ParseError);          // reserved tag
    CHECK_THROWS_AS(parse_unimorph("go\t\tV;PST\n"), ParseError);              // empty form
}

TEST_CASE("parse errors carry line numbers") {
    try {
        parse_unimorph("a\tb\tV\nbroken line\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("unimorph round-trips through serialization") {
    std::string text = "go\tgoes\tPRS;V\ngo\twent\tPST;V\nwalk\twalked\tPST;V\n";
    auto paradigms = parse_unimorph(text);
    CHECK(to_unimorph(paradigms) == text);
    auto again = parse_unimorph(to_unimorph(paradigms));
    CHECK(to_unimorph(again) == text);
}

TEST_CASE("frequency parsing sums repeated forms and rejects bad counts") {
    FrequencyTable t = parse_frequency("went\t10\nwent\t5\ngoes\t2\n");
    CHECK(t.count("went") == 15);
    CHECK(t.count("goes") == 2);
    CHECK(t.count("absent") == 0);
    CHECK_THROWS_AS(parse_frequency("a\t-3\n"), ParseError);
    CHECK_THROWS_AS(parse_frequency("a\t2.5\n"), ParseError);
    CHECK_THROWS_AS(parse_frequency("a\n"), ParseError);
}

TEST_CASE("feature inventory is sorted and supports lookup") {
    auto inv = FeatureInventory::build({"V", "PST", "3", "SG"});
    REQUIRE(inv.size() == 4);
    CHECK(inv.features.front() == "3");
    CHECK(inv.lookup("PST") >= 0);
    CHECK(inv.lookup("missing") == -1);
}
