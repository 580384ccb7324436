#include "wug/corpus.hpp"

#include "wug/errors.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

namespace wug {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

} // namespace

std::string SlotTag::str() const {
    std::string out;
    for (const auto& f : features) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

SlotTag SlotTag::parse(const std::string& joined) {
    SlotTag tag;
    std::size_t start = 0;
    for (;;) {
        std::size_t semi = joined.find(';', start);
        std::string f = trim(joined.substr(start, semi == std::string::npos ? semi : semi - start));
        if (!f.empty()) tag.features.insert(f);
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    return tag;
}

FeatureInventory FeatureInventory::build(const std::set<std::string>& values) {
    FeatureInventory inv;
    inv.features.assign(values.begin(), values.end());
    std::sort(inv.features.begin(), inv.features.end());
    for (std::size_t i = 0; i < inv.features.size(); ++i) inv.index[inv.features[i]] = static_cast<int>(i);
    return inv;
}

int FeatureInventory::lookup(const std::string& f) const {
    auto it = index.find(f);
    return it == index.end() ? -1 : it->second;
}

std::vector<Paradigm> parse_unimorph(std::istream& in) {
    std::map<std::string, Paradigm> by_lemma;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()), lineno);
        std::string lemma = trim(fields[0]);
        std::string form = trim(fields[1]);
        SlotTag slot = SlotTag::parse(fields[2]);
        if (lemma.empty()) throw ParseError("empty lemma", lineno);
        if (form.empty()) throw ParseError("empty form", lineno);
        if (slot.features.empty()) throw ParseError("empty feature tag", lineno);
        if (slot.is_lemma()) throw ParseError("tag '" + kLemmaFeature + "' is reserved", lineno);

        auto [it, fresh] = by_lemma.try_emplace(lemma);
        Paradigm& p = it->second;
        if (fresh) {
            p.lexeme = lemma;
            p.lemma_slot = SlotTag::lemma_tag();
            p.cells[p.lemma_slot] = lemma;
        }
        auto [cell, inserted] = p.cells.try_emplace(slot, form);
        if (!inserted && cell->second != form)
            throw ParseError("conflicting forms for (" + lemma + ", " + slot.str() + "): '" + cell->second +
                                 "' vs '" + form + "'",
                             lineno);
    }
    std::vector<Paradigm> out;
    out.reserve(by_lemma.size());
    for (auto& [lemma, p] : by_lemma) out.push_back(std::move(p));
    return out;
}

std::vector<Paradigm> parse_unimorph(const std::string& text) {
    std::istringstream in(text);
    return parse_unimorph(in);
}

std::string to_unimorph(const std::vector<Paradigm>& paradigms) {
    std::string out;
    for (const auto& p : paradigms) {
        for (const auto& [slot, form] : p.cells) {
            if (slot == p.lemma_slot) continue;
            out += p.lexeme;
            out += '\t';
            out += form;
            out += '\t';
            out += slot.str();
            out += '\n';
        }
    }
    return out;
}

FrequencyTable parse_frequency(std::istream& in) {
    FrequencyTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw ParseError("expected 2 tab-separated fields, got " + std::to_string(fields.size()), lineno);
        std::string form = trim(fields[0]);
        std::string count_str = trim(fields[1]);
        if (form.empty()) throw ParseError("empty form", lineno);
        if (count_str.empty() || count_str.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("count '" + count_str + "' is not a non-negative integer", lineno);
        std::uint64_t count = 0;
        try {
            count = std::stoull(count_str);
        } catch (const std::exception&) {
            throw ParseError("count '" + count_str + "' out of range", lineno);
        }
        table.counts[form] += count;
    }
    return table;
}

FrequencyTable parse_frequency(const std::string& text) {
    std::istringstream in(text);
    return parse_frequency(in);
}

} // namespace wug
