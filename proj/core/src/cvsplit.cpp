#include "wug/cvsplit.hpp"

#include "wug/errors.hpp"
#include "wug/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace wug {

std::vector<std::string> SplitAssignment::lexemes_in(int split) const {
    std::vector<std::string> out;
    for (const auto& [lex, s] : assignment)
        if (s == split) out.push_back(lex);
    return out;
}

SplitAssignment assign_splits(const std::vector<std::string>& lexemes, int k, std::uint64_t seed) {
    if (k < 3) throw ConfigError("need k >= 3 splits (train/dev/test)");
    if (lexemes.size() < static_cast<std::size_t>(k))
        throw ConfigError("need at least k=" + std::to_string(k) + " lexemes, got " + std::to_string(lexemes.size()));

    // Canonical order first, so the assignment depends only on the lexeme
    // set, not on the order the caller happened to list it in.
    std::vector<std::string> shuffled = lexemes;
    std::sort(shuffled.begin(), shuffled.end());
    auto dup = std::adjacent_find(shuffled.begin(), shuffled.end());
    if (dup != shuffled.end()) throw ConfigError("duplicate lexeme in split request: " + *dup);
    SplitMix64 rng(seed);
    rng.shuffle(shuffled);

    SplitAssignment sa;
    sa.k = k;
    sa.seed = seed;
    for (std::size_t i = 0; i < shuffled.size(); ++i) sa.assignment[shuffled[i]] = static_cast<int>(i % k);
    return sa;
}

std::vector<Fold> folds(const SplitAssignment& sa) {
    std::vector<Fold> out;
    out.reserve(sa.k);
    for (int i = 0; i < sa.k; ++i) {
        Fold f;
        f.test_split = i;
        f.dev_split = (i + 1) % sa.k;
        for (int s = 0; s < sa.k; ++s)
            if (s != f.test_split && s != f.dev_split) f.train_splits.push_back(s);
        out.push_back(std::move(f));
    }
    return out;
}

std::string split_manifest(const SplitAssignment& sa) {
    nlohmann::ordered_json meta;
    meta["k"] = sa.k;
    meta["seed"] = sa.seed;
    meta["prng"] = SplitMix64::id();
    std::string out = "# " + meta.dump() + "\n";
    for (const auto& [lex, split] : sa.assignment) out += lex + "\t" + std::to_string(split) + "\n";
    return out;
}

SplitAssignment parse_split_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SplitAssignment sa;
    std::size_t lineno = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto meta = nlohmann::json::parse(line.substr(1));
            sa.k = meta.at("k").get<int>();
            sa.seed = meta.at("seed").get<std::uint64_t>();
            have_meta = true;
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected `lexeme<TAB>split`", lineno);
        sa.assignment[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    }
    if (!have_meta) throw ParseError("missing metadata header line");
    return sa;
}

} // namespace wug
