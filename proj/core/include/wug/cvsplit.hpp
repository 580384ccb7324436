#ifndef WUG_CVSPLIT_HPP
#define WUG_CVSPLIT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wug {

// Lexeme-based split assignment: every lexeme lives wholly inside one split,
// so a fold's test set approximates training without those lexemes at all.
struct SplitAssignment {
    int k = 10;
    std::uint64_t seed = 0;
    std::map<std::string, int> assignment;

    std::vector<std::string> lexemes_in(int split) const;
};

struct Fold {
    int test_split;
    int dev_split;
    std::vector<int> train_splits;
};

// Seeded shuffle (splitmix64 + Fisher-Yates) then round-robin dealing, so
// split sizes differ by at most one. Deterministic given (lexemes, k, seed).
// Requires k >= 3 and |lexemes| >= k.
SplitAssignment assign_splits(const std::vector<std::string>& lexemes, int k, std::uint64_t seed);

// Fold i tests on split i and tunes on split (i+1) mod k; a fixed rotation
// keeps runs reproducible.
std::vector<Fold> folds(const SplitAssignment& sa);

// Manifest: one `# {json metadata}` header line, then `lexeme<TAB>split` rows.
std::string split_manifest(const SplitAssignment& sa);
SplitAssignment parse_split_manifest(const std::string& text);

} // namespace wug

#endif
