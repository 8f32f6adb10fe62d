#ifndef CASEFOLD_SYNTHETIC_H_
#define CASEFOLD_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "casefold/corpus.h"

namespace casefold::synthetic {

// Lowercase word sequences whose only capitals are the first character of
// each sentence and every occurrence of "london". Labels are "_".
std::vector<Sentence> truecase_corpus(std::size_t n, std::uint64_t seed);

// Template-generated POS sentences. Many proper nouns share their lowercase
// form with a common word of another class (Bill/bill, May/may), and the
// surrounding context always determines the tag.
std::vector<Sentence> pos_corpus(std::size_t n, std::uint64_t seed);

// BIO relabeling of a POS corpus: proper nouns become PER or LOC entities.
std::vector<Sentence> ner_from_pos(std::span<const Sentence> pos);

}  // namespace casefold::synthetic

#endif  // CASEFOLD_SYNTHETIC_H_
