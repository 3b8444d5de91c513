#pragma once

#include <string>

namespace vlct::eval {

/// ROUGE-L F1 on lowercased, punctuation-stripped whitespace tokens:
/// 2*LCS / (|cand| + |ref|); 0 when both are empty or the LCS is empty.
double rouge_l_f1(const std::string& candidate, const std::string& reference);

/// Sentence BLEU, orders 1-4, on the 0-100 scale: clipped modified n-gram
/// precision, brevity penalty min(1, e^{1-|ref|/|cand|}), and exponential
/// smoothing where the k-th zero-precision order (counted in sequence)
/// contributes 1/2^k. Empty candidate scores 0.
double bleu_sentence(const std::string& candidate, const std::string& reference);

}  // namespace vlct::eval
