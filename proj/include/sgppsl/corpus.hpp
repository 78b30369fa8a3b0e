#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sgppsl {

// Dense, stable mapping between label strings and integer ids.
class LabelSet {
  public:
    int add(const std::string& label);            // returns id (existing or new)
    int id(const std::string& label) const;       // -1 if unknown
    const std::string& name(int id) const;
    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }

  private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct Token {
    std::string surface;
    Eigen::VectorXd features;  // empty until featurize()
};

// A token sequence with per-position candidate label sets. `gold` is kept
// for evaluation only and is never read by training.
struct PartialSequence {
    std::vector<Token> tokens;
    std::vector<std::vector<int>> candidates;  // sorted ascending, non-empty
    std::vector<int> gold;                     // empty when gold is absent

    std::size_t size() const { return tokens.size(); }
    bool has_gold() const { return !gold.empty(); }
};

struct FeaturizerConfig {
    int dim = 512;   // hashed feature dimension D
    int window = 1;  // context window w
};

struct Corpus {
    std::vector<PartialSequence> sequences;
    LabelSet label_set;
    int feature_dim = 0;        // 0 until featurized
    FeaturizerConfig feat_cfg;  // valid once featurized

    std::size_t num_tokens() const;
    bool all_gold() const;
};

// Parse CoNLL column text: blank-line separated sentences, whitespace
// separated columns. Every position becomes a singleton candidate set
// equal to its gold label.
Corpus parse_conll(const std::string& text, int token_col = 0, int label_col = 1);

// Hashed lexical-window featurization; every feature vector is
// L2-normalized. Throws ConfigError when cfg.dim < 8.
Corpus featurize(Corpus corpus, const FeaturizerConfig& cfg);

// Fixed-size candidate sampling: round(p*N) sequences stay exact; every
// position of the rest gets `cl` distinct negative labels added.
Corpus synthesize_partial_cl(const Corpus& corpus, int cl, double p, std::uint64_t seed);

// Flip sampling: each negative label independently joins the candidate
// set with probability r on non-exact sequences.
Corpus synthesize_partial_flip(const Corpus& corpus, double r, double p, std::uint64_t seed);

// Partial-annotation exchange format: `surface<TAB>label1|label2|...`,
// gold label carries a leading '*', blank line separates sequences.
std::string write_partial(const Corpus& corpus);
Corpus parse_partial(const std::string& text);

}  // namespace sgppsl
