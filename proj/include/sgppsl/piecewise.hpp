#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgppsl/corpus.hpp"

namespace sgppsl {

// One normalized piece per token occurrence.
struct UnaryPiece {
    int seq_id = 0;
    int pos = 0;
    int row = 0;  // row inside every per-label unary block
    std::vector<int> candidates;
};

// One normalized piece per adjacent token pair; its candidate pairs are
// the cross product prev_candidates x next_candidates.
struct TransitionPiece {
    int seq_id = 0;
    int pos = 0;  // position of the second token, pos >= 1
    std::vector<int> prev_candidates;
    std::vector<int> next_candidates;

    std::size_t pair_count() const { return prev_candidates.size() * next_candidates.size(); }
};

// Piecewise decomposition of a featurized corpus: unary and transition
// pieces plus the latent-variable row layout. One unary latent variable
// per (token occurrence, label): each per-label block has `block_size`
// rows ordered by (seq_id, pos). The transition block has |Y|^2 rows
// indexed prev-major.
struct FactorSet {
    std::vector<UnaryPiece> unary_pieces;
    std::vector<TransitionPiece> transition_pieces;
    int num_labels = 0;
    int block_size = 0;
    Eigen::MatrixXd features;                 // block_size x D
    std::vector<std::vector<int>> row_index;  // seq -> pos -> row

    int transition_row(int prev, int next) const { return prev * num_labels + next; }
    int transition_dim() const { return num_labels * num_labels; }
    // candidate terms summed over all pieces: sum l*m + l^2*(m-1)
    std::size_t candidate_count() const;
};

FactorSet decompose(const Corpus& corpus);

// Ordered (seq_id, pos) rows of a label's unary block.
std::vector<std::pair<int, int>> unary_block_rows(const FactorSet& fs, int label);

}  // namespace sgppsl
