#include "sgppsl/piecewise.hpp"

#include "sgppsl/errors.hpp"

namespace sgppsl {

std::size_t FactorSet::candidate_count() const {
    std::size_t n = 0;
    for (const auto& p : unary_pieces) n += p.candidates.size();
    for (const auto& p : transition_pieces) n += p.pair_count();
    return n;
}

FactorSet decompose(const Corpus& corpus) {
    if (corpus.feature_dim == 0) throw DataError("decompose requires a featurized corpus");
    FactorSet fs;
    fs.num_labels = corpus.label_set.size();
    fs.block_size = static_cast<int>(corpus.num_tokens());
    fs.features.resize(fs.block_size, corpus.feature_dim);
    fs.row_index.resize(corpus.sequences.size());
    int row = 0;
    for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
        const auto& seq = corpus.sequences[i];
        const int m = static_cast<int>(seq.size());
        if (m == 0) throw DataError("sequence " + std::to_string(i) + " is empty");
        fs.row_index[i].resize(static_cast<std::size_t>(m));
        for (int t = 0; t < m; ++t) {
            fs.row_index[i][static_cast<std::size_t>(t)] = row;
            fs.features.row(row) = seq.tokens[static_cast<std::size_t>(t)].features.transpose();
            fs.unary_pieces.push_back(UnaryPiece{static_cast<int>(i), t, row,
                                                 seq.candidates[static_cast<std::size_t>(t)]});
            ++row;
            if (t >= 1) {
                fs.transition_pieces.push_back(
                    TransitionPiece{static_cast<int>(i), t,
                                    seq.candidates[static_cast<std::size_t>(t - 1)],
                                    seq.candidates[static_cast<std::size_t>(t)]});
            }
        }
    }
    return fs;
}

std::vector<std::pair<int, int>> unary_block_rows(const FactorSet& fs, int label) {
    if (label < 0 || label >= fs.num_labels) throw DataError("label id out of range");
    std::vector<std::pair<int, int>> rows;
    rows.reserve(static_cast<std::size_t>(fs.block_size));
    for (const auto& p : fs.unary_pieces) rows.emplace_back(p.seq_id, p.pos);
    return rows;
}

}  // namespace sgppsl
