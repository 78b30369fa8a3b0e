#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sgppsl/corpus.hpp"
#include "sgppsl/piecewise.hpp"

namespace test_helpers {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string data_path(const std::string& name) {
    return std::string(SGPPSL_TEST_DATA) + "/" + name;
}

// Tiny gold corpus over `num_labels` labels: label names L0..Lk, one
// surface per (sentence, position) drawn from a small vocabulary.
inline sgppsl::Corpus tiny_corpus(int num_sequences, int length, int num_labels,
                                  std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::ostringstream text;
    std::vector<std::string> vocab = {"alpha", "bravo", "carol", "delta", "echo",
                                      "fox",   "golf",  "hotel", "india", "jazz"};
    for (int i = 0; i < num_sequences; ++i) {
        for (int t = 0; t < length; ++t) {
            std::uniform_int_distribution<int> dv(0, static_cast<int>(vocab.size()) - 1);
            std::uniform_int_distribution<int> dl(0, num_labels - 1);
            text << vocab[static_cast<std::size_t>(dv(rng))] << " L" << dl(rng) << "\n";
        }
        text << "\n";
    }
    sgppsl::Corpus corpus = sgppsl::parse_conll(text.str());
    // make sure every label id exists even if the draw missed one
    for (int y = 0; y < num_labels; ++y) corpus.label_set.add("L" + std::to_string(y));
    return corpus;
}

// Two well-separated feature clusters: cluster A surfaces carry gold L0,
// cluster B surfaces carry gold L1. A 1-NN rule on surfaces is perfect.
inline sgppsl::Corpus separable_corpus(int num_sequences = 6, int length = 4) {
    std::ostringstream text;
    std::vector<std::string> va = {"aaaa", "bbbb", "cccc", "dddd"};
    std::vector<std::string> vb = {"zzzz", "yyyy", "xxxx", "wwww"};
    for (int i = 0; i < num_sequences; ++i) {
        bool cluster_a = i % 2 == 0;
        const auto& vocab = cluster_a ? va : vb;
        for (int t = 0; t < length; ++t)
            text << vocab[static_cast<std::size_t>((i / 2 + t) % vocab.size())] << " "
                 << (cluster_a ? "A" : "B") << "\n";
        text << "\n";
    }
    auto corpus = sgppsl::parse_conll(text.str());
    corpus.label_set.add("A");
    corpus.label_set.add("B");
    return corpus;
}

}  // namespace test_helpers
