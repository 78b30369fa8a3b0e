#include "sgppsl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sgppsl/errors.hpp"

namespace sgppsl {

int LabelSet::add(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(labels_.size());
    labels_.push_back(label);
    index_.emplace(label, id);
    return id;
}

int LabelSet::id(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

const std::string& LabelSet::name(int id) const {
    return labels_.at(static_cast<std::size_t>(id));
}

std::size_t Corpus::num_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

bool Corpus::all_gold() const {
    for (const auto& s : sequences)
        if (!s.has_gold()) return false;
    return !sequences.empty();
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> cols;
    std::istringstream in(line);
    std::string c;
    while (in >> c) cols.push_back(c);
    return cols;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

Corpus parse_conll(const std::string& text, int token_col, int label_col) {
    Corpus corpus;
    PartialSequence seq;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto flush = [&] {
        if (!seq.tokens.empty()) {
            corpus.sequences.push_back(std::move(seq));
            seq = PartialSequence{};
        }
    };
    const int need = std::max(token_col, label_col) + 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            flush();
            continue;
        }
        auto cols = split_ws(line);
        if (static_cast<int>(cols.size()) < need)
            throw ParseError("line " + std::to_string(line_no) + ": expected at least " +
                             std::to_string(need) + " columns, got " +
                             std::to_string(cols.size()));
        int y = corpus.label_set.add(cols[static_cast<std::size_t>(label_col)]);
        seq.tokens.push_back(Token{cols[static_cast<std::size_t>(token_col)], {}});
        seq.candidates.push_back({y});
        seq.gold.push_back(y);
    }
    flush();
    if (corpus.sequences.empty()) throw ParseError("empty corpus");
    return corpus;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string lower(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void hash_into(Eigen::VectorXd& v, const std::string& feature) {
    std::uint64_t h = fnv1a(feature);
    Eigen::Index idx = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(v.size()));
    double sign = ((h >> 63) & 1u) ? -1.0 : 1.0;
    v[idx] += sign;
}

}  // namespace

Corpus featurize(Corpus corpus, const FeaturizerConfig& cfg) {
    if (cfg.dim < 8) throw ConfigError("featurizer dimension must be >= 8");
    for (auto& seq : corpus.sequences) {
        const int m = static_cast<int>(seq.size());
        for (int t = 0; t < m; ++t) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.dim);
            const std::string& surf = seq.tokens[static_cast<std::size_t>(t)].surface;
            const std::string lc = lower(surf);
            hash_into(v, "lower=" + lc);
            for (int off = -cfg.window; off <= cfg.window; ++off) {
                if (off == 0) continue;
                int j = t + off;
                std::string ctx = (j < 0) ? "<s>" : (j >= m) ? "</s>"
                    : lower(seq.tokens[static_cast<std::size_t>(j)].surface);
                hash_into(v, "ctx[" + std::to_string(off) + "]=" + ctx);
            }
            hash_into(v, "pre3=" + lc.substr(0, 3));
            hash_into(v, "suf3=" + (lc.size() >= 3 ? lc.substr(lc.size() - 3) : lc));
            if (!surf.empty() && std::isupper(static_cast<unsigned char>(surf[0])))
                hash_into(v, "cap");
            if (std::any_of(surf.begin(), surf.end(),
                            [](unsigned char c) { return std::isdigit(c); }))
                hash_into(v, "digit");
            double norm = v.norm();
            if (norm > 0.0) v /= norm;
            seq.tokens[static_cast<std::size_t>(t)].features = std::move(v);
        }
    }
    corpus.feature_dim = cfg.dim;
    corpus.feat_cfg = cfg;
    return corpus;
}

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// Uniform pick of the indices of sequences that stay exactly annotated.
std::vector<char> pick_exact(std::size_t n, double p, std::mt19937_64& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto keep = static_cast<std::size_t>(std::lround(p * static_cast<double>(n)));
    std::vector<char> exact(n, 0);
    for (std::size_t i = 0; i < keep && i < n; ++i) exact[order[i]] = 1;
    return exact;
}

void check_synth_pre(const Corpus& corpus, double p) {
    if (!corpus.all_gold()) throw DataError("synthesis requires gold labels on every sequence");
    if (p < 0.0 || p > 1.0) throw ConfigError("p must lie in [0, 1]");
}

}  // namespace

Corpus synthesize_partial_cl(const Corpus& corpus, int cl, double p, std::uint64_t seed) {
    check_synth_pre(corpus, p);
    const int num_labels = corpus.label_set.size();
    if (cl < 1 || cl >= num_labels)
        throw ConfigError("cl must satisfy 1 <= cl < |Y| (" + std::to_string(num_labels) + ")");
    auto rng = seeded_rng(seed, 0x5359'4e54'485f'434cull);
    Corpus out = corpus;
    auto exact = pick_exact(out.sequences.size(), p, rng);
    for (std::size_t i = 0; i < out.sequences.size(); ++i) {
        auto& seq = out.sequences[i];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            int g = seq.gold[t];
            if (exact[i]) {
                seq.candidates[t] = {g};
                continue;
            }
            std::vector<int> negatives;
            negatives.reserve(static_cast<std::size_t>(num_labels - 1));
            for (int y = 0; y < num_labels; ++y)
                if (y != g) negatives.push_back(y);
            // partial Fisher-Yates: first cl entries are a uniform draw
            // without replacement
            for (int k = 0; k < cl; ++k) {
                std::uniform_int_distribution<int> d(k, static_cast<int>(negatives.size()) - 1);
                std::swap(negatives[static_cast<std::size_t>(k)],
                          negatives[static_cast<std::size_t>(d(rng))]);
            }
            std::vector<int> cand(negatives.begin(), negatives.begin() + cl);
            cand.push_back(g);
            std::sort(cand.begin(), cand.end());
            seq.candidates[t] = std::move(cand);
        }
    }
    return out;
}

Corpus synthesize_partial_flip(const Corpus& corpus, double r, double p, std::uint64_t seed) {
    check_synth_pre(corpus, p);
    if (r < 0.0 || r > 1.0) throw ConfigError("r must lie in [0, 1]");
    const int num_labels = corpus.label_set.size();
    auto rng = seeded_rng(seed, 0x5359'4e54'485f'464cull);
    Corpus out = corpus;
    auto exact = pick_exact(out.sequences.size(), p, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < out.sequences.size(); ++i) {
        auto& seq = out.sequences[i];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            int g = seq.gold[t];
            if (exact[i]) {
                seq.candidates[t] = {g};
                continue;
            }
            std::vector<int> cand;
            for (int y = 0; y < num_labels; ++y)
                if (y == g || unit(rng) < r) cand.push_back(y);
            seq.candidates[t] = std::move(cand);
        }
    }
    return out;
}

std::string write_partial(const Corpus& corpus) {
    std::ostringstream out;
    for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
        const auto& seq = corpus.sequences[i];
        if (i > 0) out << '\n';
        for (std::size_t t = 0; t < seq.size(); ++t) {
            out << seq.tokens[t].surface << '\t';
            for (std::size_t j = 0; j < seq.candidates[t].size(); ++j) {
                int y = seq.candidates[t][j];
                if (j > 0) out << '|';
                if (seq.has_gold() && seq.gold[t] == y) out << '*';
                out << corpus.label_set.name(y);
            }
            out << '\n';
        }
    }
    return out.str();
}

Corpus parse_partial(const std::string& text) {
    Corpus corpus;
    PartialSequence seq;
    bool seq_has_gold = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto flush = [&] {
        if (seq.tokens.empty()) return;
        if (seq_has_gold) {
            for (int g : seq.gold)
                if (g < 0)
                    throw ParseError("sequence ending before line " + std::to_string(line_no) +
                                     ": gold marker missing at some positions");
        } else {
            seq.gold.clear();
        }
        corpus.sequences.push_back(std::move(seq));
        seq = PartialSequence{};
        seq_has_gold = false;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            flush();
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": missing tab separator");
        std::string surface = line.substr(0, tab);
        std::string rest = line.substr(tab + 1);
        if (!rest.empty() && rest.back() == '\r') rest.pop_back();
        std::vector<int> cand;
        int gold = -1;
        std::size_t start = 0;
        while (start <= rest.size()) {
            auto bar = rest.find('|', start);
            std::string item = rest.substr(start, bar == std::string::npos ? bar : bar - start);
            if (item.empty())
                throw ParseError("line " + std::to_string(line_no) + ": empty label");
            bool is_gold = item[0] == '*';
            if (is_gold) item = item.substr(1);
            int y = corpus.label_set.add(item);
            if (is_gold) gold = y;
            cand.push_back(y);
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        if (gold >= 0) seq_has_gold = true;
        seq.tokens.push_back(Token{std::move(surface), {}});
        seq.candidates.push_back(std::move(cand));
        seq.gold.push_back(gold);
    }
    flush();
    if (corpus.sequences.empty()) throw ParseError("empty corpus");
    return corpus;
}

}  // namespace sgppsl
