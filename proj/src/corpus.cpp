#include "ubt/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace ubt::corpus {

const char* const kSpecialWords[kNumSpecials] = {"<PAD>", "<UNK>", "<BOS>", "<EOS>"};

Vocab::Vocab() {
    for (std::int32_t i = 0; i < kNumSpecials; ++i) add(kSpecialWords[i], 0);
}

const std::string& Vocab::word(std::int32_t id) const {
    if (id < 0 || id >= size())
        throw DataFormatError("vocab id out of range: " + std::to_string(id));
    return words_[static_cast<std::size_t>(id)];
}

std::int32_t Vocab::id_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

void Vocab::add(const std::string& word, std::int64_t count) {
    auto it = index_.find(word);
    if (it != index_.end()) {
        counts_[static_cast<std::size_t>(it->second)] += count;
        return;
    }
    index_.emplace(word, size());
    words_.push_back(word);
    counts_.push_back(count);
}

std::string Vocab::serialize() const {
    std::ostringstream out;
    out << size() << "\n";
    for (std::int32_t i = 0; i < size(); ++i)
        out << words_[static_cast<std::size_t>(i)] << " " << counts_[static_cast<std::size_t>(i)]
            << "\n";
    return out.str();
}

Vocab Vocab::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw DataFormatError("vocab file: missing header");
    long expected = 0;
    try {
        expected = std::stol(trim(line));
    } catch (const std::exception&) {
        throw DataFormatError("vocab file: bad header line: " + line);
    }
    Vocab v;
    std::int32_t id = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string word;
        std::int64_t count = 0;
        if (!(ls >> word >> count))
            throw DataFormatError("vocab file: bad entry at id " + std::to_string(id));
        if (id < kNumSpecials) {
            if (word != kSpecialWords[id])
                throw DataFormatError("vocab file: id " + std::to_string(id) + " must be " +
                                      kSpecialWords[id]);
            if (count > 0) v.add(word, count);
        } else {
            v.add(word, count);
        }
        ++id;
    }
    if (id != expected)
        throw DataFormatError("vocab file: header declares " + std::to_string(expected) +
                              " entries, found " + std::to_string(id));
    return v;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& blocks, std::int64_t min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    std::unordered_map<std::string, std::int64_t> counts;
    std::int64_t special_counts[kNumSpecials] = {0, 0, 0, 0};
    for (const auto& block : blocks) {
        for (const std::string& w : block) {
            bool special = false;
            for (std::int32_t i = 0; i < kNumSpecials; ++i) {
                if (w == kSpecialWords[i]) {
                    ++special_counts[i];
                    special = true;
                    break;
                }
            }
            if (!special) ++counts[w];
        }
    }
    std::vector<std::pair<std::string, std::int64_t>> entries(counts.begin(), counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocab v;
    for (std::int32_t i = 0; i < kNumSpecials; ++i)
        if (special_counts[i] > 0) v.add(kSpecialWords[i], special_counts[i]);
    for (const auto& [word, count] : entries)
        if (count >= min_count) v.add(word, count);
    return v;
}

std::vector<std::int32_t> encode_block(const std::vector<std::string>& block, const Vocab& vocab) {
    std::vector<std::int32_t> ids;
    ids.reserve(block.size());
    for (const std::string& w : block) ids.push_back(vocab.id_of(w));
    return ids;
}

std::vector<std::string> decode_block(const std::vector<std::int32_t>& ids, const Vocab& vocab) {
    std::vector<std::string> words;
    words.reserve(ids.size());
    for (std::int32_t id : ids) words.push_back(vocab.word(id));
    return words;
}

OptLevel opt_level_from_string(const std::string& s) {
    const std::string u = to_upper(trim(s));
    if (u == "O0") return OptLevel::O0;
    if (u == "O1") return OptLevel::O1;
    if (u == "O2") return OptLevel::O2;
    if (u == "O3") return OptLevel::O3;
    throw ConfigError("unknown optimization level: " + s);
}

std::string opt_level_name(OptLevel o) {
    switch (o) {
        case OptLevel::O0: return "O0";
        case OptLevel::O1: return "O1";
        case OptLevel::O2: return "O2";
        default: return "O3";
    }
}

CorpusStats corpus_stats(const std::vector<asmtext::FunctionRecord>& functions) {
    CorpusStats s;
    s.function_count = static_cast<std::int64_t>(functions.size());
    std::unordered_set<std::string> unique;
    for (const auto& fn : functions) {
        for (const auto& block : fn.blocks) {
            for (const auto& ins : block.instructions) {
                unique.insert(ins.word());
                ++s.total_instruction_count;
            }
        }
    }
    s.unique_instruction_count = static_cast<std::int64_t>(unique.size());
    return s;
}

CorpusStats block_stats(const std::vector<std::vector<std::string>>& blocks,
                        std::int64_t function_count) {
    CorpusStats s;
    s.function_count = function_count;
    std::unordered_set<std::string> unique;
    for (const auto& block : blocks) {
        for (const auto& w : block) {
            unique.insert(w);
            ++s.total_instruction_count;
        }
    }
    s.unique_instruction_count = static_cast<std::int64_t>(unique.size());
    return s;
}

std::string format_stats_table(const std::vector<StatsRow>& rows) {
    std::ostringstream out;
    out << "Opt. Level  ISA   # of Functions  # of Unique Instructions  Total # of Instructions\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-10s  %-4s  %14lld  %24lld  %23lld\n",
                      r.opt_level.c_str(), r.arch.c_str(),
                      static_cast<long long>(r.stats.function_count),
                      static_cast<long long>(r.stats.unique_instruction_count),
                      static_cast<long long>(r.stats.total_instruction_count));
        out << buf;
    }
    return out.str();
}

void write_corpus_file(const std::string& path,
                       const std::vector<std::vector<std::string>>& blocks,
                       const Provenance& prov) {
    std::ostringstream out;
    out << prov.line();
    for (const auto& block : blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (i > 0) out << ' ';
            out << block[i];
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<std::vector<std::string>> read_corpus_file(const std::string& path) {
    std::vector<std::vector<std::string>> blocks;
    for (const std::string& line : content_lines(read_text_file(path))) {
        if (trim(line).empty()) continue;
        blocks.push_back(split_ws(line));
    }
    return blocks;
}

void write_vocab_file(const std::string& path, const Vocab& vocab, const Provenance& prov) {
    write_text_file(path, prov.line() + vocab.serialize());
}

Vocab read_vocab_file(const std::string& path) {
    const auto lines = content_lines(read_text_file(path));
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    return Vocab::deserialize(body);
}

MonoCorpus encode_corpus(const std::vector<std::vector<std::string>>& blocks, const Vocab& vocab,
                         asmtext::Arch arch, OptLevel opt) {
    MonoCorpus c;
    c.arch = arch;
    c.opt_level = opt;
    c.blocks.reserve(blocks.size());
    for (const auto& b : blocks) c.blocks.push_back(encode_block(b, vocab));
    return c;
}

}  // namespace ubt::corpus
