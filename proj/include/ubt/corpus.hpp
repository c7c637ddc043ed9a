#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ubt/asmtext.hpp"
#include "ubt/common.hpp"

namespace ubt::corpus {

inline constexpr std::int32_t kPad = 0;
inline constexpr std::int32_t kUnk = 1;
inline constexpr std::int32_t kBos = 2;
inline constexpr std::int32_t kEos = 3;
inline constexpr std::int32_t kNumSpecials = 4;

extern const char* const kSpecialWords[kNumSpecials];  // <PAD> <UNK> <BOS> <EOS>

/// Word <-> dense id bijection with reserved specials at ids 0..3 and the
/// remaining ids ordered by descending count, ties broken lexicographically.
class Vocab {
public:
    Vocab();

    std::int32_t size() const { return static_cast<std::int32_t>(words_.size()); }
    const std::string& word(std::int32_t id) const;
    std::int64_t count(std::int32_t id) const { return counts_[static_cast<std::size_t>(id)]; }
    /// Returns kUnk for unknown words.
    std::int32_t id_of(const std::string& word) const;
    bool contains(const std::string& word) const { return index_.count(word) > 0; }
    static bool is_special(std::int32_t id) { return id < kNumSpecials; }

    void add(const std::string& word, std::int64_t count);  // insertion order = id order

    std::string serialize() const;  // line 1: V; then "word count" per id
    static Vocab deserialize(const std::string& text);

private:
    std::vector<std::string> words_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::string, std::int32_t> index_;
};

Vocab build_vocab(const std::vector<std::vector<std::string>>& blocks, std::int64_t min_count = 1);

std::vector<std::int32_t> encode_block(const std::vector<std::string>& block, const Vocab& vocab);
std::vector<std::string> decode_block(const std::vector<std::int32_t>& ids, const Vocab& vocab);

enum class OptLevel { O0, O1, O2, O3 };
OptLevel opt_level_from_string(const std::string& s);
std::string opt_level_name(OptLevel o);

struct MonoCorpus {
    asmtext::Arch arch = asmtext::Arch::X86;
    OptLevel opt_level = OptLevel::O0;
    std::vector<std::vector<std::int32_t>> blocks;
};

struct CorpusStats {
    std::int64_t function_count = 0;
    std::int64_t unique_instruction_count = 0;
    std::int64_t total_instruction_count = 0;
};

CorpusStats corpus_stats(const std::vector<asmtext::FunctionRecord>& functions);
CorpusStats block_stats(const std::vector<std::vector<std::string>>& blocks,
                        std::int64_t function_count);

struct StatsRow {
    std::string opt_level;
    std::string arch;
    CorpusStats stats;
};
std::string format_stats_table(const std::vector<StatsRow>& rows);

// Corpus file: one basic block per line, canonical words separated by single
// spaces; leading '#' lines are provenance comments.
void write_corpus_file(const std::string& path,
                       const std::vector<std::vector<std::string>>& blocks,
                       const Provenance& prov);
std::vector<std::vector<std::string>> read_corpus_file(const std::string& path);

void write_vocab_file(const std::string& path, const Vocab& vocab, const Provenance& prov);
Vocab read_vocab_file(const std::string& path);

MonoCorpus encode_corpus(const std::vector<std::vector<std::string>>& blocks, const Vocab& vocab,
                         asmtext::Arch arch, OptLevel opt);

}  // namespace ubt::corpus
