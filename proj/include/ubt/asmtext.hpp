#pragma once

#include <set>
#include <string>
#include <vector>

#include "ubt/common.hpp"

namespace ubt::asmtext {

enum class Arch { X86, Arm };

Arch arch_from_string(const std::string& name);  // throws DataFormatError on unknown arch
std::string arch_name(Arch arch);

enum class TagKind { Const, Addr, Tag, Var, SizePtr };

/// Instruction as parsed from a listing line: opcode plus raw operand tokens.
struct Instruction {
    std::string opcode;
    std::vector<std::string> operands;
    Arch arch = Arch::X86;
};

/// Instruction after the preprocessing rules. Operands are whitespace-free;
/// constants with more than four significant digits became <CONST>, memory
/// references <ADDR>, auto-named stack slots <VAR>, label bodies <TAG>, and
/// size keywords <BYTE_PTR>-style tags. Opcodes are never rewritten.
struct NormalizedInstruction {
    std::string opcode;
    std::vector<std::string> operands;
    std::set<TagKind> tags_applied;

    /// Canonical corpus token: opcode joined to operands by '_', operands by
    /// ','. Opaque; there is no reverse-split contract.
    std::string word() const;

    /// Readable rendering: "OPC dst, src".
    std::string pretty() const;
};

struct BasicBlock {
    std::vector<NormalizedInstruction> instructions;
};

struct FunctionRecord {
    std::string name;
    Arch arch = Arch::X86;
    std::vector<BasicBlock> blocks;
};

NormalizedInstruction normalize_instruction(const Instruction& instr);
std::string canonical_word(const NormalizedInstruction& norm);

/// Parses a disassembly dump. Grammar: `FUNC <name>` opens a function,
/// `LBL <label>:` marks a label, `ENDFUNC` closes, `#` starts a comment,
/// any other non-empty line is one instruction. Blocks break at labels and
/// after jumps/returns; calls fall through.
std::vector<FunctionRecord> parse_listing(const std::string& text, Arch arch);

/// Emits the dump form of (normalized) functions; re-parsing yields the same
/// structure and words.
std::string write_listing(const std::vector<FunctionRecord>& functions);

std::vector<std::string> block_words(const BasicBlock& block);

bool is_call_opcode(const std::string& opcode, Arch arch);
bool is_block_terminator(const std::string& opcode, Arch arch);  // jumps and returns

}  // namespace ubt::asmtext
