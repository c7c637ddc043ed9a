#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ubt/asmtext.hpp"
#include "ubt/common.hpp"

using namespace ubt;
using namespace ubt::asmtext;

namespace {

Instruction parse_one(const std::string& line, Arch arch = Arch::X86) {
    const std::string text = "FUNC t\n" + line + "\nENDFUNC\n";
    // go through the real parser so opcode/operand splitting is exercised
    const auto fns = parse_listing(text, arch);
    REQUIRE(fns.size() == 1);
    const NormalizedInstruction& n = fns[0].blocks[0].instructions[0];
    (void)n;
    Instruction instr;  // reparse manually for normalize_instruction tests
    std::istringstream is(line);
    is >> instr.opcode;
    std::string rest;
    std::getline(is, rest);
    instr.arch = arch;
    std::string cur;
    int depth = 0;
    for (char c : rest) {
        if (c == '[' || c == '{' || c == '(') ++depth;
        if (c == ']' || c == '}' || c == ')') --depth;
        if (c == ',' && depth == 0) {
            instr.operands.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty()) instr.operands.push_back(trim(cur));
    return instr;
}

std::string normalized(const std::string& line, Arch arch = Arch::X86) {
    return normalize_instruction(parse_one(line, arch)).pretty();
}

}  // namespace

TEST_CASE("preprocessing rules on the reference snippet") {
    CHECK(normalized("MOV EDX, 11E1H") == "MOV EDX, 11E1H");
    CHECK(normalized("MOV ECX, 0FFFFFFFH") == "MOV ECX, <CONST>");
    CHECK(normalized("JLE LOC_9BA3B") == "JLE LOC_<TAG>");
    CHECK(normalized("CALL CRYPTO_FREE") == "CALL CRYPTO_FREE");
    CHECK(normalized("MOV RCX, CS:GLIBC_2_5") == "MOV RCX, CS:<ADDR>");
    CHECK(normalized("MOV [RSP+VAR_58], RDX") == "MOV [RSP+<VAR>], RDX");
}

TEST_CASE("constant digit counting") {
    CHECK(normalized("MOV EAX, 1234") == "MOV EAX, 1234");
    CHECK(normalized("MOV EAX, 12345") == "MOV EAX, <CONST>");
    CHECK(normalized("MOV EAX, 0X10") == "MOV EAX, 0X10");
    CHECK(normalized("MOV EAX, 0x12345") == "MOV EAX, <CONST>");
    // bare symbols outside call/bracket context become <TAG>
    CHECK(normalized("MOV EAX, OFFSET_TABLE") == "MOV EAX, <TAG>");
    // named displacements inside brackets are kept
    CHECK(normalized("MOV RAX, [RBP+NAME]") == "MOV RAX, [RBP+NAME]");
}

TEST_CASE("size keywords and arm immediates") {
    CHECK(normalized("MOVZX EAX, BYTE PTR [RAX+6BH]") == "MOVZX EAX, <BYTE_PTR>[RAX+6BH]");
    CHECK(normalized("CMP R3, #0", Arch::Arm) == "CMP R3, #0");
    CHECK(normalized("LDRB.W R3, [R3, #0X37]", Arch::Arm) == "LDRB.W R3, [R3, #0X37]");
    CHECK(normalized("BL STARTSWITH_0", Arch::Arm) == "BL STARTSWITH_0");
    CHECK(normalized("BNE LOC_1A2B", Arch::Arm) == "BNE LOC_<TAG>");
}

TEST_CASE("address contexts") {
    CHECK(normalized("JMP 401000H") == "JMP <ADDR>");
    CHECK(normalized("CALL 0x401000") == "CALL <ADDR>");
    CHECK(normalized("MOV EAX, [8049000H]") == "MOV EAX, [<ADDR>]");
    CHECK(normalized("MOV EAX, DWORD_804F00C") == "MOV EAX, <ADDR>");
}

TEST_CASE("normalization is idempotent") {
    const char* lines[] = {
        "MOV EDX, 11E1H",       "MOV ECX, 0FFFFFFFH",          "JLE LOC_9BA3B",
        "CALL CRYPTO_FREE",     "MOV RCX, CS:GLIBC_2_5",       "MOV [RSP+VAR_58], RDX",
        "MOVZX EAX, BYTE PTR [RAX+6BH]", "MOV EAX, OFFSET_TABLE", "JMP 401000H",
    };
    for (const char* line : lines) {
        const NormalizedInstruction first = normalize_instruction(parse_one(line));
        Instruction again;
        again.arch = Arch::X86;
        again.opcode = first.opcode;
        again.operands = first.operands;
        const NormalizedInstruction second = normalize_instruction(again);
        CHECK(second.word() == first.word());
    }
}

TEST_CASE("canonical words") {
    CHECK(normalize_instruction(parse_one("MOV EDX, 11E1H")).word() == "MOV_EDX,11E1H");
    CHECK(normalize_instruction(parse_one("MOV ECX, 0FFFFFFFH")).word() == "MOV_ECX,<CONST>");
    CHECK(normalize_instruction(parse_one("RET")).word() == "RET");
    // tag soundness: single whitespace-free token
    for (const char* line : {"MOV [RSP+VAR_58], RDX", "MOVZX EAX, BYTE PTR [RAX+6BH]"}) {
        const std::string w = normalize_instruction(parse_one(line)).word();
        CHECK(w.find(' ') == std::string::npos);
        CHECK(w.find('\t') == std::string::npos);
    }
}

TEST_CASE("tags_applied reports what happened") {
    const auto n = normalize_instruction(parse_one("MOV ECX, 0FFFFFFFH"));
    CHECK(n.tags_applied.count(TagKind::Const) == 1);
    const auto v = normalize_instruction(parse_one("MOV [RSP+VAR_58], RDX"));
    CHECK(v.tags_applied.count(TagKind::Var) == 1);
    const auto plain = normalize_instruction(parse_one("MOV EAX, EBX"));
    CHECK(plain.tags_applied.empty());
}

TEST_CASE("parse_listing basics") {
    CHECK(parse_listing("", Arch::X86).empty());
    CHECK(parse_listing("# just a comment\n\n", Arch::X86).empty());

    const auto fns = parse_listing(
        "FUNC straight\n"
        "  MOV EAX, 1\n"
        "  ADD EAX, 2\n"
        "  MOV EBX, EAX\n"
        "ENDFUNC\n",
        Arch::X86);
    REQUIRE(fns.size() == 1);
    CHECK(fns[0].name == "straight");
    REQUIRE(fns[0].blocks.size() == 1);
    CHECK(fns[0].blocks[0].instructions.size() == 3);
}

TEST_CASE("conditional branch with fallthrough gives three blocks") {
    const auto fns = parse_listing(
        "FUNC f\n"
        "  MOV EAX, 1\n"
        "  JNZ LOC_A\n"
        "  ADD EAX, 2\n"
        "LBL LOC_A:\n"
        "  RET\n"
        "ENDFUNC\n",
        Arch::X86);
    REQUIRE(fns.size() == 1);
    REQUIRE(fns[0].blocks.size() == 3);
    CHECK(fns[0].blocks[0].instructions.size() == 2);  // MOV, JNZ
    CHECK(fns[0].blocks[1].instructions.size() == 1);  // fallthrough ADD
    CHECK(fns[0].blocks[2].instructions.size() == 1);  // RET after label
}

TEST_CASE("calls do not end blocks") {
    const auto fns = parse_listing(
        "FUNC f\n"
        "  CALL HELPER\n"
        "  MOV EAX, 1\n"
        "  RET\n"
        "ENDFUNC\n",
        Arch::X86);
    REQUIRE(fns[0].blocks.size() == 1);
    CHECK(fns[0].blocks[0].instructions.size() == 3);
}

TEST_CASE("boundary soundness on a random-ish listing") {
    const auto fns = parse_listing(
        "FUNC g\n"
        "  MOV EAX, 1\n"
        "LBL L1:\n"
        "  ADD EAX, 1\n"
        "  JMP L1\n"
        "  SUB EAX, 1\n"
        "  JZ LOC_77\n"
        "LBL LOC_77:\n"
        "  RET\n"
        "ENDFUNC\n",
        Arch::X86);
    for (const auto& fn : fns) {
        for (const auto& block : fn.blocks) {
            for (std::size_t i = 0; i + 1 < block.instructions.size(); ++i)
                CHECK_FALSE(is_block_terminator(block.instructions[i].opcode, Arch::X86));
        }
    }
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_listing("MOV EAX, 1\n", Arch::X86), DataFormatError);
    CHECK_THROWS_AS(parse_listing("FUNC a\nENDFUNC\n", Arch::X86), DataFormatError);
    CHECK_THROWS_AS(parse_listing("FUNC a\n MOV EAX, 1\n", Arch::X86), DataFormatError);
    CHECK_THROWS_AS(parse_listing("FUNC a\nLBL x\n MOV EAX, 1\nENDFUNC\n", Arch::X86),
                    DataFormatError);
    CHECK_THROWS_AS(parse_listing("FUNC a\n MOV EAX,,1\n RET\nENDFUNC\n", Arch::X86),
                    DataFormatError);
    CHECK_THROWS_AS(arch_from_string("mips"), DataFormatError);
    try {
        parse_listing("FUNC a\nFUNC b\n", Arch::X86);
        CHECK(false);
    } catch (const DataFormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("listing round-trip preserves structure and words") {
    const std::string text =
        "FUNC f\n"
        "  MOV EAX, 0FFFFFFFH\n"
        "  JNZ LOC_A\n"
        "  CALL CRYPTO_FREE\n"
        "LBL LOC_A:\n"
        "  MOV [RSP+VAR_58], RDX\n"
        "  RET\n"
        "ENDFUNC\n"
        "FUNC g\n"
        "  RET\n"
        "ENDFUNC\n";
    const auto first = parse_listing(text, Arch::X86);
    const auto second = parse_listing(write_listing(first), Arch::X86);
    REQUIRE(first.size() == second.size());
    for (std::size_t f = 0; f < first.size(); ++f) {
        REQUIRE(first[f].blocks.size() == second[f].blocks.size());
        for (std::size_t b = 0; b < first[f].blocks.size(); ++b) {
            const auto wa = block_words(first[f].blocks[b]);
            const auto wb = block_words(second[f].blocks[b]);
            CHECK(wa == wb);
        }
    }
}
