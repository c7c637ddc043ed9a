#include "ubt/asmtext.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

namespace ubt::asmtext {

namespace {

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '<' || c == '>';
}

bool is_hex_digit(char c) { return std::isxdigit(static_cast<unsigned char>(c)); }

bool all_hex(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!is_hex_digit(c)) return false;
    return true;
}

bool all_dec(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

// Accepted literal forms: decimal, 0x-prefixed hex, and IDA-style hex with an
// H suffix (must start with a digit, e.g. 0FFFFFFFH).
bool is_numeric_literal(const std::string& t) {
    if (t.empty()) return false;
    if (all_dec(t)) return true;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X'))
        return all_hex(t.substr(2));
    if (t.size() >= 2 && std::isdigit(static_cast<unsigned char>(t[0])) &&
        (t.back() == 'h' || t.back() == 'H'))
        return all_hex(t.substr(0, t.size() - 1));
    return false;
}

// Significant digits = alphanumeric characters excluding the radix markers
// (0x prefix, H suffix). 0FFFFFFFH counts 8; 11E1H counts 4.
int significant_digits(const std::string& t) {
    std::size_t b = 0, e = t.size();
    if (e > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) b = 2;
    if (e > b && (t[e - 1] == 'h' || t[e - 1] == 'H')) --e;
    return static_cast<int>(e - b);
}

const std::unordered_set<std::string>& x86_registers() {
    static const std::unordered_set<std::string> regs = [] {
        std::unordered_set<std::string> r;
        for (const char* s : {"AL", "AH", "BL", "BH", "CL", "CH", "DL", "DH", "SIL", "DIL",
                              "SPL", "BPL", "AX", "BX", "CX", "DX", "SI", "DI", "SP", "BP",
                              "EAX", "EBX", "ECX", "EDX", "ESI", "EDI", "ESP", "EBP",
                              "RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "RSP", "RBP",
                              "RIP", "EIP", "CS", "DS", "ES", "FS", "GS", "SS",
                              "ST", "EFLAGS", "RFLAGS", "FLAGS"})
            r.insert(s);
        for (int i = 8; i <= 15; ++i) {
            const std::string n = std::to_string(i);
            r.insert("R" + n);
            r.insert("R" + n + "B");
            r.insert("R" + n + "W");
            r.insert("R" + n + "D");
        }
        for (int i = 0; i <= 7; ++i) {
            const std::string n = std::to_string(i);
            r.insert("ST" + n);
            r.insert("MM" + n);
            r.insert("K" + n);
            r.insert("DR" + n);
        }
        for (int i = 0; i <= 8; ++i) r.insert("CR" + std::to_string(i));
        for (int i = 0; i <= 31; ++i) {
            const std::string n = std::to_string(i);
            r.insert("XMM" + n);
            r.insert("YMM" + n);
            r.insert("ZMM" + n);
        }
        return r;
    }();
    return regs;
}

const std::unordered_set<std::string>& arm_registers() {
    static const std::unordered_set<std::string> regs = [] {
        std::unordered_set<std::string> r;
        for (const char* s : {"SP", "LR", "PC", "FP", "IP", "SL", "SB", "TR", "CPSR",
                              "SPSR", "APSR", "FPSCR", "FPEXC", "XZR", "WZR", "WSP",
                              "PSTATE"})
            r.insert(s);
        for (int i = 0; i <= 15; ++i) {
            const std::string n = std::to_string(i);
            r.insert("R" + n);
            r.insert("Q" + n);
        }
        for (int i = 0; i <= 31; ++i) {
            const std::string n = std::to_string(i);
            r.insert("S" + n);
            r.insert("D" + n);
            r.insert("V" + n);
        }
        for (int i = 0; i <= 30; ++i) {
            const std::string n = std::to_string(i);
            r.insert("X" + n);
            r.insert("W" + n);
        }
        return r;
    }();
    return regs;
}

bool is_register(const std::string& upper, Arch arch) {
    return arch == Arch::X86 ? x86_registers().count(upper) > 0
                             : arm_registers().count(upper) > 0;
}

bool is_segment_register(const std::string& upper, Arch arch) {
    if (arch != Arch::X86) return false;
    static const std::unordered_set<std::string> segs = {"CS", "DS", "ES", "FS", "GS", "SS"};
    return segs.count(upper) > 0;
}

const std::unordered_set<std::string>& label_prefixes() {
    static const std::unordered_set<std::string> p = {"LOC", "LOCRET", "LBL", "LABEL", "DEF"};
    return p;
}

const std::unordered_set<std::string>& data_prefixes() {
    static const std::unordered_set<std::string> p = {"BYTE", "WORD",    "DWORD", "QWORD",
                                                      "TBYTE", "XMMWORD", "UNK",   "OFF",
                                                      "ASC",  "DAT",     "STRU",  "ALGN",
                                                      "FLT",  "DBL"};
    return p;
}

const std::unordered_set<std::string>& size_keywords() {
    static const std::unordered_set<std::string> p = {"BYTE",  "WORD",    "DWORD",   "QWORD",
                                                      "TBYTE", "XMMWORD", "YMMWORD", "ZMMWORD"};
    return p;
}

std::string strip_width_suffix(const std::string& upper) {
    if (ends_with(upper, ".W") || ends_with(upper, ".N"))
        return upper.substr(0, upper.size() - 2);
    return upper;
}

bool is_arm_condition(const std::string& s) {
    static const std::unordered_set<std::string> conds = {"EQ", "NE", "CS", "HS", "CC", "LO",
                                                          "MI", "PL", "VS", "VC", "HI", "LS",
                                                          "GE", "LT", "GT", "LE", "AL"};
    return conds.count(s) > 0;
}

struct Piece {
    bool token = false;
    std::string text;
};

std::vector<Piece> tokenize_operand(const std::string& operand) {
    std::vector<Piece> pieces;
    std::size_t i = 0;
    while (i < operand.size()) {
        const char c = operand[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_token_char(c)) {
            std::size_t j = i;
            while (j < operand.size() && is_token_char(operand[j])) ++j;
            pieces.push_back({true, operand.substr(i, j - i)});
            i = j;
        } else {
            pieces.push_back({false, std::string(1, c)});
            ++i;
        }
    }
    return pieces;
}

struct OperandContext {
    Arch arch;
    bool call_operand;
    bool branch_operand;
};

std::string normalize_operand(const std::string& operand, const OperandContext& ctx,
                              std::set<TagKind>& tags) {
    std::vector<Piece> pieces = tokenize_operand(operand);

    // Fold size-keyword pairs ("BYTE PTR") into a single <BYTE_PTR> tag.
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
        if (!pieces[i].token || !pieces[i + 1].token) continue;
        const std::string a = to_upper(pieces[i].text);
        if (size_keywords().count(a) && to_upper(pieces[i + 1].text) == "PTR") {
            pieces[i].text = "<" + a + "_PTR>";
            pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            tags.insert(TagKind::SizePtr);
        }
    }

    const int token_count = static_cast<int>(
        std::count_if(pieces.begin(), pieces.end(), [](const Piece& p) { return p.token; }));

    int bracket_depth = 0;
    bool seg_pending = false;
    std::string out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        Piece& p = pieces[i];
        if (!p.token) {
            const char c = p.text[0];
            if (c == '[' || c == '{') ++bracket_depth;
            if (c == ']' || c == '}') --bracket_depth;
            if (c != ':') seg_pending = false;
            out += p.text;
            continue;
        }

        const std::string upper = to_upper(p.text);
        std::string repl = p.text;

        if (p.text.find('<') != std::string::npos) {
            // already-normalized atom; keep (normalization is idempotent)
        } else if (seg_pending) {
            repl = "<ADDR>";
            tags.insert(TagKind::Addr);
        } else if (is_numeric_literal(p.text)) {
            const bool whole_bracket = i > 0 && !pieces[i - 1].token &&
                                       pieces[i - 1].text == "[" && i + 1 < pieces.size() &&
                                       !pieces[i + 1].token && pieces[i + 1].text == "]";
            const bool sole_branch_target =
                token_count == 1 && (ctx.branch_operand || ctx.call_operand);
            if (whole_bracket || sole_branch_target) {
                repl = "<ADDR>";
                tags.insert(TagKind::Addr);
            } else if (significant_digits(p.text) > 4) {
                repl = "<CONST>";
                tags.insert(TagKind::Const);
            }
        } else if ((starts_with(upper, "VAR_") || starts_with(upper, "ARG_")) &&
                   upper.size() > 4) {
            repl = "<VAR>";
            tags.insert(TagKind::Var);
        } else if (is_register(upper, ctx.arch)) {
            // registers pass through
        } else {
            const std::size_t us = upper.find('_');
            const std::string prefix = us == std::string::npos ? "" : upper.substr(0, us);
            const std::string suffix = us == std::string::npos ? "" : upper.substr(us + 1);
            if (!prefix.empty() && all_hex(suffix) && label_prefixes().count(prefix)) {
                repl = p.text.substr(0, us) + "_<TAG>";
                tags.insert(TagKind::Tag);
            } else if (!prefix.empty() && all_hex(suffix) && data_prefixes().count(prefix)) {
                repl = "<ADDR>";
                tags.insert(TagKind::Addr);
            } else if (ctx.call_operand || bracket_depth > 0) {
                // call targets and named displacements carry semantics; keep
            } else {
                repl = "<TAG>";
                tags.insert(TagKind::Tag);
            }
        }

        seg_pending = is_segment_register(upper, ctx.arch) && i + 1 < pieces.size() &&
                      !pieces[i + 1].token && pieces[i + 1].text == ":";
        out += repl;
    }
    return out;
}

}  // namespace

Arch arch_from_string(const std::string& name) {
    const std::string n = to_upper(trim(name));
    if (n == "X86") return Arch::X86;
    if (n == "ARM") return Arch::Arm;
    throw DataFormatError("unsupported architecture: " + name);
}

std::string arch_name(Arch arch) { return arch == Arch::X86 ? "x86" : "arm"; }

bool is_call_opcode(const std::string& opcode, Arch arch) {
    const std::string op = strip_width_suffix(to_upper(opcode));
    if (arch == Arch::X86) return op == "CALL" || op == "CALLF" || op == "LCALL";
    if (op == "BL" || op == "BLX" || op == "BLR") return true;
    if (op.size() == 4 && starts_with(op, "BL") && is_arm_condition(op.substr(2))) return true;
    if (op.size() == 5 && starts_with(op, "BLX") && is_arm_condition(op.substr(3))) return true;
    return false;
}

bool is_block_terminator(const std::string& opcode, Arch arch) {
    const std::string op = strip_width_suffix(to_upper(opcode));
    if (arch == Arch::X86) {
        if (!op.empty() && op[0] == 'J') return true;
        static const std::unordered_set<std::string> t = {"RET",  "RETN",  "RETF",   "IRET",
                                                          "IRETD", "IRETQ", "LOOP",   "LOOPE",
                                                          "LOOPNE", "LOOPZ", "LOOPNZ", "SYSRET"};
        return t.count(op) > 0;
    }
    if (is_call_opcode(opcode, arch)) return false;
    static const std::unordered_set<std::string> t = {"B",   "BX",  "BXJ", "BR",
                                                      "RET", "CBZ", "CBNZ", "TBZ", "TBNZ"};
    if (t.count(op)) return true;
    if (op.size() == 3 && op[0] == 'B' && is_arm_condition(op.substr(1))) return true;
    if (op.size() == 4 && starts_with(op, "BX") && is_arm_condition(op.substr(2))) return true;
    return false;
}

NormalizedInstruction normalize_instruction(const Instruction& instr) {
    NormalizedInstruction norm;
    norm.opcode = instr.opcode;
    const OperandContext ctx{instr.arch, is_call_opcode(instr.opcode, instr.arch),
                             is_block_terminator(instr.opcode, instr.arch)};
    norm.operands.reserve(instr.operands.size());
    for (const std::string& raw : instr.operands)
        norm.operands.push_back(normalize_operand(raw, ctx, norm.tags_applied));
    return norm;
}

std::string NormalizedInstruction::word() const {
    std::string w = opcode;
    for (std::size_t i = 0; i < operands.size(); ++i) {
        w += i == 0 ? "_" : ",";
        w += operands[i];
    }
    return w;
}

std::string NormalizedInstruction::pretty() const {
    std::string s = opcode;
    for (std::size_t i = 0; i < operands.size(); ++i) {
        s += i == 0 ? " " : ", ";
        for (char c : operands[i]) {
            s.push_back(c);
            if (c == ',') s.push_back(' ');  // display form of operand-interior commas
        }
    }
    return s;
}

std::string canonical_word(const NormalizedInstruction& norm) { return norm.word(); }

namespace {

std::vector<std::string> split_operands(const std::string& rest, int line_no) {
    std::vector<std::string> out;
    if (trim(rest).empty()) return out;
    std::string cur;
    int depth = 0;
    for (char c : rest) {
        if (c == '[' || c == '{' || c == '(') ++depth;
        if (c == ']' || c == '}' || c == ')') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    for (const std::string& op : out)
        if (op.empty())
            throw DataFormatError("line " + std::to_string(line_no) + ": empty operand");
    return out;
}

}  // namespace

std::vector<FunctionRecord> parse_listing(const std::string& text, Arch arch) {
    std::vector<FunctionRecord> functions;
    FunctionRecord current;
    BasicBlock block;
    bool inside = false;

    auto flush_block = [&] {
        if (!block.instructions.empty()) {
            current.blocks.push_back(std::move(block));
            block = BasicBlock{};
        }
    };

    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        std::istringstream ls(line);
        std::string head;
        ls >> head;

        if (head == "FUNC") {
            if (inside)
                throw DataFormatError("line " + std::to_string(line_no) +
                                      ": FUNC inside function '" + current.name + "'");
            std::string name = trim(line.substr(4));
            if (name.empty())
                throw DataFormatError("line " + std::to_string(line_no) + ": FUNC needs a name");
            current = FunctionRecord{name, arch, {}};
            inside = true;
            continue;
        }
        if (head == "ENDFUNC") {
            if (!inside)
                throw DataFormatError("line " + std::to_string(line_no) +
                                      ": ENDFUNC without FUNC");
            flush_block();
            if (current.blocks.empty())
                throw DataFormatError("line " + std::to_string(line_no) + ": function '" +
                                      current.name + "' has no instructions");
            functions.push_back(std::move(current));
            current = FunctionRecord{};
            inside = false;
            continue;
        }
        if (head == "LBL") {
            if (!inside)
                throw DataFormatError("line " + std::to_string(line_no) + ": LBL outside FUNC");
            std::string label = trim(line.substr(3));
            if (label.empty() || label.back() != ':')
                throw DataFormatError("line " + std::to_string(line_no) +
                                      ": label must end with ':'");
            if (trim(label.substr(0, label.size() - 1)).empty())
                throw DataFormatError("line " + std::to_string(line_no) + ": empty label name");
            flush_block();
            continue;
        }

        if (!inside)
            throw DataFormatError("line " + std::to_string(line_no) +
                                  ": instruction outside FUNC: " + line);
        Instruction instr;
        instr.arch = arch;
        instr.opcode = head;
        instr.operands = split_operands(line.substr(head.size()), line_no);
        block.instructions.push_back(normalize_instruction(instr));
        if (is_block_terminator(instr.opcode, arch)) flush_block();
    }
    if (inside)
        throw DataFormatError("line " + std::to_string(line_no) + ": missing ENDFUNC for '" +
                              current.name + "'");
    return functions;
}

std::string write_listing(const std::vector<FunctionRecord>& functions) {
    std::ostringstream out;
    for (const FunctionRecord& fn : functions) {
        out << "FUNC " << fn.name << "\n";
        for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
            if (b > 0) out << "LBL L" << b << ":\n";
            for (const NormalizedInstruction& ins : fn.blocks[b].instructions)
                out << "  " << ins.pretty() << "\n";
        }
        out << "ENDFUNC\n";
    }
    return out.str();
}

std::vector<std::string> block_words(const BasicBlock& block) {
    std::vector<std::string> words;
    words.reserve(block.instructions.size());
    for (const NormalizedInstruction& ins : block.instructions) words.push_back(ins.word());
    return words;
}

}  // namespace ubt::asmtext
