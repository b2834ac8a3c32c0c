#pragma once

#include "elab/common/error.hpp"
#include "elab/vdl/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace elab::vdl {

class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, std::string expected);

    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& expected() const { return expected_; }

private:
    int line_;
    int column_;
    std::string expected_;
};

class DuplicateParam : public Error {
public:
    DuplicateParam(std::string transformation, std::string param);

    const std::string& param() const { return param_; }

private:
    std::string param_;
};

/// Parses VDL source into definitions, in source order.
///
/// Grammar (`#` comments run to end of line):
///
///     tr_def   := "TR" name [":" version] "(" param ("," param)* ")" (atomic | compound)
///     param    := ("input"|"output") "logical_file" name
///               | "scalar" type name ("=" literal)? ("@doc" quoted_string)?
///     atomic   := "atomic" quoted_string
///     compound := "{" call+ "}"
///     call     := name "(" binding ("," binding)* ")" ";"
///     dv_def   := "DV" name "=" trname ":" version "(" binding ("," binding)* ")"
///     binding  := name "=" ("@" lfn | literal)
///
/// A TR without an explicit version is version 1. Integer defaults on float
/// scalars are widened at parse time.
std::vector<Definition> parse_vdl(std::string_view text);

/// Canonical source: one definition per block, parameters in declared order.
std::string serialize(const std::vector<Definition>& defs);
std::string serialize(const Definition& def);

} // namespace elab::vdl
