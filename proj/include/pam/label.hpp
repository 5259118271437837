#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pam {

// Action labels are interned: a Label is a dense id into a process-wide
// registry, so equality and hashing are integer operations while the
// registry keeps the displayable structure.
//
// Kinds follow the action taxonomy of the model language:
//   Plain     visible action without direction (e.g. a_1)
//   Input     receiving half of a channel      (e.g. c?)
//   Output    sending half of a channel        (e.g. c!)
//   Internal  invisible action tau; an optional tag records which label
//             was hidden (tau(p_1)), keeping marker events expressible
//             after hiding while staying invisible to observers.
enum class Kind : uint8_t { Plain, Input, Output, Internal };

using Label = int32_t;

struct LabelData {
    std::string name;  // channel/action name; "tau" for Internal
    Kind kind = Kind::Plain;
    std::string tag;  // Internal only: hidden-label provenance ("" = bare tau)
};

namespace labels {

// Interns (name, kind, tag) and returns its id. Thread-safe.
Label get(std::string_view name, Kind kind = Kind::Plain, std::string_view tag = {});

// Convenience for tagged invisible actions: tau(tag).
Label tau(std::string_view tag = {});

const LabelData& data(Label l);

// Display form: "a", "c?", "c!", "tau", "tau(p_1)".
std::string show(Label l);

// Inverse of show(); returns -1 if the text is not a valid label form.
Label parse(std::string_view text);

}  // namespace labels

}  // namespace pam
