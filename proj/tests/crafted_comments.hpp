#pragma once

#include <array>
#include <string_view>

#include "conflict/corpus.hpp"

namespace crafted {

struct Case {
  std::string_view body;
  conflict::MatchOutcome outcome;
  std::string_view scrubbed;  // checked for single-polarity cases
};

using O = conflict::MatchOutcome;

// Single-polarity, phrase variants, both-polarity and no-verdict comments
// under the default lexicon.
inline constexpr std::array<Case, 20> kComments{{
    {"NTA, she was way out of line", O::Nta, "she was way out of line"},
    {"You're the asshole here, honestly", O::Yta, "here, honestly"},
    {"YTA at first but after the edit NTA", O::Ambiguous, ""},
    {"nta", O::Nta, ""},
    {"Yta.", O::Yta, ""},
    {"you are the asshole for sure", O::Yta, "for sure"},
    {"You’re the asshole, plain and simple", O::Yta, "plain and simple"},
    {"Not the asshole at all.", O::Nta, "at all."},
    {"Honestly, NTA; your sister overreacted", O::Nta, "Honestly, your sister overreacted"},
    {"You're   the\tasshole and you know it", O::Yta, "and you know it"},
    {"NTA NTA NTA", O::Nta, ""},
    {"I think YTA!! Apologise to her.", O::Yta, "I think Apologise to her."},
    {"not an asshole move at all, NTA", O::Nta, "move at all,"},
    {"YTA but also NTA", O::Ambiguous, ""},
    {"Not the asshole, but you are the asshole to your mom", O::Ambiguous, ""},
    {"wanta go out later?", O::NoVerdict, ""},
    {"NTAs are everywhere on this sub", O::NoVerdict, ""},
    {"ESH honestly, both of you", O::NoVerdict, ""},
    {"INFO: what did your dad say?", O::NoVerdict, ""},
    {"This is a hard one to judge.", O::NoVerdict, ""},
}};

}  // namespace crafted
