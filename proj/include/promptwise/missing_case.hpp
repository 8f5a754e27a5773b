#ifndef PROMPTWISE_MISSING_CASE_HPP
#define PROMPTWISE_MISSING_CASE_HPP

#include <array>
#include <string>

#include "promptwise/error.hpp"

namespace pw {

/// Which modalities are absent in a sample. Three cases for two modalities.
enum class MissingCase {
    Complete = 0,
    MissingText = 1,
    MissingImage = 2,
};

inline constexpr std::array<MissingCase, 3> kAllCases = {
    MissingCase::Complete, MissingCase::MissingText, MissingCase::MissingImage};

inline const char* case_name(MissingCase c) {
    switch (c) {
        case MissingCase::Complete:
            return "complete";
        case MissingCase::MissingText:
            return "missing_text";
        case MissingCase::MissingImage:
            return "missing_image";
    }
    return "?";
}

inline MissingCase case_from_name(const std::string& s) {
    for (MissingCase c : kAllCases) {
        if (s == case_name(c)) {
            return c;
        }
    }
    throw ArgumentError("unknown missing case: " + s);
}

} // namespace pw

#endif
