#pragma once

#include <string_view>

// Contents of the files under data/, compiled in at configure time.
namespace hicurate::embedded {

extern const std::string_view abbreviations_en;
extern const std::string_view abbreviations_hi;
extern const std::string_view translit_scheme;
extern const std::string_view rubric_fact;
extern const std::string_view rubric_open;

}  // namespace hicurate::embedded
