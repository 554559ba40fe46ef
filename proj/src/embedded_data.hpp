#pragma once

namespace secreflect::embedded {

extern const char* const default_rules;
extern const char* const generation_template;
extern const char* const refine_template;
extern const char* const assessment_template;
extern const char* const distill_template;

} // namespace secreflect::embedded
