#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slam/gateway.h"
#include "slam/records.h"

namespace slam {

enum class JudgeMethod { kScorer, kComparer, kComparerNoReason, kSelector };

std::string to_string(JudgeMethod m);
JudgeMethod judge_method_from_string(const std::string& s);

// Judge prompt templates with [slot] placeholders:
//   scorer:      [prompt] [response]
//   comparer*:   [reference_response] [target_response]
//   selector:    [prompt] [responses] [num_responses]
struct JudgeTemplates {
  std::string scorer;
  std::string comparer;
  std::string comparer_nr;
  std::string selector;

  static JudgeTemplates builtin();
  // Reads <dir>/{scorer,comparer,comparer_nr,selector}.txt; one trailing
  // newline per file is ignored.
  static JudgeTemplates load(const std::filesystem::path& dir);
};

std::string render_scorer_prompt(const JudgeTemplates& t, const std::string& prompt,
                                 const std::string& response);
std::string render_comparer_prompt(const JudgeTemplates& t, const std::string& reference,
                                   const std::string& target, bool with_reasoning);
// "1. <text>\n\n2. <text>..." numbering the candidates from 1.
std::string format_response_blocks(const std::vector<std::string>& responses);
std::string render_selector_prompt(const JudgeTemplates& t, const std::string& prompt,
                                   const std::vector<std::string>& responses);

struct ParsedVerdict {
  std::optional<int> score;
  std::optional<int> choice;
  std::optional<std::string> reason;

  bool operator==(const ParsedVerdict&) const = default;
};

// Tolerant extraction from judge output. For score kinds the value must be
// an integer in [0, 10]; for choice it must be in [1, num_choices] (or >= 1
// when num_choices is absent). A case-insensitive "score"/"choice" keyword
// followed by a number decides; otherwise the last standalone integer
// does. Anything else, including out-of-range values, is kParseFailure.
// Reason is the text after "Reason:" up to the verdict line.
ParsedVerdict parse_verdict(const std::string& raw, VerdictKind kind,
                            std::optional<int> num_choices = std::nullopt);

class Judge {
 public:
  explicit Judge(Gateway& gateway, JudgeTemplates templates = JudgeTemplates::builtin(),
                 GenerationParams params = default_params());

  static GenerationParams default_params() {
    GenerationParams p;
    p.temperature = 0.0;
    return p;
  }

  JudgeVerdict judge_score(const std::string& judge_model_id, const std::string& prompt_text,
                           const std::string& response_text);
  JudgeVerdict judge_compare(const std::string& judge_model_id,
                             const std::string& reference_text, const std::string& target_text,
                             bool with_reasoning);
  JudgeVerdict judge_select(const std::string& judge_model_id, const std::string& prompt_text,
                            const std::vector<std::string>& responses);

  const JudgeTemplates& templates() const { return templates_; }

 private:
  std::string ask(const std::string& judge_model_id, const std::string& prompt);

  Gateway& gateway_;
  JudgeTemplates templates_;
  GenerationParams params_;
};

}  // namespace slam
