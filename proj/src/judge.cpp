#include "slam/judge.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "judge_templates.h"
#include "slam/error.h"
#include "slam/runner.h"

namespace slam {

std::string to_string(JudgeMethod m) {
  switch (m) {
    case JudgeMethod::kScorer: return "scorer";
    case JudgeMethod::kComparer: return "comparer";
    case JudgeMethod::kComparerNoReason: return "comparer-nr";
    case JudgeMethod::kSelector: return "selector";
  }
  return "scorer";
}

JudgeMethod judge_method_from_string(const std::string& s) {
  if (s == "scorer") return JudgeMethod::kScorer;
  if (s == "comparer") return JudgeMethod::kComparer;
  if (s == "comparer-nr" || s == "comparer_nr") return JudgeMethod::kComparerNoReason;
  if (s == "selector") return JudgeMethod::kSelector;
  throw Error(ErrorCode::kInvalidArgument, "unknown judge method '" + s + "'");
}

JudgeTemplates JudgeTemplates::builtin() {
  return {builtin_templates::kScorer, builtin_templates::kComparer,
          builtin_templates::kComparerNoReason, builtin_templates::kSelector};
}

JudgeTemplates JudgeTemplates::load(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error(ErrorCode::kInvalidConfig, "missing template " + (dir / name).string());
    std::ostringstream os;
    os << in.rdbuf();
    std::string s = os.str();
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  return {read("scorer.txt"), read("comparer.txt"), read("comparer_nr.txt"),
          read("selector.txt")};
}

std::string render_scorer_prompt(const JudgeTemplates& t, const std::string& prompt,
                                 const std::string& response) {
  return render_prompt(t.scorer, {{"prompt", prompt}, {"response", response}});
}

std::string render_comparer_prompt(const JudgeTemplates& t, const std::string& reference,
                                   const std::string& target, bool with_reasoning) {
  return render_prompt(with_reasoning ? t.comparer : t.comparer_nr,
                       {{"reference_response", reference}, {"target_response", target}});
}

std::string format_response_blocks(const std::vector<std::string>& responses) {
  std::string out;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += std::to_string(i + 1) + ". " + responses[i];
  }
  return out;
}

std::string render_selector_prompt(const JudgeTemplates& t, const std::string& prompt,
                                   const std::vector<std::string>& responses) {
  return render_prompt(t.selector, {{"prompt", prompt},
                                    {"responses", format_response_blocks(responses)},
                                    {"num_responses", std::to_string(responses.size())}});
}

namespace {

struct NumberHit {
  std::size_t pos;  // where the deciding keyword or number starts
  bool integral;
  long long value;
};

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string lower(const std::string& s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Reads [-]digits[.digits] at `i`; returns false if no number starts there.
bool read_number(const std::string& s, std::size_t i, NumberHit& hit) {
  bool negative = false;
  if (i < s.size() && s[i] == '-' && i + 1 < s.size() && is_digit(s[i + 1])) {
    negative = true;
    ++i;
  }
  if (i >= s.size() || !is_digit(s[i])) return false;
  long long v = 0;
  std::size_t digits = 0;
  while (i < s.size() && is_digit(s[i])) {
    if (digits < 12) v = v * 10 + (s[i] - '0');
    ++digits;
    ++i;
  }
  hit.integral = !(i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) && digits <= 12;
  hit.value = negative ? -v : v;
  return true;
}

std::optional<NumberHit> last_keyword_number(const std::string& raw, const std::string& keyword) {
  const std::string text = lower(raw);
  std::optional<NumberHit> last;
  for (std::size_t pos = text.find(keyword); pos != std::string::npos;
       pos = text.find(keyword, pos + 1)) {
    if (pos > 0 && is_alpha(text[pos - 1])) continue;
    std::size_t i = pos + keyword.size();
    if (i < text.size() && is_alpha(text[i])) continue;
    // Skip separators and a few connective words: "score: 8", "score is 8",
    // "**Score:** 8", "score of 8".
    for (bool progressed = true; progressed;) {
      progressed = false;
      while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) ||
                                 text[i] == ':' || text[i] == '*' || text[i] == '=' ||
                                 text[i] == '#' || text[i] == '"' || text[i] == '\'')) {
        ++i;
        progressed = true;
      }
      for (const char* word : {"would be", "is", "of", "be"}) {
        std::string w(word);
        if (text.compare(i, w.size(), w) == 0 &&
            (i + w.size() >= text.size() || !is_alpha(text[i + w.size()]))) {
          i += w.size();
          progressed = true;
          break;
        }
      }
    }
    NumberHit hit{pos, true, 0};
    if (read_number(text, i, hit)) last = hit;
  }
  return last;
}

std::optional<NumberHit> last_standalone_integer(const std::string& raw) {
  const std::string text = lower(raw);
  std::optional<NumberHit> last;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    std::size_t num_start = start;
    if (start > 0 && text[start - 1] == '-' && (start < 2 || !std::isalnum(static_cast<unsigned char>(text[start - 2])))) {
      num_start = start - 1;
    }
    char before = num_start > 0 ? text[num_start - 1] : ' ';
    bool standalone = !std::isalnum(static_cast<unsigned char>(before)) && before != '.' &&
                      before != '/' && before != '_';
    bool decimal = i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1]);
    if (i < text.size() && (is_alpha(text[i]) || text[i] == '_')) standalone = false;
    if (num_start >= 7 && text.compare(num_start - 7, 7, "out of ") == 0) standalone = false;
    if (decimal) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
      continue;
    }
    if (standalone) {
      NumberHit hit{num_start, true, 0};
      read_number(text, num_start, hit);
      last = hit;
    }
  }
  return last;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ParsedVerdict parse_verdict(const std::string& raw, VerdictKind kind,
                            std::optional<int> num_choices) {
  const bool choice_kind = kind == VerdictKind::kChoice;
  auto hit = last_keyword_number(raw, choice_kind ? "choice" : "score");
  if (!hit) hit = last_standalone_integer(raw);
  if (!hit) throw Error(ErrorCode::kParseFailure, "no verdict number in judge output");
  if (!hit->integral) {
    throw Error(ErrorCode::kParseFailure, "verdict is not an integer");
  }
  const long long lo = choice_kind ? 1 : 0;
  const long long hi = choice_kind ? (num_choices ? *num_choices : 1LL << 30) : 10;
  if (hit->value < lo || hit->value > hi) {
    throw Error(ErrorCode::kParseFailure,
                "verdict " + std::to_string(hit->value) + " outside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
  }
  ParsedVerdict out;
  if (choice_kind) {
    out.choice = static_cast<int>(hit->value);
  } else {
    out.score = static_cast<int>(hit->value);
  }
  if (kind != VerdictKind::kCompareNoReason) {
    const std::string text = lower(raw);
    std::size_t r = text.find("reason:");
    if (r != std::string::npos) {
      std::size_t begin = r + 7;
      std::size_t end = raw.size();
      if (hit->pos > begin) {
        std::size_t line_start = raw.rfind('\n', hit->pos);
        end = (line_start == std::string::npos || line_start < begin) ? hit->pos : line_start;
      }
      std::string reason = trim(raw.substr(begin, end - begin));
      if (!reason.empty()) out.reason = reason;
    }
  }
  return out;
}

Judge::Judge(Gateway& gateway, JudgeTemplates templates, GenerationParams params)
    : gateway_(gateway), templates_(std::move(templates)), params_(params) {}

std::string Judge::ask(const std::string& judge_model_id, const std::string& prompt) {
  return gateway_.generate(judge_model_id, prompt, params_).response_text;
}

JudgeVerdict Judge::judge_score(const std::string& judge_model_id,
                                const std::string& prompt_text,
                                const std::string& response_text) {
  JudgeVerdict v;
  v.kind = VerdictKind::kScore;
  v.judge_model_id = judge_model_id;
  v.raw_output = ask(judge_model_id, render_scorer_prompt(templates_, prompt_text, response_text));
  auto parsed = parse_verdict(v.raw_output, v.kind);
  v.score = parsed.score;
  v.reason = parsed.reason;
  return v;
}

JudgeVerdict Judge::judge_compare(const std::string& judge_model_id,
                                  const std::string& reference_text,
                                  const std::string& target_text, bool with_reasoning) {
  JudgeVerdict v;
  v.kind = with_reasoning ? VerdictKind::kCompare : VerdictKind::kCompareNoReason;
  v.judge_model_id = judge_model_id;
  v.raw_output = ask(judge_model_id, render_comparer_prompt(templates_, reference_text,
                                                            target_text, with_reasoning));
  auto parsed = parse_verdict(v.raw_output, v.kind);
  v.score = parsed.score;
  v.reason = parsed.reason;
  return v;
}

JudgeVerdict Judge::judge_select(const std::string& judge_model_id,
                                 const std::string& prompt_text,
                                 const std::vector<std::string>& responses) {
  if (responses.size() < 2) {
    throw Error(ErrorCode::kTooFewResponses,
                "selector needs at least 2 responses, got " + std::to_string(responses.size()));
  }
  JudgeVerdict v;
  v.kind = VerdictKind::kChoice;
  v.judge_model_id = judge_model_id;
  v.raw_output =
      ask(judge_model_id, render_selector_prompt(templates_, prompt_text, responses));
  auto parsed = parse_verdict(v.raw_output, v.kind, static_cast<int>(responses.size()));
  v.choice = parsed.choice;
  v.reason = parsed.reason;
  return v;
}

}  // namespace slam
