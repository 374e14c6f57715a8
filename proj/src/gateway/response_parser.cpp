#include "geoloc/gateway/response_parser.hpp"

#include <cctype>

#include "geoloc/util/text.hpp"

namespace geoloc::gateway {
namespace {

constexpr int kMaxDepth = 32;

std::string fold(std::string_view s) {
  return util::collapse_whitespace(util::fold_to_ascii_lower(s));
}

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Recursive-descent reader for the loose object dialect models emit.
class LooseReader {
 public:
  explicit LooseReader(std::string_view text) : s_(text) {}

  std::optional<std::map<std::string, std::string>> object_at(std::size_t start) {
    pos_ = start;
    std::map<std::string, std::string> fields;
    if (!read_object(fields, 0)) return std::nullopt;
    return fields;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  void skip_ws() {
    while (!at_end() && is_ws(s_[pos_])) ++pos_;
  }

  // A single quote closes a string only when followed by a delimiter, so
  // apostrophes inside words ("Singapore's") survive.
  bool closes_single_quote(std::size_t i) const {
    std::size_t j = i + 1;
    while (j < s_.size() && is_ws(s_[j])) ++j;
    if (j >= s_.size()) return true;
    const char c = s_[j];
    return c == ',' || c == '}' || c == ':' || c == ']';
  }

  bool read_string(std::string& out) {
    const char quote = peek();
    ++pos_;
    out.clear();
    while (!at_end()) {
      const char c = s_[pos_];
      if (c == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[pos_ + 1];
        pos_ += 2;
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case 'u': {
            unsigned cp = 0;
            std::size_t k = 0;
            for (; k < 4 && pos_ + k < s_.size(); ++k) {
              const char h = s_[pos_ + k];
              if (!std::isxdigit(static_cast<unsigned char>(h))) break;
              cp = cp * 16 + static_cast<unsigned>(
                                 std::isdigit(static_cast<unsigned char>(h))
                                     ? h - '0'
                                     : (std::tolower(static_cast<unsigned char>(h)) - 'a' + 10));
            }
            if (k == 4) {
              pos_ += 4;
              append_utf8(out, cp);
            } else {
              out.push_back('u');
            }
            break;
          }
          default: out.push_back(e); break;
        }
        continue;
      }
      if (c == quote && (quote == '"' || closes_single_quote(pos_))) {
        ++pos_;
        return true;
      }
      out.push_back(c);
      ++pos_;
    }
    return false;
  }

  bool read_bare(std::string& out) {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = s_[pos_];
      if (c == ',' || c == '}' || c == ']' || c == ':' || c == '{' || c == '[' ||
          c == '\n') {
        break;
      }
      ++pos_;
    }
    out = util::trim(s_.substr(start, pos_ - start));
    return !out.empty();
  }

  bool read_array(std::string& out, int depth) {
    ++pos_;  // '['
    std::vector<std::string> items;
    while (true) {
      skip_ws();
      if (at_end()) return false;
      if (peek() == ']') {
        ++pos_;
        break;
      }
      std::string item;
      if (!read_value(item, depth + 1)) return false;
      if (!item.empty()) items.push_back(std::move(item));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() == ']') {
        ++pos_;
        break;
      } else {
        return false;
      }
    }
    out.clear();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) out += "; ";
      out += items[i];
    }
    return true;
  }

  bool read_value(std::string& out, int depth) {
    if (depth > kMaxDepth) return false;
    skip_ws();
    if (at_end()) return false;
    const char c = peek();
    if (c == '"' || c == '\'') return read_string(out);
    if (c == '[') return read_array(out, depth);
    if (c == '{') {
      std::map<std::string, std::string> nested;
      const std::size_t begin = pos_;
      if (!read_object(nested, depth + 1)) return false;
      out = std::string(s_.substr(begin, pos_ - begin));
      return true;
    }
    if (!read_bare(out)) return false;
    if (out == "null") out.clear();
    return true;
  }

  bool read_object(std::map<std::string, std::string>& fields, int depth) {
    if (depth > kMaxDepth || peek() != '{') return false;
    ++pos_;
    while (true) {
      skip_ws();
      if (at_end()) return false;
      if (peek() == '}') {
        ++pos_;
        return true;
      }
      std::string key;
      if (peek() == '"' || peek() == '\'') {
        if (!read_string(key)) return false;
      } else if (!read_bare(key)) {
        return false;
      }
      skip_ws();
      if (peek() != ':') return false;
      ++pos_;
      std::string value;
      if (!read_value(value, depth + 1)) return false;
      key = util::to_lower_ascii(util::trim(key));
      if (fields.find(key) == fields.end()) fields.emplace(std::move(key), std::move(value));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() == '}') {
        ++pos_;
        return true;
      } else {
        return false;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string strip_code_fences(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw.compare(i, 3, "```") == 0) {
      i += 3;
      // Drop a language tag such as ```json.
      while (i < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i]))) ++i;
      continue;
    }
    out.push_back(raw[i]);
    ++i;
  }
  return out;
}

std::optional<std::string> field(const std::map<std::string, std::string>& obj,
                                 std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = obj.find(key);
    if (it == obj.end()) continue;
    std::string value = util::collapse_whitespace(it->second);
    const std::string lower = util::to_lower_ascii(value);
    if (value.empty() || lower == "unknown" || lower == "n/a" || lower == "none" ||
        lower == "null") {
      return std::nullopt;
    }
    return value;
  }
  return std::nullopt;
}

}  // namespace

RefusalDetector::RefusalDetector() : RefusalDetector(default_patterns()) {}

RefusalDetector::RefusalDetector(std::vector<std::string> patterns) {
  for (auto& p : patterns) add_pattern(std::move(p));
}

const std::vector<std::string>& RefusalDetector::default_patterns() {
  static const std::vector<std::string> kPatterns = {
      "I'm sorry, I can't provide assistance with that request.",
      "I'm sorry, but I am unable to provide the exact location, such as the country "
      "and city, for the image you have provided. My capabilities do not include "
      "analyzing specific details to determine the geographical location of the image "
      "content.",
  };
  return kPatterns;
}

void RefusalDetector::add_pattern(std::string pattern) {
  std::string folded = fold(pattern);
  if (folded.empty()) return;
  patterns_.push_back(std::move(pattern));
  folded_.push_back(std::move(folded));
}

bool RefusalDetector::matches(std::string_view text) const {
  const std::string folded = fold(text);
  for (const auto& p : folded_) {
    if (folded.find(p) != std::string::npos) return true;
  }
  return false;
}

std::optional<std::map<std::string, std::string>> extract_first_object(
    std::string_view text) {
  LooseReader reader(text);
  for (std::size_t i = text.find('{'); i != std::string_view::npos;
       i = text.find('{', i + 1)) {
    if (auto obj = reader.object_at(i)) return obj;
  }
  return std::nullopt;
}

ParsedAnswer parse_prediction(std::string_view raw, const RefusalDetector& refusals) {
  ParsedAnswer a;
  if (util::trim(raw).empty()) {
    a.failure_cause = FailureCause::kEmpty;
    return a;
  }
  if (refusals.matches(raw)) {
    a.failure_cause = FailureCause::kRefusal;
    return a;
  }
  const auto obj = extract_first_object(strip_code_fences(raw));
  if (!obj) {
    a.failure_cause = FailureCause::kUnparseable;
    return a;
  }
  a.country = field(*obj, {"country"});
  a.city = field(*obj, {"city"});
  a.reasons = field(*obj, {"reasons", "reason", "explanation", "explanations"});
  a.effective = a.country.has_value() && a.city.has_value();
  if (!a.effective) a.failure_cause = FailureCause::kEmpty;
  return a;
}

PredictionRecord make_prediction(std::string image_id, std::string raw,
                                 const RefusalDetector& refusals) {
  ParsedAnswer a = parse_prediction(raw, refusals);
  PredictionRecord p;
  p.image_id = std::move(image_id);
  p.raw_text = std::move(raw);
  p.effective = a.effective;
  p.failure_cause = a.failure_cause;
  if (a.effective) {
    p.country = std::move(a.country);
    p.city = std::move(a.city);
  } else {
    // Keep partial fields for inspection; the invariant only constrains
    // effective records.
    if (a.country) p.country = std::move(a.country);
    if (a.city) p.city = std::move(a.city);
  }
  p.reasons = std::move(a.reasons);
  return p;
}

}  // namespace geoloc::gateway
