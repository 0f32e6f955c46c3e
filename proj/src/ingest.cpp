#include "socl/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>
#include <unordered_set>

#include "socl/errors.hpp"

namespace socl::ingest {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && trim(current).empty()) {
      current.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? current : std::string(trim(current)));
      current.clear();
      was_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(was_quoted ? current : std::string(trim(current)));
  return fields;
}

template <class Int>
Int parse_int(std::string_view text, std::string_view column, std::size_t line_no) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line_no, "column " + std::string(column) + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

bool is_comment_or_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::string_view to_string(CommentCategory category) {
  switch (category) {
    case CommentCategory::IceBreaking:
      return "ice-breaking";
    case CommentCategory::Responding:
      return "responding";
    case CommentCategory::Solo:
      return "solo";
  }
  return "unknown";
}

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec;
  if (!read_digits(s, 0, 4, y) || s.size() < 20 || s[4] != '-' || !read_digits(s, 5, 2, mo) || s[7] != '-' ||
      !read_digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !read_digits(s, 11, 2, h) ||
      s[13] != ':' || !read_digits(s, 14, 2, mi) || s[16] != ':' || !read_digits(s, 17, 2, sec)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;

  std::size_t pos = 19;
  long long millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    long long scale = 100;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      millis += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  long long offset_minutes = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh, om;
    if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' || !read_digits(s, pos + 4, 2, om) ||
        oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
  return time_point_cast<milliseconds>(local - minutes{offset_minutes});
}

std::string format_rfc3339(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss<milliseconds> tod{ts - day_point};
  char buf[40];
  const long long ms = tod.subseconds().count();
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()), ms);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()));
  }
  return buf;
}

CommentLog parse_comment_log(std::istream& in, const ParseOptions& options) {
  CommentLog log;
  log.course_id = options.course_id;

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (!have_header) {
      if (is_comment_or_blank(view)) continue;
      auto header = split_record(view, line_no);
      std::string joined;
      for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
      if (joined != kLogHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kLogHeader) + "', got '" + joined + "'");
      }
      have_header = true;
      continue;
    }
    if (is_comment_or_blank(view)) continue;

    auto fields = split_record(view, line_no);
    if (fields.size() != 7) {
      throw ParseError(line_no, "expected 7 columns, found " + std::to_string(fields.size()));
    }
    Comment c;
    c.comment_id = fields[0];
    c.author_id = fields[1];
    if (c.comment_id.empty()) throw ParseError(line_no, "empty comment_id");
    if (c.author_id.empty()) throw ParseError(line_no, "empty author_id");
    if (!fields[2].empty()) c.parent_id = fields[2];
    c.week = parse_int<int>(fields[3], "week", line_no);
    c.step = parse_int<int>(fields[4], "step", line_no);
    if (c.week < 1) throw ParseError(line_no, "week must be positive");
    if (c.step < 1) throw ParseError(line_no, "step must be positive");
    auto ts = parse_rfc3339(fields[5]);
    if (!ts) throw ParseError(line_no, "column timestamp: not an RFC 3339 date-time: '" + fields[5] + "'");
    c.timestamp = *ts;
    c.likes = parse_int<std::int64_t>(fields[6], "likes", line_no);
    if (c.likes < 0) throw ParseError(line_no, "likes must be non-negative");

    if (c.parent_id && *c.parent_id == c.comment_id) {
      throw Error(ErrorKind::DataIntegrity, "line " + std::to_string(line_no) + ": comment '" + c.comment_id +
                                                "' replies to itself");
    }
    if (!seen.insert(c.comment_id).second) {
      throw Error(ErrorKind::DataIntegrity,
                  "line " + std::to_string(line_no) + ": duplicate comment_id '" + c.comment_id + "'");
    }
    log.comments.push_back(std::move(c));
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header row");

  for (const auto& c : log.comments) {
    if (c.parent_id && !seen.contains(*c.parent_id)) {
      const std::string msg = "comment '" + c.comment_id + "' replies to unknown comment '" + *c.parent_id + "'";
      if (options.strict) throw Error(ErrorKind::DataIntegrity, msg);
      log.warnings.push_back(msg);
    }
  }
  return log;
}

CommentLog read_comment_log(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open comment log '" + path.string() + "'");
  ParseOptions opts = options;
  if (opts.course_id.empty()) opts.course_id = path.stem().string();
  return parse_comment_log(in, opts);
}

namespace {
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace

void write_comment_log(std::ostream& out, const CommentLog& log) {
  out << kLogHeader << '\n';
  for (const auto& c : log.comments) {
    out << csv_field(c.comment_id) << ',' << csv_field(c.author_id) << ','
        << (c.parent_id ? csv_field(*c.parent_id) : std::string()) << ',' << c.week << ',' << c.step << ','
        << format_rfc3339(c.timestamp) << ',' << c.likes << '\n';
  }
}

std::size_t ReplyIndex::replies_to(const std::string& comment_id) const {
  auto it = reply_counts.find(comment_id);
  return it == reply_counts.end() ? 0 : it->second;
}

ReplyIndex build_reply_index(const CommentLog& log) {
  ReplyIndex index;
  index.reply_counts.reserve(log.comments.size());
  for (const auto& c : log.comments) index.reply_counts.emplace(c.comment_id, 0);
  for (const auto& c : log.comments) {
    if (!c.parent_id) continue;
    auto it = index.reply_counts.find(*c.parent_id);
    if (it == index.reply_counts.end()) {
      index.dangling.push_back(c.comment_id);
    } else {
      ++it->second;
    }
  }
  return index;
}

Categorization categorize(const CommentLog& log, const ReplyIndex& index) {
  Categorization out;
  out.reserve(log.comments.size());
  for (const auto& c : log.comments) {
    CommentCategory cat;
    if (c.parent_id) {
      cat = CommentCategory::Responding;
    } else {
      cat = index.replies_to(c.comment_id) > 0 ? CommentCategory::IceBreaking : CommentCategory::Solo;
    }
    out.emplace(c.comment_id, cat);
  }
  return out;
}

Categorization categorize(const CommentLog& log) { return categorize(log, build_reply_index(log)); }

namespace {

// Mean and sample sd; sd absent below two observations.
std::pair<std::optional<double>, std::optional<double>> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {std::nullopt, std::nullopt};
  long double sum = 0;
  for (double x : v) sum += x;
  const long double mean = sum / v.size();
  if (v.size() < 2) return {static_cast<double>(mean), std::nullopt};
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / (v.size() - 1)))};
}

}  // namespace

CorpusSummary corpus_summary(const CommentLog& log, const Categorization& categories) {
  CorpusSummary s;
  s.total = log.comments.size();
  const auto index = build_reply_index(log);

  std::vector<double> replies_per_ice;
  std::unordered_map<std::string, std::size_t> per_author;
  for (const auto& c : log.comments) {
    auto it = categories.find(c.comment_id);
    if (it == categories.end()) {
      throw invalid_argument("categorization does not cover comment '" + c.comment_id + "'");
    }
    switch (it->second) {
      case CommentCategory::IceBreaking:
        ++s.ice_breaking.count;
        replies_per_ice.push_back(static_cast<double>(index.replies_to(c.comment_id)));
        break;
      case CommentCategory::Responding:
        ++s.responding.count;
        break;
      case CommentCategory::Solo:
        ++s.solo.count;
        break;
    }
    ++per_author[c.author_id];
  }
  s.initializing.count = s.ice_breaking.count + s.solo.count;

  if (s.total > 0) {
    const double n = static_cast<double>(s.total);
    s.responding.share = s.responding.count / n;
    s.initializing.share = s.initializing.count / n;
    s.ice_breaking.share = s.ice_breaking.count / n;
    s.solo.share = s.solo.count / n;
  }
  if (s.initializing.count > 0) {
    s.ice_breaking_share_of_initializing =
        static_cast<double>(s.ice_breaking.count) / static_cast<double>(s.initializing.count);
  }
  std::tie(s.replies_per_ice_breaker_mean, s.replies_per_ice_breaker_sd) = mean_sd(replies_per_ice);

  s.social_student_count = per_author.size();
  std::vector<double> per_student;
  per_student.reserve(per_author.size());
  for (const auto& [author, n] : per_author) per_student.push_back(static_cast<double>(n));
  std::sort(per_student.begin(), per_student.end());
  std::tie(s.comments_per_student_mean, s.comments_per_student_sd) = mean_sd(per_student);
  return s;
}

}  // namespace socl::ingest
