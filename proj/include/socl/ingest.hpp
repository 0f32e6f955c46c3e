#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace socl::ingest {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct Comment {
  std::string comment_id;
  std::string author_id;
  std::optional<std::string> parent_id;  // absent for top-level comments
  int week = 1;
  int step = 1;
  Timestamp timestamp{};
  std::int64_t likes = 0;
};

enum class CommentCategory { IceBreaking, Responding, Solo };

std::string_view to_string(CommentCategory category);

struct CommentLog {
  std::string course_id;
  std::vector<Comment> comments;
  // Non-fatal problems found while reading (dangling parent references).
  std::vector<std::string> warnings;
};

struct ParseOptions {
  // Reject logs with parent_id values that do not resolve to a comment.
  bool strict = false;
  std::string course_id;
};

// Column header expected on the first row, in this order.
inline constexpr std::string_view kLogHeader = "comment_id,author_id,parent_id,week,step,timestamp,likes";

CommentLog parse_comment_log(std::istream& in, const ParseOptions& options = {});
CommentLog read_comment_log(const std::filesystem::path& path, const ParseOptions& options = {});
void write_comment_log(std::ostream& out, const CommentLog& log);

// RFC 3339 date-time, e.g. 2019-01-07T09:30:00Z or 2019-01-07T10:30:00.250+01:00.
std::optional<Timestamp> parse_rfc3339(std::string_view text);
// UTC rendering with a trailing 'Z'; milliseconds only when nonzero.
std::string format_rfc3339(Timestamp ts);

struct ReplyIndex {
  std::unordered_map<std::string, std::size_t> reply_counts;
  // Comments whose parent_id resolves to nothing in the log.
  std::vector<std::string> dangling;

  std::size_t replies_to(const std::string& comment_id) const;
};

ReplyIndex build_reply_index(const CommentLog& log);

using Categorization = std::unordered_map<std::string, CommentCategory>;

// A comment with a parent is Responding no matter how many replies it
// received; a top-level comment is IceBreaking with >= 1 reply, else Solo.
Categorization categorize(const CommentLog& log, const ReplyIndex& index);
Categorization categorize(const CommentLog& log);

struct CategoryCount {
  std::size_t count = 0;
  std::optional<double> share;  // of all comments; absent when the log is empty
};

struct CorpusSummary {
  std::size_t total = 0;
  CategoryCount responding;
  CategoryCount initializing;
  CategoryCount ice_breaking;
  std::optional<double> ice_breaking_share_of_initializing;
  CategoryCount solo;
  std::optional<double> replies_per_ice_breaker_mean;
  std::optional<double> replies_per_ice_breaker_sd;
  std::size_t social_student_count = 0;
  std::optional<double> comments_per_student_mean;
  std::optional<double> comments_per_student_sd;
};

CorpusSummary corpus_summary(const CommentLog& log, const Categorization& categories);

}  // namespace socl::ingest
