// Copyright 2026 The Taskforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taskforge/patch/patch.hpp"

#include <algorithm>
#include <unordered_map>

#include "taskforge/analysis/analysis.hpp"
#include "taskforge/common/error.hpp"
#include "taskforge/common/hash.hpp"

namespace taskforge {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kContext = 3;

// Lines keep their terminating '\n'; a final line without one stays short.
std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t nl = s.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? s.size() : nl + 1;
    out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

enum class OpKind { equal, del, ins };
struct Op {
  OpKind kind;
  std::size_t a;  // index into old
  std::size_t b;  // index into new
};

// Myers' O((N+M)D) greedy diff over interned lines, after trimming the
// common prefix and suffix.
std::vector<Op> line_diff(const std::vector<std::string_view>& A,
                          const std::vector<std::string_view>& B) {
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](std::string_view l) {
    return ids.emplace(l, static_cast<int>(ids.size())).first->second;
  };
  std::vector<int> a(A.size()), b(B.size());
  for (std::size_t i = 0; i < A.size(); ++i) a[i] = intern(A[i]);
  for (std::size_t i = 0; i < B.size(); ++i) b[i] = intern(B[i]);

  std::size_t pre = 0;
  while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < a.size() - pre && suf < b.size() - pre &&
         a[a.size() - 1 - suf] == b[b.size() - 1 - suf]) {
    ++suf;
  }
  const long n = static_cast<long>(a.size() - pre - suf);
  const long m = static_cast<long>(b.size() - pre - suf);
  auto x_at = [&](long i) { return a[pre + i]; };
  auto y_at = [&](long j) { return b[pre + j]; };

  std::vector<Op> mid;
  if (n > 0 || m > 0) {
    const long max = n + m;
    const long off = max + 1;
    std::vector<long> v(2 * max + 3, 0);
    std::vector<std::vector<long>> trace;
    long found_d = -1;
    for (long d = 0; d <= max && found_d < 0; ++d) {
      trace.push_back(v);
      for (long k = -d; k <= d; k += 2) {
        long x = (k == -d || (k != d && v[off + k - 1] < v[off + k + 1])) ? v[off + k + 1]
                                                                            : v[off + k - 1] + 1;
        long y = x - k;
        while (x < n && y < m && x_at(x) == y_at(y)) ++x, ++y;
        v[off + k] = x;
        if (x >= n && y >= m) {
          found_d = d;
          break;
        }
      }
    }
    // Backtrack from (n, m).
    long x = n, y = m;
    for (long d = found_d; d > 0; --d) {
      const auto& pv = trace[static_cast<std::size_t>(d)];
      long k = x - y;
      bool down = (k == -d || (k != d && pv[off + k - 1] < pv[off + k + 1]));
      long pk = down ? k + 1 : k - 1;
      long px = pv[off + pk];
      long py = px - pk;
      while (x > px + (down ? 0 : 1) && y > py + (down ? 1 : 0)) {
        --x, --y;
        mid.push_back({OpKind::equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
      }
      if (down) {
        --y;
        mid.push_back({OpKind::ins, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
      } else {
        --x;
        mid.push_back({OpKind::del, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
      }
    }
    while (x > 0 && y > 0) {
      --x, --y;
      mid.push_back({OpKind::equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    std::reverse(mid.begin(), mid.end());
  }

  std::vector<Op> ops;
  ops.reserve(pre + mid.size() + suf);
  for (std::size_t i = 0; i < pre; ++i) ops.push_back({OpKind::equal, i, i});
  for (const Op& o : mid) ops.push_back({o.kind, o.a + pre, o.b + pre});
  for (std::size_t i = 0; i < suf; ++i) {
    ops.push_back({OpKind::equal, a.size() - suf + i, b.size() - suf + i});
  }
  return ops;
}

std::string range_text(std::size_t start, std::size_t count) {
  std::string s = std::to_string(start);
  if (count != 1) s += "," + std::to_string(count);
  return s;
}

void render_hunk(std::string& out, const Hunk& h) {
  out += "@@ -" + range_text(h.old_start, h.old_count) + " +" +
         range_text(h.new_start, h.new_count) + " @@\n";
  for (const auto& [tag, line] : h.lines) {
    out += tag;
    out += line;
    if (line.empty() || line.back() != '\n') out += "\n\\ No newline at end of file\n";
  }
}

std::string render(const FileDiff& fd) {
  std::string out;
  const std::string& p = fd.path();
  out += "diff --git a/" + (fd.old_path ? *fd.old_path : p) + " b/" +
         (fd.new_path ? *fd.new_path : p) + "\n";
  if (!fd.old_path) out += "new file mode 100644\n";
  if (!fd.new_path) out += "deleted file mode 100644\n";
  out += fd.old_path ? "--- a/" + *fd.old_path + "\n" : "--- /dev/null\n";
  out += fd.new_path ? "+++ b/" + *fd.new_path + "\n" : "+++ /dev/null\n";
  for (const auto& h : fd.hunks) render_hunk(out, h);
  return out;
}

std::vector<Hunk> make_hunks(const std::vector<std::string_view>& A,
                             const std::vector<std::string_view>& B) {
  auto ops = line_diff(A, B);
  std::vector<std::size_t> changes;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].kind != OpKind::equal) changes.push_back(i);
  }
  std::vector<Hunk> hunks;
  std::size_t c = 0;
  while (c < changes.size()) {
    std::size_t first = changes[c];
    std::size_t last = first;
    while (c + 1 < changes.size() && changes[c + 1] - last <= 2 * kContext + 1) {
      last = changes[++c];
    }
    ++c;
    std::size_t lo = first >= kContext ? first - kContext : 0;
    std::size_t hi = std::min(ops.size(), last + kContext + 1);
    Hunk h;
    // Position of the hunk on each side: index of the first line it covers.
    std::size_t old_pos = ops[lo].a;
    std::size_t new_pos = ops[lo].b;
    for (std::size_t i = lo; i < hi; ++i) {
      const Op& o = ops[i];
      switch (o.kind) {
        case OpKind::equal:
          h.lines.emplace_back(' ', std::string(A[o.a]));
          ++h.old_count, ++h.new_count;
          break;
        case OpKind::del:
          h.lines.emplace_back('-', std::string(A[o.a]));
          ++h.old_count;
          break;
        case OpKind::ins:
          h.lines.emplace_back('+', std::string(B[o.b]));
          ++h.new_count;
          break;
      }
    }
    h.old_start = h.old_count == 0 ? old_pos : old_pos + 1;
    h.new_start = h.new_count == 0 ? new_pos : new_pos + 1;
    hunks.push_back(std::move(h));
  }
  return hunks;
}

bool has_nul(const std::optional<std::string>& s) {
  return s && s->find('\0') != std::string::npos;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::MalformedPatch, "line " + std::to_string(line_no), why);
}

bool parse_range(std::string_view s, std::size_t& start, std::size_t& count) {
  auto comma = s.find(',');
  try {
    std::size_t used = 0;
    std::string a(s.substr(0, comma));
    if (a.empty() || !std::isdigit(static_cast<unsigned char>(a[0]))) return false;
    start = std::stoul(a, &used);
    if (used != a.size()) return false;
    if (comma == std::string_view::npos) {
      count = 1;
    } else {
      std::string b(s.substr(comma + 1));
      if (b.empty() || !std::isdigit(static_cast<unsigned char>(b[0]))) return false;
      count = std::stoul(b, &used);
      if (used != b.size()) return false;
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Applies a file's hunks to `old_text`. `where` names the file in errors.
std::string apply_hunks(const std::string& where, std::string_view old_text,
                        const std::vector<Hunk>& hunks, bool lenient) {
  auto lines = split_lines(old_text);
  std::string out;
  std::size_t cursor = 0;  // next unconsumed old line
  for (std::size_t hi = 0; hi < hunks.size(); ++hi) {
    const Hunk& h = hunks[hi];
    std::vector<std::string_view> expect;
    for (const auto& [tag, line] : h.lines) {
      if (tag != '+') expect.emplace_back(line);
    }
    auto fits = [&](std::size_t at) {
      if (at < cursor || at + expect.size() > lines.size()) return false;
      for (std::size_t i = 0; i < expect.size(); ++i) {
        if (lines[at + i] != expect[i]) return false;
      }
      return true;
    };
    std::size_t at = h.old_count == 0 ? h.old_start : h.old_start - 1;
    if (!fits(at)) {
      bool found = false;
      if (lenient) {
        for (std::size_t delta = 1; !found && delta <= lines.size(); ++delta) {
          if (at >= delta && fits(at - delta)) at -= delta, found = true;
          else if (fits(at + delta)) at += delta, found = true;
        }
      }
      if (!found) {
        throw Error(ErrorCode::HunkRejected, where + "#" + std::to_string(hi + 1),
                    "context does not match at line " + std::to_string(h.old_start));
      }
    }
    for (std::size_t i = cursor; i < at; ++i) out += lines[i];
    for (const auto& [tag, line] : h.lines) {
      if (tag != '-') out += line;
    }
    cursor = at + expect.size();
  }
  for (std::size_t i = cursor; i < lines.size(); ++i) out += lines[i];
  return out;
}

}  // namespace

std::vector<FileDiff> parse_diff(std::string_view text) {
  std::vector<FileDiff> files;
  auto lines = split_lines(text);
  if (!text.empty() && text.back() != '\n') malformed(lines.size(), "missing final newline");
  auto body = [](std::string_view l) {
    if (!l.empty() && l.back() == '\n') l.remove_suffix(1);
    return l;
  };
  auto path_of = [&](std::string_view l, std::string_view prefix, std::size_t no)
      -> std::optional<std::string> {
    if (l == "/dev/null") return std::nullopt;
    if (!l.starts_with(prefix)) malformed(no, "path without " + std::string(prefix) + " prefix");
    l.remove_prefix(prefix.size());
    if (l.empty()) malformed(no, "empty path");
    return std::string(l);
  };

  std::size_t i = 0;
  while (i < lines.size()) {
    std::string_view l = body(lines[i]);
    if (l.starts_with("diff --git ") || l.starts_with("new file mode") ||
        l.starts_with("deleted file mode") || l.starts_with("index ")) {
      ++i;
      continue;
    }
    if (!l.starts_with("--- ")) malformed(i + 1, "expected file header");
    if (i + 1 >= lines.size() || !body(lines[i + 1]).starts_with("+++ ")) {
      malformed(i + 2, "expected +++ header");
    }
    FileDiff fd;
    fd.old_path = path_of(l.substr(4), "a/", i + 1);
    fd.new_path = path_of(body(lines[i + 1]).substr(4), "b/", i + 2);
    if (!fd.old_path && !fd.new_path) malformed(i + 1, "both sides are /dev/null");
    if (fd.old_path && fd.new_path && *fd.old_path != *fd.new_path) {
      malformed(i + 1, "renames are not supported");
    }
    i += 2;
    while (i < lines.size() && body(lines[i]).starts_with("@@ ")) {
      std::string_view hl = body(lines[i]);
      auto close = hl.find(" @@", 3);
      if (close == std::string_view::npos) malformed(i + 1, "unterminated hunk header");
      std::string_view ranges = hl.substr(3, close - 3);
      auto sp = ranges.find(' ');
      Hunk h;
      if (sp == std::string_view::npos || ranges[0] != '-' || ranges[sp + 1] != '+' ||
          !parse_range(ranges.substr(1, sp - 1), h.old_start, h.old_count) ||
          !parse_range(ranges.substr(sp + 2), h.new_start, h.new_count)) {
        malformed(i + 1, "bad hunk header");
      }
      if ((h.old_count > 0 && h.old_start == 0) || (h.new_count > 0 && h.new_start == 0)) {
        malformed(i + 1, "bad hunk header");
      }
      ++i;
      std::size_t seen_old = 0, seen_new = 0;
      while (seen_old < h.old_count || seen_new < h.new_count) {
        if (i >= lines.size()) malformed(i, "truncated hunk");
        std::string_view raw = lines[i];
        char tag = raw.empty() ? ' ' : raw[0];
        if (raw == "\n") {
          tag = ' ';
          raw = " \n";
        }
        if (tag != ' ' && tag != '-' && tag != '+') malformed(i + 1, "bad hunk line");
        if (tag != '+') ++seen_old;
        if (tag != '-') ++seen_new;
        if (seen_old > h.old_count || seen_new > h.new_count) {
          malformed(i + 1, "hunk longer than its header");
        }
        h.lines.emplace_back(tag, std::string(raw.substr(1)));
        ++i;
        if (i < lines.size() && lines[i].starts_with("\\")) {
          auto& last = h.lines.back().second;
          if (last.empty() || last.back() != '\n') malformed(i + 1, "stray no-newline marker");
          last.pop_back();
          ++i;
        }
      }
      fd.hunks.push_back(std::move(h));
    }
    if (fd.hunks.empty() && fd.old_path && fd.new_path) malformed(i, "file without hunks");
    files.push_back(std::move(fd));
  }
  return files;
}

std::string diff_file(const std::string& path, const std::optional<std::string>& before,
                      const std::optional<std::string>& after) {
  if (has_nul(before) || has_nul(after)) throw Error(ErrorCode::BinaryFile, path);
  if (before == after) return {};
  FileDiff fd;
  if (before) fd.old_path = path;
  if (after) fd.new_path = path;
  fd.hunks = make_hunks(split_lines(before ? *before : std::string_view{}),
                        split_lines(after ? *after : std::string_view{}));
  return render(fd);
}

Patch make_patch(std::string diff_text, std::string base_snapshot) {
  auto fds = parse_diff(diff_text);
  Patch p;
  std::set<std::string> files;
  for (const auto& fd : fds) {
    if (!files.insert(fd.path()).second) {
      throw Error(ErrorCode::MalformedPatch, fd.path(), "file appears twice");
    }
  }
  p.files.assign(files.begin(), files.end());
  p.patch_id = sha256_hex(diff_text);
  p.diff_text = std::move(diff_text);
  p.base_snapshot = std::move(base_snapshot);
  return p;
}

Patch diff_snapshot(const fs::path& before, const fs::path& after) {
  for (const auto& d : {before, after}) {
    if (!fs::is_directory(d)) throw Error(ErrorCode::IoError, d.string(), "not a directory");
  }
  auto lb = fsutil::list_files(before);
  auto la = fsutil::list_files(after);
  std::set<std::string> all(lb.begin(), lb.end());
  all.insert(la.begin(), la.end());
  std::set<std::string> in_b(lb.begin(), lb.end()), in_a(la.begin(), la.end());
  std::string text;
  for (const auto& p : all) {
    std::optional<std::string> b, a;
    if (in_b.contains(p)) b = fsutil::read_file(before / p);
    if (in_a.contains(p)) a = fsutil::read_file(after / p);
    text += diff_file(p, b, a);
  }
  if (text.empty()) throw Error(ErrorCode::NoChanges, after.string());
  return make_patch(std::move(text), fsutil::tree_hash(before));
}

Patch diff_overlay(const fs::path& root, const fsutil::Overlay& changes,
                   std::optional<std::string> base_snapshot) {
  std::string text;
  for (const auto& [p, content] : changes) {
    std::optional<std::string> b;
    if (fs::exists(root / p)) b = fsutil::read_file(root / p);
    text += diff_file(p, b, content);
  }
  if (text.empty()) throw Error(ErrorCode::NoChanges, root.string());
  return make_patch(std::move(text),
                    base_snapshot ? std::move(*base_snapshot) : fsutil::tree_hash(root));
}

fsutil::Overlay materialize(const fs::path& root, const Patch& patch, bool lenient) {
  fsutil::Overlay out;
  for (const auto& fd : parse_diff(patch.diff_text)) {
    const std::string& p = fd.path();
    bool exists = fs::exists(root / p);
    std::string old;
    if (fd.old_path) {
      if (!exists) throw Error(ErrorCode::HunkRejected, p + "#1", "file missing");
      old = fsutil::read_file(root / p);
    } else if (exists) {
      throw Error(ErrorCode::HunkRejected, p + "#1", "file already exists");
    }
    std::string result = apply_hunks(p, old, fd.hunks, lenient);
    if (fd.new_path) {
      out[p] = std::move(result);
    } else {
      if (!result.empty()) throw Error(ErrorCode::HunkRejected, p + "#1", "deletion leaves content");
      out[p] = std::nullopt;
    }
  }
  return out;
}

namespace {

void write_overlay(const fs::path& root, const fsutil::Overlay& ov) {
  for (const auto& [p, content] : ov) {
    if (content) {
      fsutil::write_file(root / p, *content);
    } else {
      fs::remove(root / p);
    }
  }
}

std::vector<std::string> keys(const fsutil::Overlay& ov) {
  std::vector<std::string> out;
  for (const auto& [p, _] : ov) out.push_back(p);
  return out;
}

}  // namespace

ApplyResult apply_patch(const fs::path& workdir, const Patch& patch, bool lenient) {
  if (!lenient) {
    std::string h = fsutil::tree_hash(workdir);
    if (h != patch.base_snapshot) {
      throw Error(ErrorCode::BaseMismatch, workdir.string(),
                  "tree " + h + " is not base " + patch.base_snapshot);
    }
  }
  auto ov = materialize(workdir, patch, lenient);
  write_overlay(workdir, ov);
  return {fsutil::tree_hash(workdir), keys(ov)};
}

Patch reversed(const Patch& patch, std::string post_snapshot) {
  std::string text;
  for (auto fd : parse_diff(patch.diff_text)) {
    std::swap(fd.old_path, fd.new_path);
    for (auto& h : fd.hunks) {
      std::swap(h.old_start, h.new_start);
      std::swap(h.old_count, h.new_count);
      for (auto& [tag, _] : h.lines) {
        if (tag == '-') tag = '+';
        else if (tag == '+') tag = '-';
      }
    }
    text += render(fd);
  }
  return make_patch(std::move(text), std::move(post_snapshot));
}

ApplyResult revert_patch(const fs::path& workdir, const Patch& patch) {
  Patch inverse = reversed(patch, {});
  fsutil::Overlay ov;
  try {
    ov = materialize(workdir, inverse);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HunkRejected) throw;
    throw Error(ErrorCode::PostStateMismatch, workdir.string(), e.what());
  }
  std::string restored = fsutil::tree_hash(workdir, ov);
  if (restored != patch.base_snapshot) {
    throw Error(ErrorCode::PostStateMismatch, workdir.string(),
                "revert would give " + restored + ", base is " + patch.base_snapshot);
  }
  write_overlay(workdir, ov);
  return {restored, keys(ov)};
}

std::string post_state_hash(const fs::path& root, const Patch& patch) {
  return fsutil::tree_hash(root, materialize(root, patch));
}

namespace {

struct Ranges {
  std::vector<ByteSpan> old_side;
  std::vector<ByteSpan> new_side;
};

std::vector<std::size_t> line_offsets(std::string_view text) {
  std::vector<std::size_t> offs{0};
  for (auto l : split_lines(text)) offs.push_back(offs.back() + l.size());
  return offs;
}

Ranges changed_ranges(const FileDiff& fd, std::string_view before, std::string_view after) {
  auto ob = line_offsets(before);
  auto oa = line_offsets(after);
  auto at = [](const std::vector<std::size_t>& offs, std::size_t line) {
    return offs[std::min(line, offs.size() - 1)];
  };
  Ranges r;
  for (const auto& h : fd.hunks) {
    std::size_t o = h.old_count == 0 ? h.old_start : h.old_start - 1;
    std::size_t n = h.new_count == 0 ? h.new_start : h.new_start - 1;
    for (const auto& [tag, _] : h.lines) {
      if (tag == '-') {
        r.old_side.push_back({at(ob, o), at(ob, o + 1)});
        ++o;
      } else if (tag == '+') {
        r.new_side.push_back({at(oa, n), at(oa, n + 1)});
        // A pure insertion still lands inside whatever encloses it.
        r.old_side.push_back({at(ob, o), at(ob, o)});
        ++n;
      } else {
        ++o, ++n;
      }
    }
  }
  return r;
}

bool touches(const ByteSpan& entity, const ByteSpan& change) {
  if (change.start == change.end) {
    return entity.start < change.start && change.start < entity.end;
  }
  return entity.overlaps(change);
}

}  // namespace

CausalFingerprint extract_identifiers(const Patch& patch, const fs::path& root,
                                      const TemplateRegistry& registry) {
  CausalFingerprint fp;
  fp.files.insert(patch.files.begin(), patch.files.end());
  auto after_state = materialize(root, patch);
  for (const auto& fd : parse_diff(patch.diff_text)) {
    const std::string& p = fd.path();
    if (!resolve_language(p, registry)) continue;
    std::string before = fd.old_path ? fsutil::read_file(root / p) : std::string();
    std::string after = after_state.at(p).value_or(std::string());
    Ranges r = changed_ranges(fd, before, after);
    auto collect = [&](const std::string& text, const std::vector<ByteSpan>& changes,
                       bool must_parse) {
      if (changes.empty()) return;
      FileAnalysis fa = analyze_file(p, text, registry, static_cast<std::uintmax_t>(-1));
      if (fa.status == FileStatus::parse_error) {
        if (must_parse) throw Error(ErrorCode::AnalysisFailed, p, "base state does not parse");
        return;
      }
      for (const auto& e : fa.entities) {
        if (std::any_of(changes.begin(), changes.end(),
                        [&](const ByteSpan& c) { return touches(e.byte_span, c); })) {
          fp.identifiers.insert(e.name);
        }
      }
    };
    if (fd.old_path) collect(before, r.old_side, true);
    if (fd.new_path) collect(after, r.new_side, false);
  }
  return fp;
}

}  // namespace taskforge
