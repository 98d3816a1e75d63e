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

#include "taskforge/sandbox/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <set>

#include "taskforge/common/error.hpp"

namespace taskforge {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxStreamBytes = 8u << 20;

std::string key_of(const SandboxSpec& spec) {
  return spec.substrate_ref + "\n" + spec.repo_snapshot;
}

}  // namespace

void validate_spec(const SandboxSpec& spec) {
  if (!(spec.cpu_time_limit > 0) || !(spec.wall_timeout > 0) || spec.memory_limit == 0) {
    throw Error(ErrorCode::ConfigError, "SandboxSpec", "limits must be positive");
  }
  if (spec.substrate_ref.empty()) {
    throw Error(ErrorCode::ConfigError, "SandboxSpec", "empty substrate_ref");
  }
}

struct Sandbox::State {
  std::uint64_t id = 0;
  fs::path root;
  SandboxSpec spec;
  std::shared_ptr<const void> pristine;
  std::shared_ptr<std::atomic<bool>> revoked;
};

struct SandboxPool::Pristine {
  fs::path root;
  std::string hash;
  std::map<std::string, std::string> manifest;
  std::set<std::string> dirs;
};

Sandbox::Sandbox(SandboxPool* pool, std::unique_ptr<State> state, bool warm)
    : pool_(pool), state_(std::move(state)), warm_(warm) {}

Sandbox::Sandbox(Sandbox&& other) noexcept
    : pool_(other.pool_), state_(std::move(other.state_)), warm_(other.warm_) {
  other.pool_ = nullptr;
}

Sandbox& Sandbox::operator=(Sandbox&& other) noexcept {
  if (this != &other) {
    if (state_ && pool_) pool_->release(std::move(*this));
    pool_ = other.pool_;
    state_ = std::move(other.state_);
    warm_ = other.warm_;
    other.pool_ = nullptr;
  }
  return *this;
}

Sandbox::~Sandbox() {
  if (state_ && pool_) pool_->release(std::move(*this));
}

const fs::path& Sandbox::root() const { return state_->root; }
fs::path Sandbox::artifact_dir() const {
  return state_->root / fsutil::kArtifactRoot / "artifacts";
}
const SandboxSpec& Sandbox::spec() const { return state_->spec; }

SandboxPool::SandboxPool(PoolOptions options) : options_(std::move(options)) {
  if (options_.max_size == 0) throw Error(ErrorCode::ConfigError, "pool", "max_size must be >= 1");
  revoked_ = std::make_shared<std::atomic<bool>>(false);
}

SandboxPool::~SandboxPool() { shutdown(); }

void SandboxPool::set_reset_hook(std::function<void(const fs::path&)> hook) {
  std::lock_guard lk(mu_);
  reset_hook_ = std::move(hook);
}

PoolStats SandboxPool::stats() const {
  std::lock_guard lk(mu_);
  PoolStats s = stats_;
  s.live = live_;
  return s;
}

std::shared_ptr<const SandboxPool::Pristine> SandboxPool::pristine_for(const SandboxSpec& spec) {
  const std::string key = key_of(spec);
  {
    std::lock_guard lk(pristine_mu_);
    auto it = pristine_.find(key);
    if (it != pristine_.end()) return it->second;
  }
  fs::path root(spec.substrate_ref);
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::SnapshotUnavailable, spec.substrate_ref, "substrate directory missing");
  }
  auto p = std::make_shared<Pristine>();
  p->root = root;
  p->hash = fsutil::tree_hash(root);
  if (p->hash != spec.repo_snapshot) {
    throw Error(ErrorCode::SnapshotUnavailable, spec.substrate_ref,
                "substrate hashes to " + p->hash + ", expected " + spec.repo_snapshot);
  }
  p->manifest = fsutil::manifest(root);
  for (const auto& [path, _] : p->manifest) {
    for (fs::path d = fs::path(path).parent_path(); !d.empty(); d = d.parent_path()) {
      p->dirs.insert(d.generic_string());
    }
  }
  std::lock_guard lk(pristine_mu_);
  return pristine_.emplace(key, std::move(p)).first->second;
}

std::unique_ptr<Sandbox::State> SandboxPool::create(const SandboxSpec& spec) {
  validate_spec(spec);
  auto pristine = pristine_for(spec);
  auto st = std::make_unique<Sandbox::State>();
  {
    std::lock_guard lk(mu_);
    st->id = next_id_++;
  }
  st->root = options_.work_root /
             ("taskforge-sbx-" + std::to_string(::getpid()) + "-" + std::to_string(st->id));
  st->spec = spec;
  st->pristine = pristine;
  st->revoked = revoked_;
  std::error_code ec;
  fs::remove_all(st->root, ec);
  try {
    fsutil::copy_tree(pristine->root, st->root);
  } catch (...) {
    fs::remove_all(st->root, ec);
    throw;
  }
  if (fsutil::tree_hash(st->root) != spec.repo_snapshot) {
    fs::remove_all(st->root, ec);
    throw Error(ErrorCode::SnapshotUnavailable, spec.substrate_ref, "copy does not match snapshot");
  }
  return st;
}

void SandboxPool::destroy(std::unique_ptr<Sandbox::State> state) {
  if (!state) return;
  std::error_code ec;
  fs::remove_all(state->root, ec);
  std::lock_guard lk(mu_);
  ++stats_.destroyed;
  --live_;
  cv_.notify_all();
}

bool SandboxPool::reset(Sandbox::State& st) {
  auto pristine = std::static_pointer_cast<const Pristine>(st.pristine);
  std::error_code ec;
  try {
    fs::remove_all(st.root / fsutil::kArtifactRoot, ec);
    auto current = fsutil::manifest(st.root);
    for (const auto& [path, hash] : current) {
      if (!pristine->manifest.contains(path)) fs::remove(st.root / path);
    }
    for (const auto& [path, hash] : pristine->manifest) {
      auto it = current.find(path);
      if (it != current.end() && it->second == hash) continue;
      fs::path dst = st.root / path;
      fs::create_directories(dst.parent_path());
      fs::remove(dst, ec);
      fs::copy(pristine->root / path, dst, fs::copy_options::copy_symlinks);
    }
    // Directories created during the run, deepest first.
    std::vector<fs::path> extra;
    for (auto it = fs::recursive_directory_iterator(st.root); it != fs::end(it); ++it) {
      if (!it->is_directory(ec) || it->is_symlink(ec)) continue;
      std::string rel = fs::relative(it->path(), st.root).generic_string();
      if (fsutil::is_excluded_dir_name(it->path().filename().string())) {
        it.disable_recursion_pending();
        continue;
      }
      if (!pristine->dirs.contains(rel)) extra.push_back(it->path());
    }
    std::sort(extra.begin(), extra.end(), std::greater<>());
    for (const auto& d : extra) fs::remove_all(d, ec);
  } catch (const std::exception&) {
    return false;
  }
  std::function<void(const fs::path&)> hook;
  {
    std::lock_guard lk(mu_);
    hook = reset_hook_;
  }
  if (hook) hook(st.root);
  try {
    return fsutil::tree_hash(st.root) == st.spec.repo_snapshot;
  } catch (const std::exception&) {
    return false;
  }
}

Sandbox SandboxPool::lease(const SandboxSpec& spec) {
  validate_spec(spec);
  const std::string key = key_of(spec);
  std::unique_lock lk(mu_);
  for (;;) {
    if (shut_down_) throw Error(ErrorCode::PoolShutDown, key);
    auto it = idle_.find(key);
    if (it != idle_.end()) {
      auto st = std::move(it->second);
      idle_.erase(it);
      st->spec = spec;
      ++stats_.warm_reuses;
      return Sandbox(this, std::move(st), true);
    }
    if (live_ < options_.max_size) {
      ++live_;
      lk.unlock();
      std::unique_ptr<Sandbox::State> st;
      try {
        st = create(spec);
      } catch (...) {
        lk.lock();
        --live_;
        cv_.notify_all();
        throw;
      }
      lk.lock();
      ++stats_.cold_creations;
      return Sandbox(this, std::move(st), false);
    }
    if (!idle_.empty()) {
      // Full, but an idle sandbox of another snapshot can make room.
      auto victim = std::move(idle_.begin()->second);
      idle_.erase(idle_.begin());
      lk.unlock();
      destroy(std::move(victim));
      lk.lock();
      continue;
    }
    if (!options_.blocking) {
      throw Error(ErrorCode::PoolExhausted, key,
                  "all " + std::to_string(options_.max_size) + " sandboxes leased");
    }
    cv_.wait(lk);
  }
}

void SandboxPool::release(Sandbox&& sandbox) {
  auto st = std::move(sandbox.state_);
  sandbox.pool_ = nullptr;
  if (!st) return;
  bool closed;
  {
    std::lock_guard lk(mu_);
    closed = shut_down_;
  }
  if (closed || !reset(*st)) {
    destroy(std::move(st));
    return;
  }
  std::lock_guard lk(mu_);
  if (shut_down_) {
    std::error_code ec;
    fs::remove_all(st->root, ec);
    ++stats_.destroyed;
    --live_;
  } else {
    idle_.emplace(key_of(st->spec), std::move(st));
  }
  cv_.notify_all();
}

void SandboxPool::shutdown() {
  std::multimap<std::string, std::unique_ptr<Sandbox::State>> idle;
  {
    std::lock_guard lk(mu_);
    if (shut_down_) return;
    shut_down_ = true;
    revoked_->store(true);
    idle.swap(idle_);
    cv_.notify_all();
  }
  for (auto& [_, st] : idle) destroy(std::move(st));
}

namespace {

std::string errno_name(int e) {
  switch (e) {
    case ENOENT: return "ENOENT";
    case EACCES: return "EACCES";
    case ENOEXEC: return "ENOEXEC";
    case EAGAIN: return "EAGAIN";
    case ENOMEM: return "ENOMEM";
    case ENOTDIR: return "ENOTDIR";
    default: return "errno " + std::to_string(e);
  }
}

// PATH lookup done before fork so the child only calls exec.
std::optional<std::string> resolve_program(const std::string& prog, const std::string& path_var) {
  if (prog.find('/') != std::string::npos) return prog;
  std::size_t pos = 0;
  while (pos <= path_var.size()) {
    std::size_t colon = path_var.find(':', pos);
    std::string dir = path_var.substr(pos, colon == std::string::npos ? colon : colon - pos);
    if (dir.empty()) dir = ".";
    std::string cand = dir + "/" + prog;
    struct stat sb {};
    if (::stat(cand.c_str(), &sb) == 0 && S_ISREG(sb.st_mode) && ::access(cand.c_str(), X_OK) == 0) {
      return cand;
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  return std::nullopt;
}

void append_capped(std::string& dst, const char* data, std::size_t n) {
  if (dst.size() >= kMaxStreamBytes) return;
  dst.append(data, std::min(n, kMaxStreamBytes - dst.size()));
}

}  // namespace

ExecutionResult run(Sandbox& sandbox, const std::vector<std::string>& argv,
                    const std::string& working_dir) {
  if (!sandbox.valid()) throw Error(ErrorCode::SandboxRevoked, "sandbox", "not leased");
  const auto& st = *sandbox.state_;
  if (st.revoked->load()) throw Error(ErrorCode::SandboxRevoked, st.root.string(), "pool shut down");
  if (argv.empty()) throw Error(ErrorCode::SpawnFailed, "argv", "empty command");
  const SandboxSpec& spec = st.spec;

  fs::path art = sandbox.artifact_dir();
  fs::path tmp = st.root / fsutil::kArtifactRoot / "tmp";
  std::error_code ec;
  fs::remove_all(art, ec);
  fs::create_directories(art);
  fs::create_directories(tmp);
  fs::path cwd = (st.root / working_dir).lexically_normal();
  if (!fs::is_directory(cwd)) throw Error(ErrorCode::SpawnFailed, cwd.string(), "ENOTDIR");

  std::map<std::string, std::string> env;
  const char* host_path = ::getenv("PATH");
  env["PATH"] = host_path ? host_path : "/usr/local/bin:/usr/bin:/bin";
  env["HOME"] = st.root.string();
  env["TMPDIR"] = tmp.string();
  env["LANG"] = "C.UTF-8";
  env["TASKFORGE_ARTIFACT_DIR"] = art.string();
  for (const auto& [k, v] : spec.env_vars) env[k] = v;

  auto prog = resolve_program(argv[0], env["PATH"]);
  if (!prog) throw Error(ErrorCode::SpawnFailed, argv[0], "ENOENT");

  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp, args;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_copy = argv;
  for (auto& s : argv_copy) args.push_back(s.data());
  args.push_back(nullptr);
  std::string cwd_s = cwd.string();

  int out_p[2], err_p[2], exec_p[2];
  if (::pipe2(out_p, O_CLOEXEC) || ::pipe2(err_p, O_CLOEXEC) || ::pipe2(exec_p, O_CLOEXEC)) {
    throw Error(ErrorCode::SpawnFailed, argv[0], errno_name(errno));
  }
  int devnull = ::open("/dev/null", O_RDONLY | O_CLOEXEC);

  struct rlimit cpu {};
  cpu.rlim_cur = static_cast<rlim_t>(std::ceil(spec.cpu_time_limit));
  cpu.rlim_max = cpu.rlim_cur + 1;
  struct rlimit mem {};
  mem.rlim_cur = mem.rlim_max = static_cast<rlim_t>(spec.memory_limit);

  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    int e = errno;
    for (int fd : {out_p[0], out_p[1], err_p[0], err_p[1], exec_p[0], exec_p[1], devnull}) ::close(fd);
    throw Error(ErrorCode::SpawnFailed, argv[0], errno_name(e));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (devnull >= 0) ::dup2(devnull, 0);
    ::dup2(out_p[1], 1);
    ::dup2(err_p[1], 2);
    int e = 0;
    if (::chdir(cwd_s.c_str()) != 0) e = errno;
    if (!e) {
      ::setrlimit(RLIMIT_CPU, &cpu);
      ::setrlimit(RLIMIT_AS, &mem);
      ::execve(prog->c_str(), args.data(), envp.data());
      e = errno;
    }
    ssize_t w = ::write(exec_p[1], &e, sizeof e);
    (void)w;
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(out_p[1]);
  ::close(err_p[1]);
  ::close(exec_p[1]);
  if (devnull >= 0) ::close(devnull);

  int child_errno = 0;
  ssize_t got = ::read(exec_p[0], &child_errno, sizeof child_errno);
  ::close(exec_p[0]);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    ::close(out_p[0]);
    ::close(err_p[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw Error(ErrorCode::SpawnFailed, argv[0], errno_name(child_errno));
  }

  ExecutionResult res;
  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(spec.wall_timeout));
  struct pollfd fds[2] = {{out_p[0], POLLIN, 0}, {err_p[0], POLLIN, 0}};
  std::string* sinks[2] = {&res.stdout_text, &res.stderr_text};
  int open_fds = 2;
  char buf[65536];
  auto drain = [&](int timeout_ms) {
    while (open_fds > 0) {
      int n = ::poll(fds, 2, timeout_ms);
      if (n <= 0) break;
      for (int i = 0; i < 2; ++i) {
        if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
        ssize_t r = ::read(fds[i].fd, buf, sizeof buf);
        if (r > 0) {
          append_capped(*sinks[i], buf, static_cast<std::size_t>(r));
        } else if (r == 0 || (errno != EINTR && errno != EAGAIN)) {
          ::close(fds[i].fd);
          fds[i].fd = -1;
          --open_fds;
        }
      }
    }
  };

  int status = 0;
  struct rusage ru {};
  bool reaped = false;
  while (!reaped) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      res.timed_out = true;
      ::kill(-pid, SIGKILL);
      ::wait4(pid, &status, 0, &ru);
      reaped = true;
      break;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int slice = static_cast<int>(std::min<long long>(std::max<long long>(left, 1), 50));
    if (open_fds > 0) {
      drain(slice);
    } else {
      ::usleep(static_cast<useconds_t>(slice) * 1000);
    }
    pid_t w = ::wait4(pid, &status, WNOHANG, &ru);
    if (w == pid) reaped = true;
  }
  // Anything the command left running in its group goes too.
  ::kill(-pid, SIGKILL);
  drain(20);
  for (auto& f : fds) {
    if (f.fd >= 0) ::close(f.fd);
  }
  res.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!res.timed_out) {
    if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) res.term_signal = WTERMSIG(status);
  }
  res.peak_memory = static_cast<std::uint64_t>(ru.ru_maxrss) * 1024u;

  if (fs::is_directory(art)) {
    for (const auto& entry : fs::recursive_directory_iterator(art)) {
      if (!entry.is_regular_file()) continue;
      res.artifacts[fs::relative(entry.path(), art).generic_string()] =
          fsutil::read_file(entry.path());
    }
  }
  return res;
}

ExecutionResult with_candidate(SandboxPool& pool, const SandboxSpec& spec, const Patch* patch,
                               const std::vector<std::string>& argv, int retries) {
  std::vector<const Patch*> patches;
  if (patch) patches.push_back(patch);
  return with_patches(pool, spec, patches, argv, retries);
}

ExecutionResult with_patches(SandboxPool& pool, const SandboxSpec& spec,
                             const std::vector<const Patch*>& patches,
                             const std::vector<std::string>& argv, int retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      Sandbox sb = pool.lease(spec);
      for (const Patch* p : patches) apply_patch(sb.root(), *p);
      ExecutionResult r = run(sb, argv);
      pool.release(std::move(sb));
      return r;
    } catch (const Error& e) {
      bool transient =
          (e.code() == ErrorCode::SpawnFailed &&
           (e.detail() == "EAGAIN" || e.detail() == "ENOMEM")) ||
          e.code() == ErrorCode::IoError;
      if (!transient || attempt >= retries) throw;
    }
  }
}

}  // namespace taskforge
