#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include <json.hpp>

#include "gms3dqa/error.hpp"
#include "gms3dqa/features.hpp"

namespace gms {

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::Bridge, std::string("write to bridge failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

BridgeExtractor::BridgeExtractor(const std::string& command) {
  // A bridge that exits early must surface as an error, not a SIGPIPE.
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw Error(Errc::Bridge, "pipe() failed");
  pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::Bridge, "fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl(command.c_str(), command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  std::string tmpl = (std::filesystem::temp_directory_path() / "qmm3dqa-bridge-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw Error(Errc::Bridge, "cannot create scratch directory");
  scratch_dir_ = tmpl;

  try {
    auto reply = nlohmann::json::parse(request(R"({"op":"hello"})"), nullptr, false);
    if (reply.is_discarded() || !reply.value("ok", false) || !reply.contains("feature_dim") ||
        !reply["feature_dim"].is_number_integer()) {
      throw Error(Errc::Bridge, "bridge '" + command + "' failed the hello handshake");
    }
    dim_ = reply["feature_dim"].get<int>();
    if (dim_ < 1) throw Error(Errc::Bridge, "bridge advertised feature_dim < 1");
  } catch (const Error& e) {
    shutdown();
    throw Error(Errc::Bridge, "cannot start bridge '" + command + "': " + e.what());
  }
}

BridgeExtractor::~BridgeExtractor() { shutdown(); }

void BridgeExtractor::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  if (!scratch_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(scratch_dir_, ec);
    scratch_dir_.clear();
  }
}

std::string BridgeExtractor::request(const std::string& line) {
  ++requests_;
  write_all(to_child_, line + "\n");
  for (;;) {
    auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return reply;
    }
    char buf[65536];
    ssize_t n = ::read(from_child_, buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(Errc::Bridge, "bridge closed its output");
    read_buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<double> BridgeExtractor::fetch(const RgbImage& image) {
  const auto path = std::filesystem::path(scratch_dir_) / "qmm.png";
  write_png(path, image);
  nlohmann::json req{{"op", "features"}, {"qmm_path", path.string()}};
  auto reply = nlohmann::json::parse(request(req.dump()), nullptr, false);
  if (reply.is_discarded()) throw Error(Errc::Bridge, "malformed bridge response");
  if (!reply.value("ok", false)) throw Error(Errc::Bridge, "bridge error: " + reply.value("error", std::string("?")));
  const auto& f = reply["features"];
  if (!f.is_array() || static_cast<int>(f.size()) != dim_) {
    throw Error(Errc::Bridge, "bridge returned a feature vector of the wrong length");
  }
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& v : f) {
    if (!v.is_number()) throw Error(Errc::Bridge, "non-numeric feature");
    out.push_back(v.get<double>());
    if (!std::isfinite(out.back())) throw Error(Errc::Bridge, "non-finite feature");
  }
  return out;
}

std::vector<double> BridgeExtractor::extract(const RgbImage& image, int /*grid*/) {
  ++invocations_;
  const std::uint64_t key = image_hash(image);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto features = fetch(image);
  cache_.emplace(key, features);
  return features;
}

}  // namespace gms
