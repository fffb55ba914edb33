#include "ciu/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "ciu/dataset.hpp"

namespace ciu {

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

std::string encode_rows(const Matrix& inputs) {
  std::string text;
  char buf[32];
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto row = inputs.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      text += buf;
    }
    text += '\n';
  }
  return text;
}

// SIGPIPE stays blocked for this thread while writing; a pending one is
// consumed before the old mask comes back.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigemptyset(&pipe_set_);
    sigaddset(&pipe_set_, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &pipe_set_, &old_);
  }
  ~SigpipeGuard() {
    const timespec zero{0, 0};
    while (sigtimedwait(&pipe_set_, nullptr, &zero) > 0) {
    }
    pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }

 private:
  sigset_t pipe_set_{};
  sigset_t old_{};
};

}  // namespace

Matrix run_external_model(const ExternalCommand& command, const Matrix& inputs) {
  if (command.command.empty()) throw CiuError("external model command is empty");
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw CiuError("pipe failed: " + std::string(std::strerror(errno)));
  Fd child_in_r(in_pipe[0]), parent_in_w(in_pipe[1]);
  if (::pipe(out_pipe) != 0) throw CiuError("pipe failed: " + std::string(std::strerror(errno)));
  Fd parent_out_r(out_pipe[0]), child_out_w(out_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) throw CiuError("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(child_in_r.get(), STDIN_FILENO);
    ::dup2(child_out_w.get(), STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  child_in_r.reset();
  child_out_w.reset();
  ::fcntl(parent_in_w.get(), F_SETFL, O_NONBLOCK);
  ::fcntl(parent_out_r.get(), F_SETFL, O_NONBLOCK);

  SigpipeGuard guard;
  const std::string payload = encode_rows(inputs);
  std::size_t written = 0;
  std::string received;
  const auto deadline = std::chrono::steady_clock::now() + command.timeout;
  bool timed_out = false;
  if (payload.empty()) parent_in_w.reset();

  while (parent_out_r.get() >= 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {parent_out_r.get(), POLLIN, 0};
    if (parent_in_w.get() >= 0) fds[nfds++] = {parent_in_w.get(), POLLOUT, 0};
    const int ready = ::poll(fds, nfds, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const auto n = ::write(parent_in_w.get(), payload.data() + written, payload.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if ((n < 0 && errno != EAGAIN) || written == payload.size()) parent_in_w.reset();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[65536];
      const auto n = ::read(parent_out_r.get(), buf, sizeof buf);
      if (n > 0) {
        received.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EAGAIN) {
        parent_out_r.reset();
      }
    }
  }
  parent_in_w.reset();
  parent_out_r.reset();

  int status = 0;
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    throw CiuError("external model timed out after " + std::to_string(command.timeout.count()) +
                   " ms");
  }
  // The child closed stdout; give it the remaining time to exit.
  while (true) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw CiuError("waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw CiuError("external model timed out after " + std::to_string(command.timeout.count()) +
                     " ms");
    }
    ::usleep(1000);
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw CiuError("external model exited with status " +
                   std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  std::istringstream text(received);
  const auto records = read_csv_records(text);
  if (records.size() != inputs.rows())
    throw CiuError("external model returned " + std::to_string(records.size()) + " rows for " +
                   std::to_string(inputs.rows()) + " inputs");
  Matrix out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::vector<double> row;
    for (const auto& field : records[r]) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
      if (used == 0 || used != field.size())
        throw CiuError("external model returned non-numeric output '" + field + "' in row " +
                       std::to_string(r));
      row.push_back(v);
    }
    if (!out.empty() && row.size() != out.cols())
      throw CiuError("external model returned rows of different widths");
    out.append_row(row);
  }
  return out;
}

ExternalModel::ExternalModel(ExternalCommand command, std::size_t inputs, std::size_t outputs)
    : command_(std::move(command)), inputs_(inputs), outputs_(outputs) {
  if (inputs_ == 0 || outputs_ == 0) throw CiuError("external model needs positive arities");
}

std::vector<double> ExternalModel::eval(std::span<const double> x) const {
  Matrix one;
  one.append_row(x);
  const auto out = eval_batch(one);
  return {out.row(0).begin(), out.row(0).end()};
}

Matrix ExternalModel::eval_batch(const Matrix& rows) const {
  if (rows.cols() != inputs_)
    throw CiuError("external model takes " + std::to_string(inputs_) + " inputs, got " +
                   std::to_string(rows.cols()));
  auto out = run_external_model(command_, rows);
  if (out.rows() > 0 && out.cols() != outputs_)
    throw CiuError("external model returned " + std::to_string(out.cols()) + " outputs, expected " +
                   std::to_string(outputs_));
  return out;
}

}  // namespace ciu
