#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "rlbench/env.hpp"

// Client side of the line-delimited JSON environment protocol. Each request is one
// JSON object on one LF-terminated line carrying a fresh, strictly increasing "id";
// the peer answers with exactly one line echoing that id:
//
//   {"id":1,"cmd":"spec"}                 -> {"id":1,"ok":true,"obs_dim":17,"act_dim":6,
//                                              "act_low":[...],"act_high":[...]}
//   {"id":2,"cmd":"reset","seed":42}      -> {"id":2,"ok":true,"obs":[...]}
//   {"id":3,"cmd":"step","action":[...]}  -> {"id":3,"ok":true,"obs":[...],"reward":-0.5,"done":false}
//   {"id":4,"cmd":"close"}                -> {"id":4,"ok":true}
//
// A failing request is answered with {"id":n,"ok":false,"error":"..."}.

namespace rlbench::bridge {

/// Bidirectional line transport.
class LineChannel
{
public:
  virtual ~LineChannel() = default;
  virtual void        send_line(const std::string &line) = 0;
  // Throws ConnectionError on timeout or end of stream.
  virtual std::string receive_line(int timeout_ms) = 0;
};

/// Line channel over a connected stream socket file descriptor.
class FdLineChannel : public LineChannel
{
public:
  explicit FdLineChannel(int fd)
    : fd_(fd)
  {
  }

  FdLineChannel(const FdLineChannel &)            = delete;
  FdLineChannel &operator=(const FdLineChannel &) = delete;

  ~FdLineChannel() override { close_fd(); }

  void send_line(const std::string &line) override
  {
    std::string const data = line + "\n";
    std::size_t       sent = 0;
    while (sent < data.size())
    {
      ssize_t const n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0)
      {
        if (errno == EINTR)
        {
          continue;
        }
        throw ConnectionError(std::string("bridge: write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string receive_line(int timeout_ms) override
  {
    auto const deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;)
    {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos)
      {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      auto const remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 deadline - std::chrono::steady_clock::now())
                                 .count();
      if (remaining <= 0)
      {
        throw ConnectionError("bridge: timed out after " + std::to_string(timeout_ms) +
                              " ms waiting for a response");
      }
      pollfd pfd{fd_, POLLIN, 0};
      int const rc = ::poll(&pfd, 1, static_cast<int>(remaining));
      if (rc < 0 && errno != EINTR)
      {
        throw ConnectionError(std::string("bridge: poll failed: ") + std::strerror(errno));
      }
      if (rc <= 0)
      {
        continue;
      }
      char          chunk[4096];
      ssize_t const n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n == 0)
      {
        throw ConnectionError("bridge: peer closed the connection");
      }
      if (n < 0)
      {
        if (errno == EINTR)
        {
          continue;
        }
        throw ConnectionError(std::string("bridge: read failed: ") + std::strerror(errno));
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

protected:
  void close_fd()
  {
    if (fd_ >= 0)
    {
      ::close(fd_);
      fd_ = -1;
    }
  }

  [[nodiscard]] int fd() const { return fd_; }

private:
  int         fd_{-1};
  std::string buffer_;
};

/// Launches `/bin/sh -c command` with its stdin/stdout bound to one end of a socket pair.
/// The child's stderr is inherited.
class ProcessChannel : public FdLineChannel
{
public:
  explicit ProcessChannel(const std::string &command)
    : ProcessChannel(spawn(command))
  {
  }

  ~ProcessChannel() override
  {
    ::shutdown(fd(), SHUT_WR);
    close_fd();
    if (pid_ > 0)
    {
      for (int i = 0; i < 100; ++i)
      {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_)
        {
          return;
        }
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

private:
  explicit ProcessChannel(std::pair<int, pid_t> spawned)
    : FdLineChannel(spawned.first)
    , pid_(spawned.second)
  {
  }

  static std::pair<int, pid_t> spawn(const std::string &command)
  {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    {
      throw BridgeUnavailableError(std::string("bridge: socketpair failed: ") + std::strerror(errno));
    }
    pid_t const pid = ::fork();
    if (pid < 0)
    {
      ::close(sv[0]);
      ::close(sv[1]);
      throw BridgeUnavailableError(std::string("bridge: fork failed: ") + std::strerror(errno));
    }
    if (pid == 0)
    {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
      ::_exit(127);
    }
    ::close(sv[1]);
    return {sv[0], pid};
  }

  pid_t pid_{-1};
};

class TcpChannel : public FdLineChannel
{
public:
  TcpChannel(const std::string &host, int port)
    : FdLineChannel(connect_to(host, port))
  {
  }

private:
  static int connect_to(const std::string &host, int port)
  {
    addrinfo hints{};
    hints.ai_family   = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res     = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    {
      throw BridgeUnavailableError("bridge: cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo *p = res; p != nullptr; p = p->ai_next)
    {
      fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
      if (fd < 0)
      {
        continue;
      }
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0)
      {
        break;
      }
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0)
    {
      throw BridgeUnavailableError("bridge: cannot connect to " + host + ":" + std::to_string(port));
    }
    return fd;
  }
};

/// In-process channel: each sent line is handed to `responder`, whose return value
/// (possibly several lines, or none) becomes readable.
class FunctionChannel : public LineChannel
{
public:
  using Responder = std::function<std::string(const std::string &)>;

  explicit FunctionChannel(Responder responder)
    : responder_(std::move(responder))
  {
  }

  void send_line(const std::string &line) override { pending_ += responder_(line); }

  std::string receive_line(int timeout_ms) override
  {
    auto pos = pending_.find('\n');
    if (pos == std::string::npos)
    {
      throw ConnectionError("bridge: timed out after " + std::to_string(timeout_ms) +
                            " ms waiting for a response");
    }
    std::string line = pending_.substr(0, pos);
    pending_.erase(0, pos + 1);
    return line;
  }

private:
  Responder   responder_;
  std::string pending_;
};

enum class Transport
{
  Stdio,
  Tcp
};

struct BridgeSpec
{
  std::string command;
  std::string env_name;
  Transport   transport{Transport::Stdio};
  std::string host{"127.0.0.1"};
  int         port{0};
  int         handshake_timeout_ms{10000};
  int         request_timeout_ms{30000};
};

inline std::vector<double> to_std(const Vec &v) { return {v.data(), v.data() + v.size()}; }

inline Vec json_to_vec(const nlohmann::json &j, const char *field)
{
  if (!j.is_array())
  {
    throw ProtocolError(std::string("bridge: field '") + field + "' is not an array");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    if (!j[i].is_number())
    {
      throw ProtocolError(std::string("bridge: field '") + field + "' has a non-numeric entry");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

/// Synchronous request/response client. One instance drives one remote environment.
class BridgeClient
{
public:
  explicit BridgeClient(const BridgeSpec &spec)
    : spec_(spec)
  {
    try
    {
      if (spec.transport == Transport::Tcp)
      {
        channel_ = std::make_unique<TcpChannel>(spec.host, spec.port);
      }
      else
      {
        std::string cmd = spec.command;
        if (!spec.env_name.empty())
        {
          cmd += " --env " + spec.env_name;
        }
        channel_ = std::make_unique<ProcessChannel>(cmd);
      }
    }
    catch (const ConnectionError &e)
    {
      throw BridgeUnavailableError(e.what());
    }
  }

  BridgeClient(std::unique_ptr<LineChannel> channel, BridgeSpec spec = {})
    : spec_(std::move(spec))
    , channel_(std::move(channel))
  {
  }

  [[nodiscard]] std::int64_t last_id() const { return last_id_; }

  /// Asks the remote side for its spaces and validates them.
  EnvSpec handshake()
  {
    nlohmann::json resp;
    try
    {
      resp = request({{"cmd", "spec"}}, spec_.handshake_timeout_ms);
    }
    catch (const BridgeUnavailableError &)
    {
      throw;
    }
    catch (const ConnectionError &e)
    {
      throw BridgeUnavailableError(std::string("bridge handshake failed: ") + e.what());
    }
    try
    {
      int const obs_dim = resp.at("obs_dim").get<int>();
      int const act_dim = resp.at("act_dim").get<int>();
      if (obs_dim < 1 || act_dim < 1)
      {
        throw ProtocolError("bridge: spec dims must be positive in " + resp.dump());
      }
      Vec const low  = json_to_vec(resp.at("act_low"), "act_low");
      Vec const high = json_to_vec(resp.at("act_high"), "act_high");
      if (low.size() != act_dim || high.size() != act_dim || !low.allFinite() || !high.allFinite())
      {
        throw ProtocolError("bridge: action bounds must be finite with act_dim entries in " +
                            resp.dump());
      }
      EnvSpec out{BoxSpace::unbounded(obs_dim), BoxSpace(low, high),
                  resp.value("max_steps", 1000), resp.value("dt", 0.01)};
      if (resp.contains("obs_low") && resp.contains("obs_high"))
      {
        out.observation_space =
            BoxSpace(json_to_vec(resp["obs_low"], "obs_low"), json_to_vec(resp["obs_high"], "obs_high"));
      }
      out.validate();
      seedable_ = resp.value("seedable", true);
      return out;
    }
    catch (const nlohmann::json::exception &e)
    {
      throw ProtocolError(std::string("bridge: malformed spec response: ") + e.what() + " in " +
                          resp.dump());
    }
    catch (const InputError &e)
    {
      throw ProtocolError(std::string("bridge: invalid spec response: ") + e.what());
    }
  }

  Vec reset(std::uint64_t seed)
  {
    auto const resp = request({{"cmd", "reset"}, {"seed", seed}}, spec_.request_timeout_ms);
    return json_to_vec(field(resp, "obs"), "obs");
  }

  StepResult step(const Vec &action)
  {
    auto const resp = request({{"cmd", "step"}, {"action", to_std(action)}}, spec_.request_timeout_ms);
    StepResult r;
    r.observation = json_to_vec(field(resp, "obs"), "obs");
    try
    {
      r.reward = field(resp, "reward").get<double>();
      bool const done      = field(resp, "done").get<bool>();
      bool const truncated = resp.value("truncated", false);
      r.terminated         = done && !truncated;
      r.done               = done;
      if (resp.contains("info") && resp["info"].is_object())
      {
        for (const auto &[k, v] : resp["info"].items())
        {
          if (v.is_number())
          {
            r.info[k] = v.get<double>();
          }
        }
      }
    }
    catch (const nlohmann::json::exception &e)
    {
      throw ProtocolError(std::string("bridge: malformed step response: ") + e.what());
    }
    return r;
  }

  void close()
  {
    if (!closed_)
    {
      closed_ = true;
      request({{"cmd", "close"}}, spec_.request_timeout_ms);
    }
  }

  [[nodiscard]] bool seedable() const { return seedable_; }

private:
  static const nlohmann::json &field(const nlohmann::json &resp, const char *name)
  {
    if (!resp.contains(name))
    {
      throw ProtocolError(std::string("bridge: response lacks '") + name + "': " + resp.dump());
    }
    return resp[name];
  }

  nlohmann::json request(nlohmann::json msg, int timeout_ms)
  {
    std::int64_t const id = ++last_id_;
    msg["id"]             = id;
    channel_->send_line(msg.dump());
    std::string const line = channel_->receive_line(timeout_ms);
    nlohmann::json    resp;
    try
    {
      resp = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::parse_error &)
    {
      throw ProtocolError("bridge: unparseable response line: " + line);
    }
    if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer())
    {
      throw ProtocolError("bridge: response without an integer id: " + line);
    }
    if (resp["id"].get<std::int64_t>() != id)
    {
      throw ProtocolError("bridge: response id " + resp["id"].dump() + " does not match request id " +
                          std::to_string(id));
    }
    if (!resp.value("ok", false))
    {
      throw RemoteEnvError(resp.value("error", std::string("remote environment reported failure")));
    }
    return resp;
  }

  BridgeSpec                   spec_;
  std::unique_ptr<LineChannel> channel_;
  std::int64_t                 last_id_{0};
  bool                         seedable_{true};
  bool                         closed_{false};
};

/// Environment backed by a remote process. The handshake happens at construction.
class BridgeEnv : public Environment
{
public:
  static std::unique_ptr<BridgeEnv> connect(const BridgeSpec &spec)
  {
    auto client   = std::make_unique<BridgeClient>(spec);
    EnvSpec const s = client->handshake();
    return std::unique_ptr<BridgeEnv>(new BridgeEnv(std::move(client), s, spec.env_name));
  }

  static std::unique_ptr<BridgeEnv> over(std::unique_ptr<LineChannel> channel, BridgeSpec spec = {})
  {
    auto client   = std::make_unique<BridgeClient>(std::move(channel), spec);
    EnvSpec const s = client->handshake();
    return std::unique_ptr<BridgeEnv>(new BridgeEnv(std::move(client), s, spec.env_name));
  }

  ~BridgeEnv() override
  {
    try
    {
      client_->close();
    }
    catch (const Error &)
    {
    }
  }

  [[nodiscard]] std::string name() const override { return "bridge:" + label_; }
  BridgeClient             &client() { return *client_; }

protected:
  Vec        do_reset(std::uint64_t seed) override { return client_->reset(seed); }
  StepResult do_step(const Vec &action) override { return client_->step(action); }

private:
  BridgeEnv(std::unique_ptr<BridgeClient> client, EnvSpec spec, std::string label)
    : Environment(std::move(spec))
    , client_(std::move(client))
    , label_(std::move(label))
  {
  }

  std::unique_ptr<BridgeClient> client_;
  std::string                   label_;
};

}  // namespace rlbench::bridge
