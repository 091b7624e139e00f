#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <httplib.h>

#include "metabandit/agent_protocol.hpp"
#include "metabandit/errors.hpp"

namespace metabandit {

namespace {

// Child process speaking the line protocol on its stdin/stdout.
class PipeTransport final : public AgentTransport {
 public:
  PipeTransport(std::string command, std::chrono::milliseconds timeout)
      : command_(std::move(command)), timeout_(timeout) {
    // Writes to a dead child must surface as EPIPE, not kill us.
    ::signal(SIGPIPE, SIG_IGN);
  }
  ~PipeTransport() override { shutdown(); }

  std::string exchange(const std::string& request_line) override {
    if (pid_ < 0) start();
    write_all(request_line + "\n");
    return read_line();
  }

  void reset() override { shutdown(); }

 private:
  void start() {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw TransportError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw TransportError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    pid_ = pid;
    buffer_.clear();
  }

  void shutdown() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      // EOF on stdin asks the child to exit; give it a moment before forcing.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
  }

  void write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("write to agent: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw TransportError("agent timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) throw TransportError("agent timed out");
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("read from agent: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("agent closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

class HttpTransport final : public AgentTransport {
 public:
  HttpTransport(std::string host, std::string path, std::chrono::milliseconds timeout)
      : host_(std::move(host)), path_(std::move(path)), timeout_(timeout) {}

  std::string exchange(const std::string& request_line) override {
    if (!client_) {
      client_ = std::make_unique<httplib::Client>(host_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
      client_->set_connection_timeout(secs.count(), usecs.count());
      client_->set_read_timeout(secs.count(), usecs.count());
      client_->set_write_timeout(secs.count(), usecs.count());
      client_->set_keep_alive(true);
      client_->set_tcp_nodelay(true);
    }
    auto res = client_->Post(path_, request_line, "application/json");
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status != 200 && res->status != 400) {
      throw TransportError("HTTP status " + std::to_string(res->status));
    }
    return res->body;
  }

  void reset() override { client_.reset(); }

 private:
  std::string host_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

AgentEndpoint parse_agent_endpoint(std::string_view text) {
  AgentEndpoint ep;
  if (text.substr(0, 4) == "cmd:") {
    ep.kind = AgentEndpoint::Kind::Command;
    ep.command = std::string(text.substr(4));
    if (ep.command.empty()) throw ParseError("empty agent command");
    return ep;
  }
  if (text.substr(0, 5) == "http:") {
    ep.kind = AgentEndpoint::Kind::Http;
    std::string_view url = text.substr(5);
    std::string scheme = "http://";
    if (url.substr(0, 7) == "http://") {
      url.remove_prefix(7);
    } else if (url.substr(0, 8) == "https://") {
      throw ParseError("https agent endpoints are not supported");
    }
    const auto slash = url.find('/');
    const auto authority = url.substr(0, slash);
    if (authority.empty()) throw ParseError("agent URL lacks a host");
    ep.host = scheme + std::string(authority);
    if (slash != std::string_view::npos && slash + 1 < url.size()) ep.path = std::string(url.substr(slash));
    return ep;
  }
  throw ParseError("agent endpoint must start with 'cmd:' or 'http:', got '" + std::string(text) + "'");
}

std::unique_ptr<AgentTransport> make_transport(const AgentEndpoint& endpoint, const RetryPolicy& retry) {
  if (endpoint.kind == AgentEndpoint::Kind::Command) {
    return std::make_unique<PipeTransport>(endpoint.command, retry.timeout);
  }
  return std::make_unique<HttpTransport>(endpoint.host, endpoint.path, retry.timeout);
}

AgentClient::AgentClient(AgentEndpoint endpoint, RetryPolicy retry)
    : transport_(make_transport(endpoint, retry)), retry_(retry) {}

AgentClient::AgentClient(std::unique_ptr<AgentTransport> transport, RetryPolicy retry)
    : transport_(std::move(transport)), retry_(retry) {}

AgentResponse AgentClient::call(const AgentRequest& request) {
  const std::string line = encode_request(request);
  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, retry_.attempts); ++attempt) {
    std::string reply;
    try {
      reply = transport_->exchange(line);
    } catch (const TransportError& e) {
      last_error = e.what();
      transport_->reset();
      continue;
    }
    try {
      return parse_response(decode_response(reply), request.k);
    } catch (const ProtocolError& e) {
      // The agent answered but refused or garbled the record; resending the
      // same request will not help.
      throw TransportError(e.what());
    }
  }
  throw TransportError("agent unreachable after " + std::to_string(retry_.attempts) + " attempts: " + last_error);
}

AgentDecider::AgentDecider(std::unique_ptr<AgentClient> client, std::string label)
    : client_(std::move(client)), label_(std::move(label)) {}

StepChoice AgentDecider::choose(const SummaryState& state, const StepContext& ctx) {
  AgentRequest request;
  request.episode_id = ctx.episode_seed;
  request.step = ctx.step;
  request.k = ctx.k;
  request.prompt = render_prompt(state, ctx.k).text;
  request.state = state;
  StepChoice choice;
  try {
    auto response = client_->call(request);
    if (response.valid) choice.arm = response.arm;
    choice.response = std::move(response.raw_text);
  } catch (const TransportError& e) {
    choice.failure = e.what();
  }
  return choice;
}

void serve_stream(const ScriptedAgent& agent, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handle_request_line(agent, line) << '\n';
    out.flush();
  }
}

struct HttpAgentServer::Impl {
  explicit Impl(const ScriptedAgent& a) : agent(a) {}
  const ScriptedAgent& agent;
  httplib::Server server;
};

HttpAgentServer::HttpAgentServer(const ScriptedAgent& agent) : impl_(std::make_unique<Impl>(agent)) {
  // Idle keep-alive connections hold a worker, and stop() joins the workers.
  impl_->server.set_keep_alive_timeout(1);
  impl_->server.set_tcp_nodelay(true);
  impl_->server.Post("/act", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string reply = handle_request_line(impl_->agent, req.body);
    res.status = reply.rfind("{\"error\"", 0) == 0 ? 400 : 200;
    res.set_content(reply, "application/json");
  });
}

HttpAgentServer::~HttpAgentServer() {
  impl_->server.stop();
}

int HttpAgentServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpAgentServer::serve() {
  impl_->server.listen_after_bind();
}

void HttpAgentServer::stop() {
  impl_->server.stop();
}

}  // namespace metabandit
