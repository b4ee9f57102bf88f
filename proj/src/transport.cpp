#include "pointstream/transport.hpp"

#include "pointstream/errors.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace pointstream {

LoopbackPipe::LoopbackPipe(std::size_t capacity_bytes) { state_.capacity = capacity_bytes; }

std::size_t LoopbackPipe::buffered() const {
  std::lock_guard lock(state_.mu);
  return state_.buf.size();
}

void LoopbackPipe::Sink::write(std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    std::unique_lock lock(s_.mu);
    if (s_.closed) throw TransportError("write to closed loopback pipe");
    if (s_.capacity != 0)
      s_.cv.wait(lock, [&] { return s_.closed || s_.buf.size() < s_.capacity; });
    if (s_.closed) throw TransportError("write to closed loopback pipe");
    const std::size_t room =
        s_.capacity == 0 ? bytes.size() - off : std::min(bytes.size() - off, s_.capacity - s_.buf.size());
    s_.buf.insert(s_.buf.end(), bytes.begin() + off, bytes.begin() + off + room);
    off += room;
    s_.cv.notify_all();
  }
}

void LoopbackPipe::Sink::close() {
  std::lock_guard lock(s_.mu);
  s_.closed = true;
  s_.cv.notify_all();
}

std::size_t LoopbackPipe::Source::read(std::span<std::uint8_t> out) {
  if (out.empty()) return 0;
  std::unique_lock lock(s_.mu);
  s_.cv.wait(lock, [&] { return s_.closed || !s_.buf.empty(); });
  const std::size_t n = std::min(out.size(), s_.buf.size());
  std::copy_n(s_.buf.begin(), n, out.begin());
  s_.buf.erase(s_.buf.begin(), s_.buf.begin() + n);
  s_.cv.notify_all();
  return n;
}

std::size_t MemorySource::read(std::span<std::uint8_t> out) {
  const std::size_t n = std::min(out.size(), bytes_.size() - pos_);
  std::copy_n(bytes_.begin() + pos_, n, out.begin());
  pos_ += n;
  return n;
}

void MemorySink::write(std::span<const std::uint8_t> bytes) {
  if (closed_) throw TransportError("write to closed memory sink");
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

std::unique_ptr<TcpStream> TcpStream::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError(errno_text(("connect to " + host + ":" + service).c_str()));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::unique_ptr<TcpStream>(new TcpStream(fd));
}

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpStream::write(std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    off += static_cast<std::size_t>(n);
  }
}

void TcpStream::close() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

std::size_t TcpStream::read(std::span<std::uint8_t> out) {
  for (;;) {
    const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno != EINTR) throw TransportError(errno_text("recv"));
  }
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0" || host == "*")
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  else if (host == "localhost")
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw TransportError("listen address must be an IPv4 literal: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 1) != 0) {
    const std::string msg = errno_text("bind/listen");
    ::close(fd_);
    throw TransportError(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpStream> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::unique_ptr<TcpStream>(new TcpStream(fd));
    if (errno != EINTR) throw TransportError(errno_text("accept"));
  }
}

Endpoint parse_endpoint(const std::string& text) {
  std::string s = text;
  if (s.rfind("tcp://", 0) == 0) s = s.substr(6);
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 == s.size())
    throw ParameterError("endpoint must look like tcp://host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  std::size_t used = 0;
  unsigned long p = 0;
  try {
    p = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || p > 65535)
    throw ParameterError("bad port in endpoint '" + text + "'");
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

}  // namespace pointstream

namespace pointstream {

FileSink::FileSink(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw TransportError("cannot open " + path.string() + " for writing");
}

void FileSink::write(std::span<const std::uint8_t> bytes) {
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw TransportError("write to recording failed");
}

void FileSink::close() {
  if (out_.is_open()) out_.close();
}

FileSource::FileSource(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw TransportError("cannot open " + path.string());
}

std::size_t FileSource::read(std::span<std::uint8_t> out) {
  in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
  return static_cast<std::size_t>(in_.gcount());
}

}  // namespace pointstream
