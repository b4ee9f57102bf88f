#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointstream {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered reliable byte stream, write side.
class ByteSink {
 public:
  virtual ~ByteSink() = default;
  /// Writes all bytes or throws TransportError.
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  virtual void close() = 0;
};

/// Ordered reliable byte stream, read side.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  /// Reads up to out.size() bytes, blocking until at least one is available.
  /// Returns 0 at end of stream.
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;
};

/// In-process pipe: one writer, one reader.
class LoopbackPipe {
 public:
  explicit LoopbackPipe(std::size_t capacity_bytes = 0);  // 0 = unbounded

  ByteSink& sink() { return sink_; }
  ByteSource& source() { return source_; }

  std::size_t buffered() const;

 private:
  struct State {
    mutable std::mutex mu;
    std::condition_variable cv;
    std::deque<std::uint8_t> buf;
    std::size_t capacity;
    bool closed = false;
  };

  class Sink final : public ByteSink {
   public:
    explicit Sink(State& s) : s_(s) {}
    void write(std::span<const std::uint8_t> bytes) override;
    void close() override;

   private:
    State& s_;
  };

  class Source final : public ByteSource {
   public:
    explicit Source(State& s) : s_(s) {}
    std::size_t read(std::span<std::uint8_t> out) override;

   private:
    State& s_;
  };

  State state_;
  Sink sink_{state_};
  Source source_{state_};
};

/// Reads from a fixed byte buffer.
class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Appends to a byte vector.
class MemorySink final : public ByteSink {
 public:
  void write(std::span<const std::uint8_t> bytes) override;
  void close() override { closed_ = true; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  bool closed() const { return closed_; }

 private:
  std::vector<std::uint8_t> bytes_;
  bool closed_ = false;
};

/// Writes the stream to a file (a recorded session).
class FileSink final : public ByteSink {
 public:
  explicit FileSink(const std::filesystem::path& path);
  void write(std::span<const std::uint8_t> bytes) override;
  void close() override;

 private:
  std::ofstream out_;
};

/// Replays a recorded stream from a file.
class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  std::ifstream in_;
};

/// TCP stream socket (POSIX).
class TcpStream final : public ByteSink, public ByteSource {
 public:
  static std::unique_ptr<TcpStream> connect(const std::string& host, std::uint16_t port);
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  void write(std::span<const std::uint8_t> bytes) override;
  void close() override;
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  friend class TcpListener;
  explicit TcpStream(int fd) : fd_(fd) {}
  int fd_;
};

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port; see port().
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<TcpStream> accept();

 private:
  int fd_;
  std::uint16_t port_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "tcp://host:port" or "host:port".
Endpoint parse_endpoint(const std::string& text);

}  // namespace pointstream
