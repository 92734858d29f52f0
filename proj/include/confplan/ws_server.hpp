#pragma once

// Websocket transport for live sessions (Boost.Beast). Each connection gets
// its own Session driven by a dedicated worker thread; socket I/O stays on
// the connection's strand, so planning never blocks message reads. Writes
// (text frames and heartbeat pings) go through one queue.

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "confplan/session.hpp"

namespace confplan {

struct ServerOptions {
  Scenario scenario{};
  SessionOptions session{};
  double ping_seconds{5.0};
};

namespace detail {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

// Counts live worker threads so the server can wait for them on shutdown.
struct WorkerRegistry {
  std::mutex mutex;
  std::condition_variable cv;
  int active{0};
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const ServerOptions& opt, std::shared_ptr<WorkerRegistry> registry)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), opt_(opt), registry_(std::move(registry)) {}

  void start() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->do_accept(); });
  }

  // Thread-safe: stops the worker and closes the socket.
  void shutdown() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->close(); });
  }

 private:
  struct Outbound {
    enum class Kind { Text, Ping, Close } kind{Kind::Text};
    std::string text;
  };

  void do_accept() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    {
      std::lock_guard lock(registry_->mutex);
      ++registry_->active;
    }
    // The thread drops its reference before signalling the registry, so a
    // server waiting on the registry never outlives a connection it owns.
    std::thread([self = shared_from_this(), registry = registry_]() mutable {
      self->worker();
      self.reset();
      {
        std::lock_guard lock(registry->mutex);
        --registry->active;
      }
      registry->cv.notify_all();
    }).detach();
    schedule_ping();
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      stop_worker();
      timer_.cancel();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    {
      std::lock_guard lock(mutex_);
      inbound_.push_back(std::move(text));
    }
    cv_.notify_all();
    do_read();
  }

  void schedule_ping() {
    if (!(opt_.ping_seconds > 0.0)) return;
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(opt_.ping_seconds)));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->enqueue({Outbound::Kind::Ping, {}});
      self->schedule_ping();
    });
  }

  // Strand only.
  void enqueue(Outbound out) {
    if (closed_) return;
    outbound_.push_back(std::move(out));
    if (outbound_.size() == 1) do_write();
  }

  void do_write() {
    auto& front = outbound_.front();
    auto self = shared_from_this();
    if (front.kind == Outbound::Kind::Ping) {
      ws_.async_ping({}, [self](beast::error_code ec) { self->on_write(ec); });
    } else if (front.kind == Outbound::Kind::Close) {
      ws_.async_close(websocket::close_code::internal_error, [self](beast::error_code) { self->close(); });
    } else {
      ws_.async_write(net::buffer(front.text), [self](beast::error_code ec, std::size_t) { self->on_write(ec); });
    }
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      stop_worker();
      close();
      return;
    }
    outbound_.pop_front();
    if (!outbound_.empty()) do_write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).close();
  }

  void stop_worker() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
  }

  // Worker thread: owns the Session.
  void send(const std::vector<WireMessage>& msgs) {
    for (const auto& m : msgs)
      net::post(ws_.get_executor(), [self = shared_from_this(), text = serialize(m)]() mutable {
        self->enqueue({Outbound::Kind::Text, std::move(text)});
      });
  }

  void worker() {
    try {
      Session session(opt_.scenario, opt_.session);
      send(session.greeting());
      auto next_tick = std::chrono::steady_clock::now();
      bool realtime_armed = false;
      while (true) {
        std::unique_lock lock(mutex_);
        if (session.mode() == SessionMode::Realtime) {
          if (!realtime_armed) {
            next_tick = std::chrono::steady_clock::now() + tick_period(session);
            realtime_armed = true;
          }
          cv_.wait_until(lock, next_tick, [&] { return stopping_ || !inbound_.empty(); });
        } else {
          realtime_armed = false;
          cv_.wait(lock, [&] { return stopping_ || !inbound_.empty(); });
        }
        if (stopping_) break;
        if (!inbound_.empty()) {
          std::string text = std::move(inbound_.front());
          inbound_.pop_front();
          lock.unlock();
          const auto before = session.mode();
          send(session.handle_text(text));
          if (session.mode() != before) realtime_armed = false;
          continue;
        }
        lock.unlock();
        if (session.mode() == SessionMode::Realtime && std::chrono::steady_clock::now() >= next_tick) {
          send(session.human_tick());
          next_tick += tick_period(session);
        }
      }
    } catch (const std::exception& e) {
      send({ErrorMsg{std::string("session failed: ") + e.what(), "session"}});
      net::post(ws_.get_executor(), [self = shared_from_this()] { self->enqueue({Outbound::Kind::Close, {}}); });
    }
  }

  static std::chrono::steady_clock::duration tick_period(const Session& s) {
    return std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / s.human_hz()));
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<Outbound> outbound_;
  bool closed_{false};

  const ServerOptions opt_;
  std::shared_ptr<WorkerRegistry> registry_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> inbound_;
  bool stopping_{false};
};

}  // namespace detail

class WsServer {
 public:
  WsServer(const std::string& host, unsigned short port, ServerOptions opt)
      : opt_(std::move(opt)), acceptor_(ioc_), registry_(std::make_shared<detail::WorkerRegistry>()) {
    opt_.scenario.validate();
    opt_.session.validate();
    namespace net = detail::net;
    boost::system::error_code ec;
    const auto address = net::ip::make_address(host, ec);
    if (ec) throw ConfigError("invalid listen address '" + host + "'");
    const detail::tcp::endpoint ep(address, port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep, ec);
    if (ec) throw Error("cannot bind " + host + ":" + std::to_string(port) + ": " + ec.message());
    acceptor_.listen();
    do_accept();
  }

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  ~WsServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  // Serves on the calling thread until stop() or SIGINT/SIGTERM.
  void run() {
    detail::net::signal_set signals(ioc_, SIGINT, SIGTERM);
    signals.async_wait([this](boost::system::error_code ec, int) {
      if (!ec) begin_shutdown();
    });
    ioc_.run();
    wait_for_workers();
  }

  // Serves on a background thread.
  void start() {
    thread_ = std::thread([this] {
      ioc_.run();
      {
        std::lock_guard lock(io_mutex_);
        io_done_ = true;
      }
      io_cv_.notify_all();
    });
  }

  // Waits for the io thread to drain the queued socket closes before
  // stopping it.
  void stop() {
    if (stopped_.exchange(true)) return;
    detail::net::post(ioc_, [this] { begin_shutdown(); });
    if (thread_.joinable()) {
      wait_for_workers();
      {
        std::unique_lock lock(io_mutex_);
        io_cv_.wait_for(lock, std::chrono::seconds(5), [&] { return io_done_; });
      }
      ioc_.stop();
      thread_.join();
    }
  }

 private:
  void begin_shutdown() {
    boost::system::error_code ignored;
    acceptor_.close(ignored);
    for (auto& w : connections_)
      if (auto c = w.lock()) c->shutdown();
  }

  void wait_for_workers() {
    std::unique_lock lock(registry_->mutex);
    registry_->cv.wait_for(lock, std::chrono::seconds(10), [&] { return registry_->active == 0; });
  }

  void do_accept() {
    acceptor_.async_accept(detail::net::make_strand(ioc_), [this](boost::system::error_code ec, detail::tcp::socket s) {
      if (ec) return;
      auto conn = std::make_shared<detail::Connection>(std::move(s), opt_, registry_);
      std::erase_if(connections_, [](const auto& w) { return w.expired(); });
      connections_.push_back(conn);
      conn->start();
      do_accept();
    });
  }

  ServerOptions opt_;
  detail::net::io_context ioc_;
  detail::tcp::acceptor acceptor_;
  std::shared_ptr<detail::WorkerRegistry> registry_;
  std::list<std::weak_ptr<detail::Connection>> connections_;
  std::thread thread_;
  std::mutex io_mutex_;
  std::condition_variable io_cv_;
  bool io_done_{false};
  std::atomic<bool> stopped_{false};
};

}  // namespace confplan
