#include "muses/log.hpp"

#include <mutex>
#include <string>

#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "log_detail.hpp"
#include "muses/error.hpp"

namespace muses {

namespace {

class ObserverSink final : public spdlog::sinks::base_sink<std::mutex> {
 public:
  void set(std::function<void(std::string_view)> f) {
    std::lock_guard lock(base_sink<std::mutex>::mutex_);
    observer_ = std::move(f);
  }

 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    if (!observer_) return;
    spdlog::memory_buf_t buf;
    formatter_->format(msg, buf);
    observer_(std::string_view(buf.data(), buf.size()));
  }
  void flush_() override {}

 private:
  std::function<void(std::string_view)> observer_;
};

struct State {
  std::shared_ptr<ObserverSink> observer = std::make_shared<ObserverSink>();
  std::shared_ptr<spdlog::logger> logger;

  State() {
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    logger = std::make_shared<spdlog::logger>("muses", spdlog::sinks_init_list{console, observer});
    logger->set_level(spdlog::level::warn);
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

namespace detail {
spdlog::logger& log() { return *state().logger; }
}  // namespace detail

void set_log_level(std::string_view level) {
  auto lvl = spdlog::level::from_str(std::string(level));
  if (lvl == spdlog::level::off && level != "off") {
    throw Error(Errc::ConfigError, "unknown log level '" + std::string(level) + "'");
  }
  state().logger->set_level(lvl);
}

void set_log_observer(std::function<void(std::string_view)> observer) { state().observer->set(std::move(observer)); }

}  // namespace muses
