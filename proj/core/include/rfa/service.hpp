#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/config.hpp"
#include "rfa/grid.hpp"

namespace rfa {

struct ServiceConfig {
  std::string listen = "127.0.0.1";
  int port = 8080;
  int pool_size = 0;                // concurrent simulations; 0 = cores - 1 (at least 1)
  std::string preset = "breast";
  std::optional<double> v_applied;  // default applied potential
  std::string material_table;       // optional JSON material table file
  std::size_t cache_entries = 64;

  /// Engine config resolved from preset, material table file and v_applied.
  EngineConfig engine() const;
  int resolved_pool_size() const;

  static ServiceConfig load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Request handlers for the REST API, usable without a socket. Up to
/// pool_size simulations run inline in the calling request; requests beyond
/// that are queued and answered with 202 and a poll token.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse health() const;
  HttpResponse list_volumes() const;
  /// Raw container bytes, or JSON {"phantom": {...}, "seed": n} /
  /// {"container_b64": "..."}.
  HttpResponse upload_volume(std::string_view body, std::string_view content_type);
  HttpResponse slice(const std::string& volume_id, const std::map<std::string, std::string>& query) const;
  HttpResponse simulate(std::string_view body);
  HttpResponse plan(std::string_view body);
  HttpResponse job(const std::string& token) const;

  /// Registers labels and returns the content-derived volume id.
  std::string add_volume(LabelVolume labels);

  const ServiceConfig& config() const { return config_; }
  const EngineConfig& engine() const { return engine_; }
  /// Blocks until the queue is empty and no simulation is running.
  void drain();

 private:
  struct CachedResult {
    std::string volume_id;
    std::string payload;
    Mask lesion;
    ScalarVolume temperature;
  };
  struct Job {
    std::string status = "queued";
    HttpResponse response;
  };
  using Task = std::function<HttpResponse()>;

  HttpResponse submit(Task task);
  void worker_loop();
  std::optional<LabelVolume> find_volume(const std::string& id) const;
  std::shared_ptr<const CachedResult> find_result(const std::string& key) const;
  void store_result(const std::string& key, std::shared_ptr<const CachedResult> result);

  ServiceConfig config_;
  EngineConfig engine_;
  int pool_size_;

  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, LabelVolume> volumes_;

  mutable std::mutex cache_mutex_;
  std::map<std::string, std::shared_ptr<const CachedResult>> cache_;
  std::deque<std::string> cache_order_;

  mutable std::mutex pool_mutex_;
  std::condition_variable pool_cv_;
  int active_ = 0;
  bool stopping_ = false;
  std::uint64_t next_token_ = 0;
  std::deque<std::pair<std::string, Task>> queue_;
  std::map<std::string, Job> jobs_;
  std::vector<std::thread> workers_;
};

/// Port already bound by another process.
class PortInUse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// HTTP front end for a Service.
class HttpServer {
 public:
  HttpServer(Service& service, std::string host, int port);
  ~HttpServer();

  /// Throws PortInUse when the address cannot be bound. Port 0 picks a free port.
  void bind();
  int port() const { return port_; }
  /// Serves until stop(); bind() first.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_;
};

}  // namespace rfa
