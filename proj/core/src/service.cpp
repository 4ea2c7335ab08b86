#include "rfa/service.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <httplib.h>

#include "rfa/codec.hpp"
#include "rfa/dataset.hpp"
#include "rfa/electrode.hpp"
#include "rfa/metrics.hpp"
#include "rfa/simulator.hpp"
#include "rfa/version.hpp"
#include "rfa/volume_io.hpp"

namespace rfa {

namespace {

using nlohmann::json;

HttpResponse json_response(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_response(int status, const std::string& message, const std::string& stage = {}) {
  json body = {{"error", message}};
  if (!stage.empty()) body["stage"] = stage;
  return json_response(status, body);
}

HttpResponse from_error(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNotFound:
      return error_response(404, e.message(), e.stage());
    case ErrorKind::kInvalidArgument:
      return error_response(422, e.message(), e.stage());
    case ErrorKind::kFormat:
      return error_response(400, e.message(), e.stage());
    case ErrorKind::kSolver:
      break;
  }
  return error_response(500, e.message(), e.stage().empty() ? "solver" : e.stage());
}

json parse_body(std::string_view body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::kFormat, "request body must be a JSON object");
  return j;
}

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw invalid_argument(std::string("missing ") + key);
  return j.at(key).get<std::string>();
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

json grid_json(const GridSpec& g) {
  return {{"dims", g.dims},
          {"spacing", {g.spacing.x, g.spacing.y, g.spacing.z}},
          {"origin", {g.origin.x, g.origin.y, g.origin.z}}};
}

// Pose from request JSON; absent potential and tip dimensions come from the
// engine config, and an explicit v_applied override wins over the pose.
ElectrodePose resolve_pose(const json& j, const EngineConfig& engine, const json& overrides) {
  if (!j.is_object()) throw invalid_argument("pose must be a JSON object");
  ElectrodePose pose;
  try {
    pose = j.get<ElectrodePose>();
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("invalid pose: ") + e.what());
  }
  if (!j.contains("tip_length")) pose.tip_length = engine.tip_length;
  if (!j.contains("tip_radius")) pose.tip_radius = engine.tip_radius;
  if (!j.contains("v_applied") || overrides.contains("v_applied")) pose.v_applied = engine.v_applied;
  pose.validate();
  return pose;
}

EngineConfig resolve_engine(const EngineConfig& base, const json& request) {
  if (!request.contains("overrides")) return base;
  return apply_overrides(base, request.at("overrides"));
}

json simulation_payload(const std::string& volume_id, const EngineConfig& engine, const ElectrodePose& pose,
                        const SimulationResult& result, const LabelVolume& labels) {
  json morph = nullptr;
  if (count_nonzero(result.lesion) > 0) morph = morphometry_report(morphometry(result.lesion, section_plane_for(pose.direction)));
  return {{"volume_id", volume_id},
          {"config_hash", hex64(config_hash(engine))},
          {"pose", pose},
          {"summary", summarize(result, labels)},
          {"morphometry", morph},
          {"lesion", base64_encode(encode_volume(result.lesion))},
          {"temperature", base64_encode(encode_volume(result.temperature))}};
}

std::string cache_key(const std::string& volume_id, const ElectrodePose& pose, const EngineConfig& engine) {
  return volume_id + "-" + hex64(fnv1a64(json(pose).dump())) + "-" + hex64(config_hash(engine));
}

}  // namespace

EngineConfig ServiceConfig::engine() const {
  EngineConfig e = EngineConfig::from_preset(preset);
  if (!material_table.empty()) e.table = read_json_file(material_table).get<MaterialTable>();
  if (v_applied) e.v_applied = *v_applied;
  return e;
}

int ServiceConfig::resolved_pool_size() const {
  if (pool_size > 0) return pool_size;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()) - 1);
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<ServiceConfig>();
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("invalid service config: ") + e.what());
  }
}

void to_json(json& j, const ServiceConfig& c) {
  j = {{"listen", c.listen},         {"port", c.port},
       {"pool_size", c.pool_size},   {"preset", c.preset},
       {"material_table", c.material_table}, {"cache_entries", c.cache_entries}};
  j["v_applied"] = c.v_applied ? json(*c.v_applied) : json(nullptr);
}

void from_json(const json& j, ServiceConfig& c) {
  ServiceConfig d;
  d.listen = j.value("listen", d.listen);
  d.port = j.value("port", d.port);
  d.pool_size = j.value("pool_size", d.pool_size);
  d.preset = j.value("preset", d.preset);
  d.material_table = j.value("material_table", d.material_table);
  d.cache_entries = j.value("cache_entries", d.cache_entries);
  if (j.contains("v_applied") && !j.at("v_applied").is_null()) d.v_applied = j.at("v_applied").get<double>();
  if (d.port < 0 || d.port > 65535) throw invalid_argument("port out of range");
  if (d.pool_size < 0) throw invalid_argument("pool_size must be >= 0");
  c = d;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)), engine_(config_.engine()), pool_size_(config_.resolved_pool_size()) {
  for (int w = 0; w < pool_size_; ++w) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(pool_mutex_);
    stopping_ = true;
  }
  pool_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

HttpResponse Service::health() const {
  std::lock_guard lock(pool_mutex_);
  return json_response(200, {{"status", "ok"},
                             {"engine_version", kEngineVersion},
                             {"pool_size", pool_size_},
                             {"active", active_},
                             {"queued", queue_.size()}});
}

HttpResponse Service::list_volumes() const {
  std::shared_lock lock(registry_mutex_);
  json out = json::array();
  for (const auto& [id, labels] : volumes_) {
    json v = grid_json(labels.spec());
    v["id"] = id;
    v["tumor_voxels"] = count_label(labels, Tissue::kTumor);
    out.push_back(v);
  }
  return json_response(200, out);
}

std::string Service::add_volume(LabelVolume labels) {
  validate_labels(labels);
  const std::string id = "vol-" + hex64(fnv1a64(encode_volume(labels)));
  std::unique_lock lock(registry_mutex_);
  volumes_.try_emplace(id, std::move(labels));
  return id;
}

std::optional<LabelVolume> Service::find_volume(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = volumes_.find(id);
  if (it == volumes_.end()) return std::nullopt;
  return it->second;
}

HttpResponse Service::upload_volume(std::string_view body, std::string_view content_type) {
  try {
    LabelVolume labels;
    if (content_type.find("json") != std::string_view::npos) {
      const json j = parse_body(body);
      if (j.contains("container_b64")) {
        labels = decode_u8_volume(base64_decode(j.at("container_b64").get<std::string>()));
      } else if (j.contains("phantom")) {
        const auto& p = j.at("phantom");
        PhantomParams params;
        params.kind = phantom_kind_from_string(p.value("kind", std::string("ball")));
        params.radius_mm = p.value("radius_mm", params.radius_mm);
        if (p.contains("axes_mm")) {
          const auto a = p.at("axes_mm").get<std::vector<double>>();
          if (a.size() != 3) throw invalid_argument("axes_mm must be a 3-vector");
          params.axes_mm = {a[0], a[1], a[2]};
        }
        params.target_volume_mm3 = p.value("target_volume_mm3", params.target_volume_mm3);
        labels = synth_tumor(params, j.value("seed", std::uint64_t{0}));
      } else {
        throw invalid_argument("expected container_b64 or phantom");
      }
    } else {
      labels = decode_u8_volume(body);
    }
    const auto spec = labels.spec();
    const std::size_t tumor = count_label(labels, Tissue::kTumor);
    const std::string id = add_volume(std::move(labels));
    json out = grid_json(spec);
    out["id"] = id;
    out["tumor_voxels"] = tumor;
    return json_response(201, out);
  } catch (const Error& e) {
    return from_error(e);
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  }
}

HttpResponse Service::slice(const std::string& volume_id, const std::map<std::string, std::string>& query) const {
  const auto labels = find_volume(volume_id);
  if (!labels) return error_response(404, "unknown volume " + volume_id);
  const auto get = [&](const std::string& key) -> std::string {
    const auto it = query.find(key);
    return it == query.end() ? std::string{} : it->second;
  };
  const std::string axis_name = get("axis");
  const int axis = axis_name == "x" ? 0 : axis_name == "y" ? 1 : axis_name == "z" ? 2 : -1;
  if (axis < 0) return error_response(400, "axis must be x, y or z");
  int index = 0;
  try {
    std::size_t used = 0;
    const std::string text = get("index");
    index = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    return error_response(400, "index must be an integer");
  }
  const auto& spec = labels->spec();
  if (index < 0 || index >= spec.dims[axis]) return error_response(416, "index out of range");

  std::string field = get("field");
  if (field.empty()) field = "labels";
  std::shared_ptr<const CachedResult> result;
  if (field != "labels") {
    if (field != "temp" && field != "lesion") return error_response(400, "field must be labels, temp or lesion");
    result = find_result(get("result"));
    if (!result || result->volume_id != volume_id) return error_response(404, "unknown result");
  }

  // Rows run along the slower of the two in-plane axes.
  const int col_axis = axis == 0 ? 1 : 0;
  const int row_axis = axis == 2 ? 1 : 2;
  json rows = json::array();
  for (int r = 0; r < spec.dims[row_axis]; ++r) {
    json row = json::array();
    for (int c = 0; c < spec.dims[col_axis]; ++c) {
      Index3 at{};
      at[axis] = index;
      at[row_axis] = r;
      at[col_axis] = c;
      const std::size_t v = spec.index(at[0], at[1], at[2]);
      if (field == "labels")
        row.push_back((*labels)[v]);
      else if (field == "lesion")
        row.push_back(result->lesion[v]);
      else
        row.push_back(result->temperature[v]);
    }
    rows.push_back(std::move(row));
  }
  return json_response(200, {{"volume_id", volume_id},
                             {"axis", axis_name},
                             {"index", index},
                             {"field", field},
                             {"rows", spec.dims[row_axis]},
                             {"cols", spec.dims[col_axis]},
                             {"data", std::move(rows)}});
}

std::shared_ptr<const Service::CachedResult> Service::find_result(const std::string& key) const {
  std::lock_guard lock(cache_mutex_);
  const auto it = cache_.find(key);
  return it == cache_.end() ? nullptr : it->second;
}

void Service::store_result(const std::string& key, std::shared_ptr<const CachedResult> result) {
  std::lock_guard lock(cache_mutex_);
  if (!cache_.emplace(key, std::move(result)).second) return;
  cache_order_.push_back(key);
  while (cache_order_.size() > std::max<std::size_t>(1, config_.cache_entries)) {
    cache_.erase(cache_order_.front());
    cache_order_.pop_front();
  }
}

HttpResponse Service::simulate(std::string_view body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const json request = parse_body(body);
    const std::string volume_id = require_string(request, "volume_id");
    const auto labels = find_volume(volume_id);
    if (!labels) return error_response(404, "unknown volume " + volume_id);
    const EngineConfig engine = resolve_engine(engine_, request);
    if (!request.contains("pose")) throw invalid_argument("missing pose");
    const ElectrodePose pose =
        resolve_pose(request.at("pose"), engine, request.value("overrides", json::object()));
    const std::string key = cache_key(volume_id, pose, engine);

    auto respond = [key, start](const CachedResult& r, bool cached, const json& diagnostics) {
      std::string out = R"({"cached":)" + std::string(cached ? "true" : "false") + R"(,"result_id":")" + key +
                        R"(","wall_ms":)" + json(elapsed_ms(start)).dump() + R"(,"diagnostics":)" +
                        diagnostics.dump() + R"(,"result":)" + r.payload + "}";
      return HttpResponse{200, std::move(out)};
    };
    if (auto hit = find_result(key)) return respond(*hit, true, nullptr);

    return submit([this, labels = *labels, volume_id, engine, pose, key, respond] {
      try {
        if (auto hit = find_result(key)) return respond(*hit, true, nullptr);
        auto req = engine.request(labels, pose);
        auto result = run(req);
        auto cached = std::make_shared<CachedResult>();
        cached->volume_id = volume_id;
        cached->payload = simulation_payload(volume_id, engine, pose, result, labels).dump();
        cached->lesion = std::move(result.lesion);
        cached->temperature = std::move(result.temperature);
        auto response = respond(*cached, false, diagnostics_json(result.diagnostics));
        store_result(key, std::move(cached));
        return response;
      } catch (const Error& e) {
        return from_error(e);
      }
    });
  } catch (const Error& e) {
    return from_error(e);
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  }
}

HttpResponse Service::plan(std::string_view body) {
  try {
    const json request = parse_body(body);
    const std::string volume_id = require_string(request, "volume_id");
    const auto labels = find_volume(volume_id);
    if (!labels) return error_response(404, "unknown volume " + volume_id);
    const EngineConfig engine = resolve_engine(engine_, request);
    const int n = request.value("n_candidates", 8);
    const auto seed = request.value("seed", std::uint64_t{0});
    const int top_k = request.value("top_k", n);
    if (n < 1) throw invalid_argument("invalid count");
    if (top_k < 1) throw invalid_argument("top_k must be >= 1");

    return submit([labels = *labels, volume_id, engine, n, seed, top_k] {
      try {
        const auto poses = sample_placements(labels, n, seed, {engine.tip_length, engine.tip_radius, engine.v_applied});
        struct Ranked {
          int candidate;
          ElectrodePose pose;
          ResultSummary summary;
        };
        std::vector<Ranked> ranked;
        for (int c = 0; c < n; ++c) {
          const auto result = run(engine.request(labels, poses[static_cast<std::size_t>(c)]));
          ranked.push_back({c, poses[static_cast<std::size_t>(c)], summarize(result, labels)});
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
          if (a.summary.tumor_coverage_dice != b.summary.tumor_coverage_dice)
            return a.summary.tumor_coverage_dice > b.summary.tumor_coverage_dice;
          return a.summary.healthy_ablated_mm3 < b.summary.healthy_ablated_mm3;
        });
        json list = json::array();
        for (std::size_t r = 0; r < ranked.size() && static_cast<int>(r) < top_k; ++r)
          list.push_back({{"rank", r + 1},
                          {"candidate", ranked[r].candidate},
                          {"pose", ranked[r].pose},
                          {"summary", ranked[r].summary}});
        return json_response(200, {{"volume_id", volume_id},
                                   {"seed", seed},
                                   {"n_candidates", n},
                                   {"config_hash", hex64(config_hash(engine))},
                                   {"ranked", std::move(list)}});
      } catch (const Error& e) {
        return from_error(e);
      }
    });
  } catch (const Error& e) {
    return from_error(e);
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  }
}

HttpResponse Service::submit(Task task) {
  std::unique_lock lock(pool_mutex_);
  if (active_ < pool_size_ && queue_.empty()) {
    ++active_;
    lock.unlock();
    HttpResponse response;
    try {
      response = task();
    } catch (...) {
      lock.lock();
      --active_;
      lock.unlock();
      pool_cv_.notify_all();
      throw;
    }
    lock.lock();
    --active_;
    lock.unlock();
    pool_cv_.notify_all();
    return response;
  }
  const std::string token = "job-" + std::to_string(++next_token_);
  jobs_[token] = Job{};
  queue_.emplace_back(token, std::move(task));
  lock.unlock();
  pool_cv_.notify_all();
  return json_response(202, {{"token", token}, {"status", "queued"}});
}

void Service::worker_loop() {
  std::unique_lock lock(pool_mutex_);
  for (;;) {
    pool_cv_.wait(lock, [&] { return stopping_ || (!queue_.empty() && active_ < pool_size_); });
    if (stopping_) return;
    auto [token, task] = std::move(queue_.front());
    queue_.pop_front();
    ++active_;
    jobs_[token].status = "running";
    lock.unlock();
    HttpResponse response;
    try {
      response = task();
    } catch (const std::exception& e) {
      response = error_response(500, e.what());
    }
    lock.lock();
    --active_;
    jobs_[token] = Job{"done", std::move(response)};
    pool_cv_.notify_all();
  }
}

HttpResponse Service::job(const std::string& token) const {
  std::lock_guard lock(pool_mutex_);
  const auto it = jobs_.find(token);
  if (it == jobs_.end()) return error_response(404, "unknown job " + token);
  if (it->second.status != "done") return json_response(202, {{"token", token}, {"status", it->second.status}});
  return it->second.response;
}

void Service::drain() {
  std::unique_lock lock(pool_mutex_);
  pool_cv_.wait(lock, [&] { return queue_.empty() && active_ == 0; });
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)), port_(port) {
  auto& s = impl_->server;
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  s.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
  s.Get("/volumes",
        [&service, send](const httplib::Request&, httplib::Response& res) { send(res, service.list_volumes()); });
  s.Post("/volumes", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.upload_volume(req.body, req.get_header_value("Content-Type")));
  });
  s.Get(R"(/volumes/([^/]+)/slice)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    send(res, service.slice(req.matches[1], query));
  });
  s.Post("/simulate", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.simulate(req.body));
  });
  s.Post("/plan",
         [&service, send](const httplib::Request& req, httplib::Response& res) { send(res, service.plan(req.body)); });
  s.Get(R"(/jobs/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.job(req.matches[1]));
  });
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::bind() {
  auto& s = impl_->server;
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port_ == 0) {
    port_ = s.bind_to_any_port(host_);
    if (port_ <= 0) throw PortInUse("cannot bind " + host_);
  } else if (!s.bind_to_port(host_, port_)) {
    throw PortInUse("port " + std::to_string(port_) + " already in use on " + host_);
  }
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace rfa
