#include "beats/recorder/control_api.hpp"

#include <charconv>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "beats/common/error.hpp"

namespace beats::recorder {

using nlohmann::json;

namespace {

json event_json(const StimulusEvent& e) {
  json j = {{"id", e.id}, {"class", e.label}, {"t_utc_us", e.t_utc_us}, {"revoked", e.revoked}};
  j["intensity"] = e.intensity ? json(*e.intensity) : json(nullptr);
  return j;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidState: return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig: return 400;
    case ErrorCode::StorageFull: return 507;
    default: return 500;
  }
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return j;
}

// Runs a verb and maps beats errors onto HTTP statuses.
template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, "InvalidArgument", e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "Internal", e.what());
  }
}

bool flag(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  const auto v = req.get_param_value(key);
  return v == "1" || v == "true" || v == "on";
}

double number(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw Error(ErrorCode::InvalidArgument, std::string("bad number for ") + key + ": " + v);
  return out;
}

std::vector<std::size_t> channel_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size())
      throw Error(ErrorCode::InvalidArgument, "bad channel index: " + item);
    out.push_back(v);
  }
  return out;
}

}  // namespace

struct ControlServer::Impl {
  httplib::Server server;
};

ControlServer::ControlServer(Recorder& recorder, Endpoint endpoint)
    : impl_(std::make_unique<Impl>()), recorder_(recorder), endpoint_(std::move(endpoint)) {
  auto& srv = impl_->server;
  Recorder& rec = recorder_;

  srv.Get("/status", [&rec](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { res.set_content(rec.session().status().to_json(), "application/json"); });
  });

  srv.Post("/session/start", [&rec](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      rec.session().begin();
      reply(res, {{"state", to_string(rec.session().state())}});
    });
  });

  srv.Post("/session/stop", [&rec](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const auto r = rec.stop();
      reply(res, {{"state", "closed"}, {"session_file", r.path}, {"header", json::parse(r.header.to_json())}});
    });
  });

  srv.Post("/save", [&rec](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("enabled") || !body["enabled"].is_boolean())
        throw Error(ErrorCode::InvalidArgument, "expected {\"enabled\": bool}");
      rec.session().set_save_enabled(body["enabled"].get<bool>());
      reply(res, {{"save_enabled", body["enabled"]}});
    });
  });

  srv.Post("/stimulus", [&rec](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("class") || !body["class"].is_string())
        throw Error(ErrorCode::InvalidArgument, "expected {\"class\": string}");
      std::optional<int> intensity;
      if (body.contains("intensity") && !body["intensity"].is_null()) {
        if (!body["intensity"].is_number_integer()) throw Error(ErrorCode::InvalidArgument, "intensity must be an integer");
        intensity = body["intensity"].get<int>();
      }
      reply(res, event_json(rec.session().record_stimulus(body["class"].get<std::string>(), intensity)));
    });
  });

  srv.Post("/undo", [&rec](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const auto e = rec.session().undo_last();
      reply(res, {{"revoked", e ? event_json(*e) : json(nullptr)}});
    });
  });

  srv.Get("/events", [&rec](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json arr = json::array();
      for (const auto& e : rec.session().events()) arr.push_back(event_json(e));
      reply(res, arr);
    });
  });

  srv.Get("/waveform", [&rec](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      WaveformOptions opts;
      if (req.has_param("channels")) opts.channels = channel_list(req.get_param_value("channels"));
      opts.max_points_per_s = number(req, "max_points", kMaxPointsPerSecond);
      opts.filter = flag(req, "filter");
      opts.mains_hz = number(req, "mains", 50.0);
      opts.detrend = flag(req, "detrend");
      opts.batch_ms = number(req, "batch_ms", opts.batch_ms);

      // a console may connect before the engine; give the stream a moment to appear
      std::shared_ptr<WaveformSubscription> sub;
      const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
      for (;;) {
        try {
          sub = rec.session().subscribe(opts);
          break;
        } catch (const Error& e) {
          const auto s = rec.session().state();
          if (e.code() != ErrorCode::InvalidState || s == SessionState::Closed || s == SessionState::Finalizing ||
              std::chrono::steady_clock::now() > deadline)
            throw;
          std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
      }
      Session* session = &rec.session();
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [sub](std::size_t, httplib::DataSink& sink) {
            if (auto b = sub->pop_for(std::chrono::milliseconds(100))) {
              const std::string line = b->to_json() + "\n";
              return sink.write(line.data(), line.size());
            }
            if (sub->closed()) sink.done();
            return true;
          },
          [sub, session](bool) { session->unsubscribe(sub->id()); });
    });
  });
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::start() {
  auto& srv = impl_->server;
  if (endpoint_.port == 0) {
    const int p = srv.bind_to_any_port(endpoint_.host);
    if (p <= 0) throw Error(ErrorCode::BindFailed, "cannot bind control API on " + endpoint_.host);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!srv.bind_to_port(endpoint_.host, endpoint_.port))
      throw Error(ErrorCode::BindFailed, "cannot bind control API on " + endpoint_.str());
    port_ = endpoint_.port;
  }
  thread_ = std::thread([&srv] { srv.listen_after_bind(); });
}

void ControlServer::stop() {
  if (!thread_.joinable()) return;
  impl_->server.stop();
  thread_.join();
}

}  // namespace beats::recorder
