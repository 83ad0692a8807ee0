// Copyright 2026 The pcount Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <httplib.h>

#include <json.hpp>

#include "pcount/annotation.hpp"
#include "pcount/errors.hpp"

namespace pcount {

using nlohmann::json;

struct AnnotationServer::Impl {
  AnnotationStore& store;
  httplib::Server server;
  explicit Impl(AnnotationStore& s) : store(s) {}
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json session_json(const AnnotationSession& s) {
  json j;
  j["video"] = s.video_id();
  j["frames"] = s.frame_count();
  j["mode"] = to_string(s.mode());
  j["initial"] = s.initial() ? json(*s.initial()) : json(nullptr);
  json events = json::array();
  for (const auto& e : s.log()) events.push_back({{"frame", e.frame}, {"delta", e.delta}});
  j["events"] = std::move(events);
  if (s.initial()) j["counts"] = s.materialize();
  return j;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& ex) {
    throw FormatError(std::string("body is not valid JSON: ") + ex.what());
  }
}

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("body needs field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("field '") + name + "' has the wrong type");
  }
}

std::int64_t parse_index(const std::string& s) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw FormatError("bad frame number");
    return v;
  } catch (const std::logic_error&) {
    throw NotFoundError("bad frame number '" + s + "'");
  }
}

/// Runs \p fn and turns library errors into HTTP statuses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const InvariantError& e) {
      reply(res, 422, {{"error", e.what()}});
    } catch (const RangeError& e) {
      reply(res, 422, {{"error", e.what()}});
    } catch (const FormatError& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const ConfigError& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& svr = impl_->server;
  AnnotationStore* st = &store;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  svr.Get("/videos", guarded([st](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& v : st->videos()) list.push_back({{"id", v.id}, {"frames", v.frames}});
    reply(res, 200, list);
  }));

  svr.Get(R"(/videos/([^/]+)/frames/([^/]+))", guarded([st](const httplib::Request& req, httplib::Response& res) {
    const auto bytes = st->frame_image(req.matches[1], parse_index(req.matches[2]));
    res.status = 200;
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/x-portable-pixmap");
  }));

  svr.Get(R"(/videos/([^/]+)/session)", guarded([st](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, session_json(st->session(req.matches[1])));
  }));

  svr.Get(R"(/videos/([^/]+)/session/counts/([^/]+))",
          guarded([st](const httplib::Request& req, httplib::Response& res) {
            const std::int64_t n = parse_index(req.matches[2]);
            const AnnotationSession s = st->session(req.matches[1]);
            if (n < 0 || n >= s.frame_count()) throw NotFoundError("no frame " + std::to_string(n));
            reply(res, 200, {{"frame", n}, {"count", s.count_at(n)}});
          }));

  svr.Put(R"(/videos/([^/]+)/session/initial)", guarded([st](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto count = body.is_number_integer() ? body.get<std::int64_t>() : field<std::int64_t>(body, "count");
    const auto s = st->with_session(req.matches[1], [&](AnnotationSession& s) {
      s.set_initial(count);
      return s;
    });
    reply(res, 200, session_json(s));
  }));

  svr.Put(R"(/videos/([^/]+)/session/mode)", guarded([st](const httplib::Request& req, httplib::Response& res) {
    const LabelMode mode = parse_label_mode(field<std::string>(parse_body(req), "mode"));
    const auto s = st->with_session(req.matches[1], [&](AnnotationSession& s) {
      s.set_mode(mode);
      return s;
    });
    reply(res, 200, session_json(s));
  }));

  svr.Post(R"(/videos/([^/]+)/session/events)", guarded([st](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto frame = field<std::int64_t>(body, "frame");
    const auto delta = field<int>(body, "delta");
    const auto s = st->with_session(req.matches[1], [&](AnnotationSession& s) {
      s.adjust(frame, delta);
      return s;
    });
    reply(res, 201, {{"frame", frame}, {"count", s.count_at(frame)}, {"events", s.log().size()}});
  }));

  svr.Delete(R"(/videos/([^/]+)/session/events/last)",
             guarded([st](const httplib::Request& req, httplib::Response& res) {
               bool removed = false;
               const auto s = st->with_session(req.matches[1], [&](AnnotationSession& s) {
                 removed = s.undo();
                 return s;
               });
               if (!removed) throw InvariantError("no event to undo");
               reply(res, 200, session_json(s));
             }));

  svr.Post(R"(/videos/([^/]+)/export)", guarded([st](const httplib::Request& req, httplib::Response& res) {
    const auto path = st->export_labels(req.matches[1]);
    const LabelTable t = read_label_table(path);
    reply(res, 200, {{"path", path.string()}, {"rows", t.rows.size()}});
  }));
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

bool AnnotationServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace pcount
