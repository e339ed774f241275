#include <algorithm>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "godspell/annotate.hpp"

namespace godspell::annotate {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

nlohmann::json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("model temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("model max_retries must be >= 0");
  if (!(timeout_seconds > 0.0)) throw ConfigError("model timeout must be positive");
  if (model.empty()) throw ConfigError("model name is empty");
}

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::transport: return "transport";
    case ErrorKind::malformed: return "malformed";
    case ErrorKind::precondition: break;
  }
  return "precondition";
}

PipelineError::PipelineError(ErrorKind kind, std::string stage, std::string passage, const std::string& message)
    : Error(std::string(to_string(kind)) + " error in " + stage + " for passage " + passage + ": " + message),
      kind_(kind),
      stage_(std::move(stage)),
      passage_(std::move(passage)),
      detail_(message) {}

HttpBackend::HttpBackend(std::string endpoint, double timeout_seconds) : timeout_(timeout_seconds) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must be an http:// URL: " + endpoint);
  if (endpoint.compare(0, scheme, "http") != 0) throw ConfigError("only http:// endpoints are supported: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::string HttpBackend::complete(const CompletionRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["prompt"] = request.prompt;
  body["stream"] = false;
  body["format"] = request.schema;
  body["options"] = {{"temperature", request.temperature}};

  httplib::Client client(base_);
  const auto secs = static_cast<time_t>(timeout_);
  const auto usecs = static_cast<time_t>((timeout_ - std::floor(timeout_)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_ + path_);
  }
  return res->body;
}

nlohmann::json extract_object(std::string_view body) {
  auto j = parse_json_text(body, "response body");
  if (!j.is_object()) throw MalformedResponse("response body is not a JSON object");

  const nlohmann::json* inner = nullptr;
  if (auto it = j.find("response"); it != j.end() && it->is_string()) {
    inner = &*it;
  } else if (auto m = j.find("message"); m != j.end() && m->is_object() && m->contains("content")) {
    inner = &(*m)["content"];
  } else if (auto c = j.find("choices"); c != j.end() && c->is_array() && !c->empty()) {
    const auto& first = (*c)[0];
    if (first.contains("message") && first["message"].contains("content")) inner = &first["message"]["content"];
  }
  if (!inner) return j;
  if (!inner->is_string()) throw MalformedResponse("wrapped response content is not a string");
  auto obj = parse_json_text(inner->get<std::string>(), "response content");
  if (!obj.is_object()) throw MalformedResponse("response content is not a JSON object");
  return obj;
}

FieldMap parse_response(std::string_view raw, const PromptTemplate& t) {
  const auto obj = extract_object(raw);
  FieldMap out;
  for (const auto& f : t.fields) {
    auto it = obj.find(f.name);
    if (it == obj.end()) throw MalformedResponse("missing field '" + f.name + "'");
    if (!it->is_string()) throw MalformedResponse("field '" + f.name + "' is not a string");
    const auto value = it->get<std::string>();
    if (!f.is_enum()) {
      out[f.name] = value;
      continue;
    }
    const auto canonical = upper(trim(value));
    if (std::find(f.allowed.begin(), f.allowed.end(), canonical) == f.allowed.end()) {
      throw MalformedResponse("field '" + f.name + "' has unrecognized value '" + value + "'");
    }
    out[f.name] = canonical;
  }
  return out;
}

std::string call_model(ModelBackend& backend, const ModelConfig& config, const PromptTemplate& t,
                       const std::string& input, const std::string& passage_ref, const SleepFn& sleep) {
  CompletionRequest request{config.model, render_prompt(t, input), config.temperature, t.schema(), t.name, input};
  ErrorKind last_kind = ErrorKind::transport;
  std::string last_message;
  auto delay = config.backoff_base;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay *= 2;
    }
    try {
      std::string body = backend.complete(request);
      parse_response(body, t);
      return body;
    } catch (const TransportError& e) {
      last_kind = ErrorKind::transport;
      last_message = e.what();
    } catch (const MalformedResponse& e) {
      last_kind = ErrorKind::malformed;
      last_message = e.what();
    }
  }
  throw PipelineError(last_kind, t.name, passage_ref,
                      last_message + " (" + std::to_string(config.max_retries + 1) + " attempts)");
}

}  // namespace godspell::annotate
