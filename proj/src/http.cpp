#include "http.hpp"

#include <httplib.h>

#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' is not an absolute URL");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("endpoint '" + url + "' must use http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const HttpHeaders& headers, std::chrono::milliseconds timeout) {
  const SplitUrl target = split_url(url);
  httplib::Client client(target.origin);
  if (!client.is_valid()) throw ConfigError("endpoint '" + url + "' is not usable");
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto result = client.Post(target.path, h, body, content_type);
  if (!result) throw TransportError("no response from " + url + ": " + httplib::to_string(result.error()));
  return {result->status, result->body};
}

}  // namespace pmrkit::detail
