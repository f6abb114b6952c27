#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace pmrkit::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// POSTs `body` to an absolute http(s) URL. Throws TransportError naming the endpoint when no
/// response arrives; any status code is returned to the caller.
HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const HttpHeaders& headers, std::chrono::milliseconds timeout);

}  // namespace pmrkit::detail
