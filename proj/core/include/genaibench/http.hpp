#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace genaibench::http {

struct Url {
  std::string scheme = "http";
  std::string host;
  int port = 80;
  std::string base_path;  // no trailing slash
};

/// Accepts "http://host:port/prefix" and "host:port". Throws ConnectionError.
Url parse_url(const std::string& text);

struct Response {
  int status = 0;
  std::string body;
};

struct FilePart {
  std::string name;
  std::string content;
  std::string filename;
  std::string content_type;
};

// All calls throw ConnectionError when no HTTP exchange happens at all;
// non-2xx statuses are returned, not thrown.
Response get(const std::string& base, const std::string& path, double timeout_s);
Response post_json(const std::string& base, const std::string& path, const std::string& body, double timeout_s);
Response post_multipart(const std::string& base, const std::string& path, const std::vector<FilePart>& parts,
                        double timeout_s);

/// POST whose response body is delivered chunk by chunk as it arrives.
/// Returning false from `on_chunk` aborts the transfer.
Response post_stream(const std::string& base, const std::string& path, const std::string& body, double timeout_s,
                     const std::function<bool(std::string_view)>& on_chunk);

/// True when anything answers HTTP at `base` + `path`.
bool reachable(const std::string& base, const std::string& path = "/health", double timeout_s = 1.0);

/// An unused localhost TCP port.
int free_port();

}  // namespace genaibench::http
