#include "genaibench/http.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include "genaibench/error.hpp"

namespace genaibench::http {

namespace {

httplib::Client make_client(const Url& url, double timeout_s) {
  if (url.scheme != "http") throw ConnectionError("unsupported URL scheme '" + url.scheme + "'");
  httplib::Client cli(url.host, url.port);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(std::min<time_t>(sec, 5), sec >= 5 ? 0 : usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  return cli;
}

Response finish(const httplib::Result& res, const Url& url, const std::string& path) {
  if (!res) {
    throw ConnectionError("HTTP request to " + url.host + ":" + std::to_string(url.port) + url.base_path + path +
                          " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace

Url parse_url(const std::string& text) {
  Url url;
  std::string rest = text;
  if (auto p = rest.find("://"); p != std::string::npos) {
    url.scheme = rest.substr(0, p);
    rest = rest.substr(p + 3);
  }
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  if (slash != std::string::npos) url.base_path = rest.substr(slash);
  while (!url.base_path.empty() && url.base_path.back() == '/') url.base_path.pop_back();
  if (auto colon = authority.rfind(':'); colon != std::string::npos) {
    try {
      url.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConnectionError("bad port in URL '" + text + "'");
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw ConnectionError("no host in URL '" + text + "'");
  url.host = authority;
  return url;
}

Response get(const std::string& base, const std::string& path, double timeout_s) {
  const auto url = parse_url(base);
  auto cli = make_client(url, timeout_s);
  return finish(cli.Get(url.base_path + path), url, path);
}

Response post_json(const std::string& base, const std::string& path, const std::string& body, double timeout_s) {
  const auto url = parse_url(base);
  auto cli = make_client(url, timeout_s);
  return finish(cli.Post(url.base_path + path, body, "application/json"), url, path);
}

Response post_multipart(const std::string& base, const std::string& path, const std::vector<FilePart>& parts,
                        double timeout_s) {
  const auto url = parse_url(base);
  auto cli = make_client(url, timeout_s);
  httplib::MultipartFormDataItems items;
  for (const auto& p : parts) items.push_back({p.name, p.content, p.filename, p.content_type});
  return finish(cli.Post(url.base_path + path, items), url, path);
}

Response post_stream(const std::string& base, const std::string& path, const std::string& body, double timeout_s,
                     const std::function<bool(std::string_view)>& on_chunk) {
  const auto url = parse_url(base);
  auto cli = make_client(url, timeout_s);
  httplib::Request req;
  req.method = "POST";
  req.path = url.base_path + path;
  req.body = body;
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", "text/event-stream");
  Response out;
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    return on_chunk(std::string_view(data, len));
  };
  auto res = cli.send(req);
  if (!res && res.error() == httplib::Error::Canceled) return {0, {}};
  out.status = finish(res, url, path).status;
  return out;
}

bool reachable(const std::string& base, const std::string& path, double timeout_s) {
  try {
    get(base, path, timeout_s);
    return true;
  } catch (const ConnectionError&) {
    return false;
  }
}

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw LaunchError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof addr;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    throw LaunchError("cannot reserve a local port");
  }
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace genaibench::http
