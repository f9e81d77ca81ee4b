#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "bwsann/error.hpp"
#include "bwsann/service.hpp"

namespace httplib {
class Server;
}

namespace bwsann {

/// HTTP status used for a service error code.
int http_status(Errc code);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "bwsann-data";
  /// When non-empty, administrative endpoints require "Authorization: Bearer <admin_token>".
  std::string admin_token;
  std::string instructions;
};

/// Precedence, lowest first: defaults, config file (JSON), environment
/// (BWSANN_PORT, BWSANN_DATA_DIR, BWSANN_HOST, BWSANN_ADMIN_TOKEN).
/// Command-line flags are applied by the caller on top.
ServerConfig load_server_config(const std::optional<std::filesystem::path>& config_file,
                                const std::function<const char*(const char*)>& getenv = nullptr);

/// Registers all API routes on `server`. `service` must outlive it.
void mount_routes(httplib::Server& server, AnnotationService& service, const ServerConfig& config);

}  // namespace bwsann
