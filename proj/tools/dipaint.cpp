#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "dipaint/cli/commands.hpp"
#include "dipaint/service/server.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int serve(const dipaint::cli::ServeOptions& o, std::ostream& out, std::ostream& err) {
  dipaint::service::ServiceConfig cfg;
  cfg.data_dir = o.data_dir;
  cfg.workers = o.workers;
  cfg.static_dir = o.static_dir;
  cfg.max_upload_bytes = o.max_upload_bytes;
  dipaint::service::Service svc(cfg);
  const int port = svc.bind(o.host, o.port);
  if (port < 0) {
    err << "error: cannot bind " << o.host << ":" << o.port << "\n";
    return dipaint::cli::kExitFailure;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_interrupted) {
        svc.stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  out << "listening on http://" << o.host << ":" << port << std::endl;
  svc.run();
  done = true;
  watcher.join();
  svc.stop();
  out << "stopped" << std::endl;
  return dipaint::cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  return dipaint::cli::run_cli(argc, argv, std::cout, std::cerr, serve);
}
