#pragma once

#include <memory>
#include <string>

#include "echotriage/store.hpp"
#include "echotriage/triage.hpp"

namespace httplib {
class Server;
}

namespace echotriage {

/// JSON-over-HTTP interface consumed by the review UI. All clinical numbers
/// are computed here; see docs/report-schema.md for the routes.
class ReviewServer {
public:
    /// `defaults` are served until a threshold update lands in the store.
    ReviewServer(ReportStore& store, ThresholdConfig defaults = {});
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Blocks until stop(). Port 0 picks a free port (see port()).
    bool listen(const std::string& host, int port);
    /// Binds without serving; follow with serve().
    int bind(const std::string& host, int port);
    bool serve();
    void stop();
    void wait_until_ready() const;
    [[nodiscard]] int port() const noexcept { return port_; }

private:
    void routes();

    ReportStore& store_;
    ThresholdConfig defaults_;
    std::unique_ptr<httplib::Server> http_;
    int port_ = 0;
};

}  // namespace echotriage
