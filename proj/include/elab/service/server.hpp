#pragma once

#include "elab/service/config.hpp"

#include <memory>

namespace elab::catalog {
class Catalog;
}
namespace elab::provenance {
class ProvenanceStore;
}
namespace elab::vds {
class VirtualDataSystem;
}

namespace elab::service {

class AnalysisRunner;
class LogbookStore;
class SessionManager;
class UserStore;

inline constexpr const char* session_cookie = "elab_session";

/// The e-Lab HTTP service. Storage lives under config.storage_root:
/// elab.db (catalog, provenance, groups, logbook), blobs/ and work/.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the listening socket and returns the port (useful with port 0).
    int bind();
    /// Serves until stop(); binds first if needed.
    void run();
    /// bind() and serve on a background thread.
    int start();
    void stop();

    int port() const;
    const ServiceConfig& config() const;

    catalog::Catalog& catalog();
    provenance::ProvenanceStore& provenance();
    vds::VirtualDataSystem& vds();
    UserStore& users();
    SessionManager& sessions();
    LogbookStore& logbook();
    AnalysisRunner& analyses();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace elab::service
