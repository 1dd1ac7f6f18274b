#include "echotriage/server.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include <httplib.h>
#include <json.hpp>

#include "echotriage/error.hpp"

namespace echotriage {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void problem(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, ojson{{"error", message}});
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ojson optional_json(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

/// Parses the request body as a JSON object or answers 422.
std::optional<ojson> body_object(const httplib::Request& req, httplib::Response& res) {
    auto j = ojson::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        problem(res, 422, "body must be a JSON object");
        return std::nullopt;
    }
    return j;
}

std::optional<double> number_field(const ojson& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return std::nullopt;
    const double v = it->get<double>();
    return std::isfinite(v) ? std::optional(v) : std::nullopt;
}

}  // namespace

ReviewServer::ReviewServer(ReportStore& store, ThresholdConfig defaults)
    : store_(store), defaults_(defaults), http_(std::make_unique<httplib::Server>()) {
    defaults_.validate();
    routes();
}

ReviewServer::~ReviewServer() = default;

void ReviewServer::routes() {
    auto& s = *http_;

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            problem(res, e.code() == Errc::StoreCorrupt ? 500 : 400, e.what());
        } catch (const std::exception& e) {
            problem(res, 500, e.what());
        }
    });

    s.Get("/api/studies", [this](const httplib::Request&, httplib::Response& res) {
        ojson out = ojson::array();
        for (const auto& st : store_.list()) {
            ojson j;
            j["study_id"] = st.study_id;
            j["category"] = to_string(st.category);
            j["machine_category"] = to_string(st.machine_category);
            j["mean_lvef"] = optional_json(st.mean_lvef);
            j["flags"] = st.flags;
            j["overridden"] = st.overridden;
            j["config_fingerprint"] = st.config_fingerprint;
            out.push_back(std::move(j));
        }
        reply(res, 200, out);
    });

    s.Get("/api/studies/:id", [this](const httplib::Request& req, httplib::Response& res) {
        const auto report = store_.load(req.path_params.at("id"));
        if (!report) return problem(res, 404, "unknown study");
        res.set_content(to_json(*report), kJson);
    });

    s.Get("/api/studies/:id/versions", [this](const httplib::Request& req, httplib::Response& res) {
        const auto fps = store_.fingerprints(req.path_params.at("id"));
        if (fps.empty()) return problem(res, 404, "unknown study");
        reply(res, 200, fps);
    });

    s.Get("/api/studies/:id/masks/:clip/:chamber", [this](const httplib::Request& req, httplib::Response& res) {
        const auto chamber = chamber_from_string(req.path_params.at("chamber"));
        if (!chamber) return problem(res, 404, "unknown chamber");
        if (!store_.load(req.path_params.at("id"))) return problem(res, 404, "unknown study");
        const auto masks = store_.load_masks(req.path_params.at("id"), req.path_params.at("clip"), *chamber);
        if (!masks) return problem(res, 404, "no masks for that clip and chamber");
        res.set_content(*masks, "text/plain");
    });

    s.Post("/api/studies/:id/override", [this](const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        if (!store_.load(id)) return problem(res, 404, "unknown study");
        const auto body = body_object(req, res);
        if (!body) return;
        const auto cat = body->find("category");
        const auto reviewer = body->find("reviewer_id");
        const auto category = cat != body->end() && cat->is_string()
                                  ? category_from_string(cat->get<std::string>())
                                  : std::nullopt;
        // A reviewer decides between the clinical categories only.
        if (!category || *category == Category::UNDETERMINED) {
            return problem(res, 422, "category must be ABNORMAL, GREY or NORMAL");
        }
        if (reviewer == body->end() || !reviewer->is_string() || reviewer->get<std::string>().empty()) {
            return problem(res, 422, "reviewer_id is required");
        }
        store_.put_override(id, {*category, reviewer->get<std::string>(), utc_now()});
        res.set_content(to_json(*store_.load(id)), kJson);
    });

    s.Get("/api/thresholds", [this](const httplib::Request&, httplib::Response& res) {
        const auto t = store_.thresholds().value_or(defaults_);
        reply(res, 200, ojson{{"abnormal_below", t.abnormal_below}, {"normal_above", t.normal_above}});
    });

    s.Put("/api/thresholds", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_object(req, res);
        if (!body) return;
        const auto lo = number_field(*body, "abnormal_below");
        const auto hi = number_field(*body, "normal_above");
        if (!lo || !hi) return problem(res, 422, "abnormal_below and normal_above must be numbers");
        const ThresholdConfig t{*lo, *hi};
        try {
            t.validate();
        } catch (const Error& e) {
            return problem(res, 422, e.what());
        }
        store_.set_thresholds(t);
        reply(res, 200, ojson{{"abnormal_below", t.abnormal_below}, {"normal_above", t.normal_above}});
    });

    s.Get("/api/cohorts", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, store_.cohort_names());
    });

    s.Post("/api/whatif", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_object(req, res);
        if (!body) return;
        const auto name = body->find("cohort");
        if (name == body->end() || !name->is_string()) return problem(res, 422, "cohort name is required");
        const auto cutoff = number_field(*body, "cutoff");
        if (!cutoff || *cutoff < 0.0 || *cutoff > 100.0) return problem(res, 422, "cutoff must be a number in [0,100]");
        const auto cohort = store_.cohort(name->get<std::string>());
        if (!cohort) return problem(res, 404, "unknown cohort");

        const auto m = evaluate_cutoff(*cohort, *cutoff);
        WorkloadParams w;
        w.sensitivity = m.sensitivity.value_or(0.0);
        if (const auto v = number_field(*body, "studies_per_year")) w.studies_per_year = *v;
        if (const auto v = number_field(*body, "normal_prevalence")) w.normal_prevalence = *v;
        if (const auto v = number_field(*body, "minutes_per_study")) w.minutes_per_study = *v;
        try {
            w.validate();
        } catch (const Error& e) {
            return problem(res, 422, e.what());
        }

        ojson out;
        out["cohort"] = name->get<std::string>();
        out["cutoff"] = *cutoff;
        out["precision"] = optional_json(m.precision);
        out["sensitivity"] = optional_json(m.sensitivity);
        out["accuracy"] = m.accuracy;
        out["counts"] = ojson{{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}};
        out["workload_hours_per_year"] = workload_savings(w);
        reply(res, 200, out);
    });

    s.Post("/api/calibrate", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_object(req, res);
        if (!body) return;
        const auto name = body->find("cohort");
        if (name == body->end() || !name->is_string()) return problem(res, 422, "cohort name is required");
        const auto floor = number_field(*body, "precision_floor").value_or(0.8);
        const auto cohort = store_.cohort(name->get<std::string>());
        if (!cohort) return problem(res, 404, "unknown cohort");
        CalibrationResult c;
        try {
            c = calibrate_cutoff(*cohort, floor);
        } catch (const Error& e) {
            return problem(res, 422, e.what());
        }
        ojson out;
        out["chosen_cutoff"] = c.chosen_cutoff;
        out["feasible"] = c.feasible;
        out["achieved_precision"] = optional_json(c.achieved_precision);
        out["achieved_sensitivity"] = c.achieved_sensitivity;
        reply(res, 200, out);
    });
}

bool ReviewServer::listen(const std::string& host, int port) {
    if (bind(host, port) < 0) return false;
    return serve();
}

int ReviewServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = http_->bind_to_any_port(host);
    } else {
        port_ = http_->bind_to_port(host, port) ? port : -1;
    }
    return port_;
}

bool ReviewServer::serve() {
    return http_->listen_after_bind();
}

void ReviewServer::stop() {
    http_->stop();
}

void ReviewServer::wait_until_ready() const {
    http_->wait_until_ready();
}

}  // namespace echotriage
