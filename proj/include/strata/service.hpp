#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "strata/comparison.hpp"
#include "strata/errors.hpp"
#include "strata/params.hpp"
#include "strata/r0.hpp"
#include "strata/strategy.hpp"

namespace strata {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// Bounded least-recently-used map.
template <typename Value>
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<Value> get(const std::string& key)
    {
        std::lock_guard lock(mutex_);
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void put(const std::string& key, Value value)
    {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(key); it != index_.end()) {
            it->second->second = std::move(value);
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        order_.emplace_front(key, std::move(value));
        index_[key] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return order_.size();
    }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<std::pair<std::string, Value>> order_;
    std::unordered_map<std::string, typename std::list<std::pair<std::string, Value>>::iterator> index_;
};

/// Largest sweep resolution served over HTTP.
inline constexpr int max_api_sweep_res = 256;
inline constexpr std::size_t sweep_cache_capacity = 64;

/**
 * JSON handlers behind the explorer API. The baseline is fixed at
 * construction; handlers are safe to call concurrently.
 */
class ExplorerService {
public:
    ExplorerService(ParamSet baseline, std::vector<Substrategy> catalog, std::vector<Grade> grades,
                    CohortPartition partition = CohortPartition::standard(), TableOptions table_options = {})
        : baseline_(std::move(baseline)),
          catalog_(std::move(catalog)),
          grades_(std::move(grades)),
          partition_(std::move(partition)),
          table_options_(table_options),
          fingerprint_(std::to_string(std::hash<std::string>{}(params_to_json(baseline_).dump()))),
          sweeps_(sweep_cache_capacity)
    {
    }

    const ParamSet& baseline() const noexcept { return baseline_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }
    std::size_t cached_sweeps() const { return sweeps_.size(); }

    ApiResponse r0(const std::string& body) const
    {
        return guarded([&] {
            const auto req = parse_body(body);
            const StrategicScale scale = scale_from_request(req);
            const R0Breakdown r = evaluate(scale, baseline_, partition_);
            nlohmann::json comparison = nlohmann::json::array();
            for (const auto& g : grades_) {
                comparison.push_back({{"name", g.name}, {"r0", g.r0_value}, {"below", r.R0 <= g.r0_value}});
            }
            nlohmann::json out = to_json(r);
            out["grade_comparison"] = comparison;
            return ApiResponse{200, out};
        });
    }

    ApiResponse grades() const
    {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& g : grades_) out.push_back(to_json(g));
        return {200, out};
    }

    ApiResponse table() const
    {
        return guarded([&] {
            std::call_once(table_once_, [&] {
                table_json_ = to_json(build_comparison_table(catalog_, grades_, baseline_, table_options_, partition_));
            });
            return ApiResponse{200, table_json_};
        });
    }

    ApiResponse sweep(const std::string& body) const
    {
        return guarded([&] {
            const auto req = parse_body(body);
            reject_unknown(req, {"w_beta", "w_gamma", "res"});
            Substrategy sub = make_substrategy(cohorts_field(req, "w_beta"), cohorts_field(req, "w_gamma"));
            int res = 64;
            if (req.contains("res")) {
                if (!req["res"].is_number_integer()) {
                    throw ValidationError("res", "must be an integer");
                }
                res = req["res"].get<int>();
            }
            if (res < 2 || res > max_api_sweep_res) {
                throw ValidationError("res", "must lie in [2, " + std::to_string(max_api_sweep_res) + "]");
            }
            const std::string key = fingerprint_ + ":" + std::to_string(sub.w_beta.bits()) + ":" +
                                    std::to_string(sub.w_gamma.bits()) + ":" + std::to_string(res);
            if (auto hit = sweeps_.get(key)) {
                return ApiResponse{200, *hit};
            }
            nlohmann::json grid = to_json(sweep_grid(sub, baseline_, res, res, partition_));
            sweeps_.put(key, grid);
            return ApiResponse{200, grid};
        });
    }

    ApiResponse spec() const { return {200, openapi_document()}; }

    /// Registers the routes (and optionally a static UI directory) on `server`.
    void bind(httplib::Server& server, const std::string& static_dir = {}) const
    {
        auto reply = [](httplib::Response& res, const ApiResponse& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Post("/api/r0", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, r0(req.body));
        });
        server.Post("/api/sweep", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, sweep(req.body));
        });
        server.Get("/api/grades", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, grades());
        });
        server.Get("/api/table", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, table());
        });
        server.Get("/api/spec", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, spec());
        });
        if (!static_dir.empty()) {
            server.set_mount_point("/", static_dir);
        }
    }

    static nlohmann::json openapi_document()
    {
        using nlohmann::json;
        const json cohorts = {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 1}}}};
        json error_schema = {{"type", "object"}};
        error_schema["properties"] = {{"error", {{"type", "string"}}}, {"field", {{"type", "string"}}}};
        json error = {{"description", "error"}};
        error["content"]["application/json"]["schema"] = error_schema;
        auto ok = [](const char* what) { return json{{"description", what}}; };
        return {
            {"openapi", "3.0.3"},
            {"info", {{"title", "strata explorer API"}, {"version", "1.0.0"}}},
            {"paths",
             {{"/api/r0",
               {{"post",
                 {{"summary", "R0 of the calibrated baseline under a strategic scale"},
                  {"requestBody",
                   {{"required", true},
                    {"content",
                     {{"application/json",
                       {{"schema",
                         {{"type", "object"},
                          {"properties",
                           {{"w_beta", cohorts},
                            {"w_gamma", cohorts},
                            {"a", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
                            {"b", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}}}}}}}}}}}},
                  {"responses",
                   {{"200", ok("prefactor, r_a, r_i, r0 and grade_comparison")},
                    {"400", error},
                    {"422", error},
                    {"500", error}}}}}}},
              {"/api/sweep",
               {{"post",
                 {{"summary", "R0 over a res x res grid of (a, b)"},
                  {"requestBody",
                   {{"required", true},
                    {"content",
                     {{"application/json",
                       {{"schema",
                         {{"type", "object"},
                          {"properties",
                           {{"w_beta", cohorts},
                            {"w_gamma", cohorts},
                            {"res", {{"type", "integer"}, {"minimum", 2}, {"maximum", max_api_sweep_res}}}}}}}}}}}}},
                  {"responses",
                   {{"200", ok("a_values, b_values, display axes and the r0 matrix")},
                    {"400", error},
                    {"422", error},
                    {"500", error}}}}}}},
              {"/api/grades", {{"get", {{"summary", "Gradation"}, {"responses", {{"200", ok("list of grades")}}}}}}},
              {"/api/table",
               {{"get",
                 {{"summary", "Comparison table with coverage and loci"},
                  {"responses", {{"200", ok("comparison table")}, {"500", error}}}}}}},
              {"/api/spec", {{"get", {{"summary", "This document"}, {"responses", {{"200", ok("OpenAPI")}}}}}}}}}};
    }

private:
    struct BadRequest : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    static nlohmann::json parse_body(const std::string& body)
    {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) {
            throw BadRequest("request body is not valid JSON");
        }
        if (!j.is_object()) {
            throw BadRequest("request body must be a JSON object");
        }
        return j;
    }

    static void reject_unknown(const nlohmann::json& req, std::initializer_list<const char*> known)
    {
        for (const auto& [key, value] : req.items()) {
            if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
                throw ValidationError(key, "unknown field");
            }
        }
    }

    CohortSet cohorts_field(const nlohmann::json& req, const char* field) const
    {
        if (!req.contains(field)) return {};
        const CohortSet w = cohorts_from_json(req[field], field);
        if (w.max_index() > partition_.size()) {
            throw ValidationError(field, "cohort indices must lie in 1.." + std::to_string(partition_.size()));
        }
        return w;
    }

    static double number_field(const nlohmann::json& req, const char* field, double fallback)
    {
        if (!req.contains(field)) return fallback;
        if (!req[field].is_number()) {
            throw ValidationError(field, "must be a number");
        }
        return req[field].get<double>();
    }

    StrategicScale scale_from_request(const nlohmann::json& req) const
    {
        reject_unknown(req, {"w_beta", "w_gamma", "a", "b"});
        StrategicScale s{cohorts_field(req, "w_beta"), cohorts_field(req, "w_gamma"), number_field(req, "a", 1.0),
                         number_field(req, "b", 1.0)};
        if (!(s.a >= 0.0 && s.a <= 1.0)) {
            throw ValidationError("a", "must lie in [0,1]");
        }
        if (!(s.b > 0.0 && s.b <= 1.0)) {
            throw ValidationError("b", "must lie in (0,1]");
        }
        return s;
    }

    template <typename F>
    static ApiResponse guarded(F&& f)
    {
        auto fail = [](int status, const std::string& msg, const std::string& field = {}) {
            nlohmann::json body = {{"error", msg}};
            if (!field.empty()) body["field"] = field;
            return ApiResponse{status, body};
        };
        try {
            return f();
        } catch (const BadRequest& e) {
            return fail(400, e.what());
        } catch (const ValidationError& e) {
            return fail(422, e.what(), e.field());
        } catch (const Error& e) {
            return fail(e.category() == ErrorCategory::input ? 422 : 500, e.what());
        } catch (const std::exception& e) {
            return fail(500, e.what());
        }
    }

    ParamSet baseline_;
    std::vector<Substrategy> catalog_;
    std::vector<Grade> grades_;
    CohortPartition partition_;
    TableOptions table_options_;
    std::string fingerprint_;
    mutable LruCache<nlohmann::json> sweeps_;
    mutable std::once_flag table_once_;
    mutable nlohmann::json table_json_;
};

} // namespace strata
