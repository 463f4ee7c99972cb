#include "ybsde/errors.hpp"
#include "ybsde/experiments.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace ybsde {

namespace {

std::string iso8601(std::chrono::system_clock::time_point tp) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return os.str();
}

std::string one_line(std::string s) {
    for (char& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    return s;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ResourceError("cannot open " + path.string() + " for writing");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw ResourceError("short write to " + path.string());
}

} // namespace

std::string library_version() { return "ybsde 1.0.0"; }

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw ResourceError("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string make_manifest(const ExperimentConfig& config, const RunOutcome& outcome,
                          std::chrono::system_clock::time_point started, std::chrono::system_clock::time_point finished) {
    nlohmann::ordered_json j;
    j["kind"] = config.kind;
    j["library_version"] = library_version();
    j["config"] = config.values();
    j["started"] = iso8601(started);
    j["finished"] = iso8601(finished);
    j["status"] = outcome.status;
    j["files"] = nlohmann::json::array();
    for (const auto& f : outcome.files)
        j["files"].push_back({{"name", f.name}, {"bytes", f.body.size()}, {"sha256", sha256_hex(f.body)}});
    j["phases"] = nlohmann::json::array();
    for (const auto& p : outcome.phases) j["phases"].push_back({{"name", p.name}, {"seconds", p.seconds}});
    j["warnings"] = outcome.warnings;
    return j.dump(2) + "\n";
}

int report_exception(std::exception_ptr e, std::ostream& err) {
    int status = exit_numerical;
    const char* category = "internal";
    std::string message;
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError& x) {
        status = exit_config, category = "config", message = x.what();
    } catch (const DomainError& x) {
        status = exit_precondition, category = "precondition", message = x.what();
    } catch (const NumericalError& x) {
        status = exit_numerical, category = "numerical", message = x.what();
    } catch (const ResourceError& x) {
        status = exit_numerical, category = "resource", message = x.what();
    } catch (const std::exception& x) {
        message = x.what();
    } catch (...) {
        message = "unknown exception";
    }
    nlohmann::ordered_json line{{"status", status}, {"error", category}, {"message", one_line(message)}};
    err << line.dump() << '\n';
    return status;
}

int run(const ExperimentConfig& config, std::ostream& err) {
    const auto started = std::chrono::system_clock::now();
    RunOutcome outcome;
    try {
        outcome = execute(config);
    } catch (...) {
        return report_exception(std::current_exception(), err);
    }
    try {
        const std::filesystem::path dir(config.out());
        std::filesystem::create_directories(dir);
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& f : outcome.files) write_file(dir / f.name, f.body);
        outcome.phases.push_back({"write", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
        write_file(dir / "manifest.json", make_manifest(config, outcome, started, std::chrono::system_clock::now()));
    } catch (const std::filesystem::filesystem_error& x) {
        return report_exception(std::make_exception_ptr(ResourceError(x.what())), err);
    } catch (...) {
        return report_exception(std::current_exception(), err);
    }
    for (const auto& w : outcome.warnings) err << nlohmann::ordered_json{{"warning", one_line(w)}}.dump() << '\n';
    if (outcome.status == exit_not_converged)
        err << nlohmann::ordered_json{{"status", outcome.status}, {"error", "not_converged"},
                                      {"message", "outputs written; see warnings"}}
                   .dump()
            << '\n';
    return outcome.status;
}

} // namespace ybsde
