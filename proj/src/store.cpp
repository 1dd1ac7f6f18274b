#include "echotriage/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "echotriage/error.hpp"

namespace echotriage {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kMagic = "ETR1 ";
constexpr int kSeqDigits = 12;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

class FileLock {
public:
    explicit FileLock(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            if (fd_ >= 0) ::close(fd_);
            throw Error(Errc::Io, "cannot lock " + path.string() + ": " + std::strerror(errno));
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

std::string seq_name(std::uint64_t seq, std::string_view kind) {
    std::string digits = std::to_string(seq);
    return std::string(kSeqDigits - std::min<std::size_t>(digits.size(), kSeqDigits), '0') + digits + "." +
           std::string(kind) + ".etr";
}

struct Override {
    std::string fingerprint;
    ReviewerOverride value;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::Io, "SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

ReportStore::ReportStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "records");
    std::filesystem::create_directories(root_ / "tmp");
    std::filesystem::create_directories(root_ / "cohorts");
}

void ReportStore::append(std::string_view kind, const std::string& body) {
    static std::atomic<std::uint64_t> tmp_counter{0};
    const std::string content = std::string(kMagic) + sha256_hex(body) + "\n" + body;
    const auto tmp = root_ / "tmp" /
                     (std::to_string(::getpid()) + "-" + std::to_string(tmp_counter.fetch_add(1)) + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    }

    std::lock_guard lock(mu_);
    FileLock flock(root_ / "lock");
    std::uint64_t seq = 1;
    for (const auto& r : records()) seq = std::max(seq, r.seq + 1);
    // link() never replaces an existing name, so a racing writer cannot be clobbered.
    while (::link(tmp.c_str(), (root_ / "records" / seq_name(seq, kind)).c_str()) != 0) {
        if (errno != EEXIST) {
            const int err = errno;
            std::filesystem::remove(tmp);
            throw Error(Errc::Io, std::string("cannot publish record: ") + std::strerror(err));
        }
        ++seq;
    }
    std::filesystem::remove(tmp);
}

std::vector<ReportStore::Record> ReportStore::records() const {
    std::vector<Record> out;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "records")) {
        const auto name = entry.path().filename().string();
        const auto dot = name.find('.');
        if (dot != static_cast<std::size_t>(kSeqDigits) || !name.ends_with(".etr")) continue;
        Record r;
        const auto [ptr, ec] = std::from_chars(name.data(), name.data() + dot, r.seq);
        if (ec != std::errc() || ptr != name.data() + dot) continue;
        r.kind = name.substr(dot + 1, name.size() - dot - 5);
        r.path = entry.path();
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const Record& a, const Record& b) { return a.seq < b.seq; });
    return out;
}

std::string ReportStore::read_body(const Record& rec) {
    const auto content = read_file(rec.path);
    const auto nl = content.find('\n');
    if (!content.starts_with(kMagic) || nl != kMagic.size() + 64) {
        throw Error(Errc::StoreCorrupt, "bad record header in " + rec.path.filename().string());
    }
    std::string body = content.substr(nl + 1);
    if (sha256_hex(body) != content.substr(kMagic.size(), 64)) {
        throw Error(Errc::StoreCorrupt, "checksum mismatch in " + rec.path.filename().string());
    }
    return body;
}

void ReportStore::put_report(const StudyReport& r) {
    StudyReport machine = r;
    machine.reviewer_override.reset();
    append("report", to_json(machine));
}

void ReportStore::put_masks(const std::string& study_id, const std::string& fingerprint, const std::string& clip_id,
                            Chamber chamber, const std::string& sidecar_text) {
    ojson j;
    j["study_id"] = study_id;
    j["config_fingerprint"] = fingerprint;
    j["clip_id"] = clip_id;
    j["chamber"] = to_string(chamber);
    j["sidecar"] = sidecar_text;
    append("masks", j.dump());
}

void ReportStore::put_override(const std::string& study_id, const ReviewerOverride& o) {
    const auto latest = load(study_id);
    if (!latest) throw Error(Errc::UnknownStudy, "no stored report for '" + study_id + "'");
    ojson j;
    j["study_id"] = study_id;
    j["config_fingerprint"] = latest->config_fingerprint;
    j["category"] = to_string(o.category);
    j["reviewer_id"] = o.reviewer_id;
    j["timestamp"] = o.timestamp;
    append("override", j.dump());
}

std::optional<std::string> ReportStore::load_machine_json(const std::string& study_id,
                                                          const std::optional<std::string>& fingerprint) const {
    const auto recs = records();
    for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        if (it->kind != "report") continue;
        auto body = read_body(*it);
        const auto r = report_from_json(body);
        if (r.study_id == study_id && (!fingerprint || r.config_fingerprint == *fingerprint)) return body;
    }
    return std::nullopt;
}

std::optional<StudyReport> ReportStore::load(const std::string& study_id,
                                             const std::optional<std::string>& fingerprint) const {
    const auto body = load_machine_json(study_id, fingerprint);
    if (!body) return std::nullopt;
    auto report = report_from_json(*body);
    const auto recs = records();
    for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        if (it->kind != "override") continue;
        const auto j = ojson::parse(read_body(*it));
        if (j.at("study_id") != study_id || j.at("config_fingerprint") != report.config_fingerprint) continue;
        const auto category = category_from_string(j.at("category").get<std::string>());
        if (!category) throw Error(Errc::StoreCorrupt, "override with unknown category");
        report.reviewer_override = ReviewerOverride{*category, j.at("reviewer_id").get<std::string>(),
                                                    j.at("timestamp").get<std::string>()};
        break;
    }
    return report;
}

std::vector<std::string> ReportStore::fingerprints(const std::string& study_id) const {
    std::vector<std::string> out;
    for (const auto& rec : records()) {
        if (rec.kind != "report") continue;
        const auto r = report_from_json(read_body(rec));
        if (r.study_id == study_id && std::find(out.begin(), out.end(), r.config_fingerprint) == out.end()) {
            out.push_back(r.config_fingerprint);
        }
    }
    return out;
}

std::vector<StudySummary> ReportStore::list() const {
    // One pass: the latest report per study, then the latest override for that version.
    std::map<std::string, StudyReport> latest;
    std::vector<std::pair<std::string, Override>> overrides;
    for (const auto& rec : records()) {
        if (rec.kind == "report") {
            auto r = report_from_json(read_body(rec));
            auto key = r.study_id;
            latest.insert_or_assign(std::move(key), std::move(r));
        } else if (rec.kind == "override") {
            const auto j = ojson::parse(read_body(rec));
            const auto category = category_from_string(j.at("category").get<std::string>());
            if (!category) throw Error(Errc::StoreCorrupt, "override with unknown category");
            overrides.push_back({j.at("study_id").get<std::string>(),
                                 {j.at("config_fingerprint").get<std::string>(),
                                  {*category, j.at("reviewer_id").get<std::string>(),
                                   j.at("timestamp").get<std::string>()}}});
        }
    }
    std::vector<StudySummary> out;
    for (const auto& [id, r] : latest) {
        StudySummary s;
        s.study_id = id;
        s.config_fingerprint = r.config_fingerprint;
        s.machine_category = r.triage.category;
        s.category = r.triage.category;
        if (r.lvef) s.mean_lvef = r.lvef->mean_lvef;
        s.flags = r.quality_flags;
        for (const auto& [oid, o] : overrides) {
            if (oid == id && o.fingerprint == r.config_fingerprint) {
                s.category = o.value.category;
                s.overridden = true;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::optional<std::string> ReportStore::load_masks(const std::string& study_id, const std::string& clip_id,
                                                   Chamber chamber) const {
    const auto report = load(study_id);
    if (!report) return std::nullopt;
    const auto recs = records();
    for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        if (it->kind != "masks") continue;
        const auto j = ojson::parse(read_body(*it));
        if (j.at("study_id") == study_id && j.at("config_fingerprint") == report->config_fingerprint &&
            j.at("clip_id") == clip_id && j.at("chamber") == to_string(chamber)) {
            return j.at("sidecar").get<std::string>();
        }
    }
    return std::nullopt;
}

VerifyResult ReportStore::verify() const {
    VerifyResult v;
    for (const auto& rec : records()) {
        ++v.records;
        try {
            (void)read_body(rec);
        } catch (const Error&) {
            v.corrupt.push_back(rec.path.filename().string());
        }
    }
    return v;
}

std::optional<ThresholdConfig> ReportStore::thresholds() const {
    const auto path = root_ / "thresholds.json";
    std::lock_guard lock(mu_);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        const auto j = ojson::parse(read_file(path));
        ThresholdConfig t{j.at("abnormal_below").get<double>(), j.at("normal_above").get<double>()};
        t.validate();
        return t;
    } catch (const ojson::exception& e) {
        throw Error(Errc::StoreCorrupt, std::string("thresholds.json: ") + e.what());
    }
}

void ReportStore::set_thresholds(const ThresholdConfig& t) {
    t.validate();
    ojson j;
    j["abnormal_below"] = t.abnormal_below;
    j["normal_above"] = t.normal_above;
    const std::string body = j.dump() + "\n";
    std::lock_guard lock(mu_);
    FileLock flock(root_ / "lock");
    const auto tmp = root_ / "tmp" / "thresholds.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << body;
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, root_ / "thresholds.json");
}

std::vector<std::string> ReportStore::cohort_names() const {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "cohorts")) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<std::vector<CohortEntry>> ReportStore::cohort(const std::string& name) const {
    const auto names = cohort_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) return std::nullopt;
    return read_cohort_csv(root_ / "cohorts" / (name + ".csv"));
}

}  // namespace echotriage
