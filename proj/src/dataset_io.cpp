#include "trialpower/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<int> to_int(std::string_view s) {
    s = trim(s);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = line.find(sep);
        out.push_back(trim(line.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return out;
}

[[noreturn]] void fail(long line_no, const std::string& what) {
    throw DataError("line " + std::to_string(line_no) + ": " + what);
}

struct RawSubject {
    std::string id;
    Arm arm;
    std::map<int, int> scores;  // day -> score
};

}  // namespace

LoadedDataset read_dataset(std::istream& in, std::ostream* log) {
    LoadedDataset out;
    std::optional<int> categories, threshold, horizon;
    bool seen_columns = false;
    std::vector<RawSubject> subjects;
    std::unordered_map<std::string, std::size_t> index;
    std::map<std::pair<std::size_t, int>, long> row_of;  // (subject, day) -> line

    std::string line;
    long line_no = 0;
    int max_day = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            text.remove_prefix(1);
            const auto colon = text.find(':');
            if (colon == std::string_view::npos) continue;
            const auto key = trim(text.substr(0, colon));
            const auto value = trim(text.substr(colon + 1));
            if (key == "categories" || key == "recovery_threshold" || key == "horizon_days") {
                const auto v = to_int(value);
                if (!v) fail(line_no, "bad integer for " + std::string(key));
                (key == "categories" ? categories : key == "recovery_threshold" ? threshold : horizon) = *v;
            } else if (key == "recode") {
                for (auto pair : split(value, ',')) {
                    const auto eq = pair.find('=');
                    const auto from = eq == std::string_view::npos ? std::nullopt : to_int(pair.substr(0, eq));
                    const auto to = eq == std::string_view::npos ? std::nullopt : to_int(pair.substr(eq + 1));
                    if (!from || !to) fail(line_no, "bad recode entry '" + std::string(pair) + "'");
                    out.recode[*from] = *to;
                }
            }
            continue;
        }
        const auto fields = split(text, ',');
        if (!seen_columns) {
            if (fields.size() != 4 || fields[0] != "subject_id" || fields[1] != "arm" ||
                fields[2] != "day" || fields[3] != "score") {
                fail(line_no, "expected header subject_id,arm,day,score");
            }
            seen_columns = true;
            continue;
        }
        if (fields.size() != 4) fail(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        if (fields[0].empty()) fail(line_no, "empty subject_id");
        const auto arm = to_int(fields[1]);
        const auto day = to_int(fields[2]);
        auto score = to_int(fields[3]);
        if (!arm || (*arm != 0 && *arm != 1)) fail(line_no, "arm must be 0 or 1");
        if (!day || *day < 1) fail(line_no, "day must be an integer >= 1");
        if (!score) fail(line_no, "score must be an integer");
        if (!out.recode.empty()) {
            const auto it = out.recode.find(*score);
            if (it == out.recode.end()) fail(line_no, "score " + std::to_string(*score) + " not in recode map");
            score = it->second;
        }

        const std::string id(fields[0]);
        auto [it, inserted] = index.try_emplace(id, subjects.size());
        if (inserted) subjects.push_back({id, static_cast<Arm>(*arm), {}});
        auto& subject = subjects[it->second];
        if (arm_index(subject.arm) != *arm) fail(line_no, "subject " + id + " changes arm");
        const auto [row, fresh] = row_of.try_emplace({it->second, *day}, line_no);
        if (!fresh) {
            fail(line_no, "duplicate row for subject " + id + " day " + std::to_string(*day) +
                              " (first on line " + std::to_string(row->second) + ")");
        }
        subject.scores[*day] = *score;
        max_day = std::max(max_day, *day);
    }
    if (!seen_columns) throw DataError("no header row subject_id,arm,day,score");

    auto& ds = out.dataset;
    ds.categories = categories.value_or(kDefaultCategories);
    ds.recovery_threshold = threshold.value_or(1);
    ds.horizon_days = horizon.value_or(max_day);
    if (ds.categories < 2) throw DataError("categories must be at least 2");
    if (ds.horizon_days < 1) throw DataError("dataset has no observations");
    if (ds.recovery_threshold < 1 || ds.recovery_threshold >= ds.categories) {
        throw DataError("recovery_threshold must lie in [1, categories-1]");
    }
    if (max_day > ds.horizon_days) {
        throw DataError("day " + std::to_string(max_day) + " exceeds horizon_days " +
                        std::to_string(ds.horizon_days));
    }

    long observed = 0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto& s = subjects[i];
        std::vector<std::optional<int>> grid(static_cast<std::size_t>(ds.horizon_days));
        for (const auto& [day, score] : s.scores) {
            if (score < 1 || score > ds.categories) {
                fail(row_of.at({i, day}), "subject " + s.id + " day " + std::to_string(day) + ": score " +
                                              std::to_string(score) + " outside [1, " +
                                              std::to_string(ds.categories) + "]");
            }
            grid[static_cast<std::size_t>(day - 1)] = score;
        }
        observed += static_cast<long>(s.scores.size());
        ds.trajectories.emplace_back(s.id, s.arm, grid, ds.categories);
        if (ds.trajectories.back().has_absorbing_violation(ds.recovery_threshold)) {
            out.warnings.push_back("subject " + s.id + " leaves an absorbing state (kept as recorded)");
        }
    }

    const auto n_control = ds.arm_size(Arm::control);
    const auto n_treatment = ds.arm_size(Arm::treatment);
    if (log) {
        const double cells = static_cast<double>(subjects.size()) * ds.horizon_days;
        *log << "loaded " << subjects.size() << " subjects: control " << n_control << ", treatment "
             << n_treatment << "; " << observed << " of " << static_cast<long>(cells)
             << " subject-days observed (" << std::fixed << std::setprecision(1)
             << (cells > 0 ? 100.0 * (1.0 - observed / cells) : 0.0) << "% missing)\n"
             << std::defaultfloat;
        for (const auto& w : out.warnings) *log << "warning: " << w << '\n';
    }
    if (n_control == 0 || n_treatment == 0) {
        throw DataError(std::string("arm ") + (n_control == 0 ? "0 (control)" : "1 (treatment)") +
                        " has no subjects");
    }
    return out;
}

LoadedDataset load_dataset(const std::string& path, std::ostream* log) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_dataset(in, log);
}

void write_dataset(const TrialDataset& dataset, std::ostream& out) {
    out << "# categories: " << dataset.categories << '\n'
        << "# recovery_threshold: " << dataset.recovery_threshold << '\n'
        << "# horizon_days: " << dataset.horizon_days << '\n'
        << "subject_id,arm,day,score\n";
    for (const auto& t : dataset.trajectories) {
        for (int d = 1; d <= t.horizon_days(); ++d) {
            if (const auto s = t.at(d)) {
                out << t.subject_id() << ',' << arm_index(t.arm()) << ',' << d << ',' << *s << '\n';
            }
        }
    }
}

void save_dataset(const TrialDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write_dataset(dataset, out);
    if (!out) throw DataError("write failed for " + path);
}

}  // namespace trialpower
