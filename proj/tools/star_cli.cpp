// star: batch front-end over the star C library.
//
//   star score      --input records.jsonl [--schema tools.json] [--output out.jsonl]
//   star kd         --input kd.jsonl --loss ckd [--k K] [--m M] [--lambda L] [--output out.csv]
//   star gradcheck  [--seed S] [--trials N] [--dims C] [--k K] [--m M] [--lambda L]
//   star train-toy  --task task.json [--config cfg.json] [--seed S] [--output log.csv]
//   star advantages --input groups.jsonl [--output out.jsonl]
//
// Exit status: 0 success, 1 validation failures, 2 I/O or format errors.

#include "star/star.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitFormat = 2;

// Raised for I/O and input-format problems; maps to exit status 2.
struct FormatFailure {
    std::string message;
};

std::string num(double value) {
    char buf[64];
    star_format_number(value, buf, sizeof buf);
    return buf;
}

std::string dump(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatFailure{"cannot open '" + path + "'"};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") != std::string::npos) {
            lines.push_back(line);
        }
    }
    return lines;
}

json parse_line(const std::string& line, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw FormatFailure{"line " + std::to_string(lineno) + ": " + e.what()};
    }
}

// Output sink: a file when a path is given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) {
                throw FormatFailure{"cannot write '" + path + "'"};
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

struct SchemaDeleter {
    void operator()(star_schema* s) const { star_schema_free(s); }
};
struct RewardDeleter {
    void operator()(star_reward* r) const { star_reward_free(r); }
};
struct TaskDeleter {
    void operator()(star_toy_task* t) const { star_toy_task_free(t); }
};
struct LogDeleter {
    void operator()(star_train_log* l) const { star_train_log_free(l); }
};
using SchemaHandle = std::unique_ptr<star_schema, SchemaDeleter>;

std::string take_string(char* s) {
    std::string out(s);
    star_string_free(s);
    return out;
}

// ---- score ---------------------------------------------------------------

struct ScoreOptions {
    std::string input;
    std::string schema;
    std::string output;
};

SchemaHandle load_schema_text(const std::string& text) {
    star_schema* raw = nullptr;
    if (star_schema_parse(text.c_str(), &raw) != STAR_OK) {
        throw FormatFailure{std::string("schema: ") + star_last_error()};
    }
    return SchemaHandle(raw);
}

int cmd_score(const ScoreOptions& opt) {
    const auto lines = read_lines(opt.input);
    std::map<std::string, SchemaHandle> schemas;
    auto schema_for = [&](const std::string& key, bool inline_text) -> const star_schema* {
        auto it = schemas.find(key);
        if (it == schemas.end()) {
            it = schemas.emplace(key, load_schema_text(inline_text ? key : read_file(key))).first;
        }
        return it->second.get();
    };

    Output out(opt.output);
    std::set<std::string> ids;
    std::size_t failures = 0;
    double total = 0.0;
    std::size_t scored = 0;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto rec = parse_line(lines[n], n + 1);
        if (!rec.is_object() || !rec.contains("generation") || !rec.contains("ground_truth") ||
            !rec["generation"].is_string() || !rec["ground_truth"].is_string()) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": record needs string generation and ground_truth"};
        }
        const std::string id =
            rec.contains("id") ? (rec["id"].is_string() ? rec["id"].get<std::string>() : dump(rec["id"]))
                               : std::to_string(n);
        if (!ids.insert(id).second) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": duplicate id '" + id + "'"};
        }

        const star_schema* schema = nullptr;
        if (auto it = rec.find("schema"); it != rec.end() && !it->is_null()) {
            if (it->is_string()) {
                const auto& s = it->get_ref<const std::string&>();
                const bool inline_text = s.find_first_of("[{") == s.find_first_not_of(" \t\r\n");
                schema = schema_for(s, inline_text);
            } else {
                schema = schema_for(dump(*it), true);
            }
        } else if (!opt.schema.empty()) {
            schema = schema_for(opt.schema, false);
        } else {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": no schema in record and no --schema given"};
        }

        star_reward* raw = nullptr;
        const auto status = star_reward_compute(schema, rec["generation"].get_ref<const std::string&>().c_str(),
                                                rec["ground_truth"].get_ref<const std::string&>().c_str(), &raw);
        const std::string id_json = dump(json(id));
        if (status != STAR_OK) {
            ++failures;
            std::cerr << "score: record " << id << ": " << star_status_name(status) << ": " << star_last_error()
                      << '\n';
            out.stream() << "{\"id\":" << id_json << ",\"error\":" << dump(json(star_status_name(status)))
                         << ",\"detail\":" << dump(json(star_last_error())) << "}\n";
            continue;
        }
        std::unique_ptr<star_reward, RewardDeleter> reward(raw);
        char* text = nullptr;
        if (star_reward_to_json(reward.get(), &text) != STAR_OK) {
            throw FormatFailure{star_last_error()};
        }
        const auto body = take_string(text);
        out.stream() << "{\"id\":" << id_json << ',' << body.substr(1) << '\n';
        total += star_reward_total(reward.get());
        ++scored;
    }
    std::cerr << "score: " << scored << " records scored";
    if (scored > 0) {
        std::cerr << ", mean total reward " << num(total / static_cast<double>(scored));
    }
    if (failures > 0) {
        std::cerr << ", " << failures << " failed";
    }
    std::cerr << '\n';
    return failures > 0 ? kExitValidation : kExitOk;
}

// ---- kd ------------------------------------------------------------------

struct KdOptions {
    std::string input;
    std::string output;
    std::string loss = "ckd";
    std::optional<std::size_t> k;
    std::optional<std::size_t> m;
    double lambda = 10.0;
};

int cmd_kd(const KdOptions& opt) {
    star_loss_kind kind{};
    if (star_loss_kind_parse(opt.loss.c_str(), &kind) != STAR_OK) {
        throw FormatFailure{star_last_error()};
    }
    const auto lines = read_lines(opt.input);
    if (lines.empty()) {
        throw FormatFailure{"kd: missing header line"};
    }
    const auto header = parse_line(lines[0], 1);
    if (!header.is_object() || header.value("format", "") != "star-kd" || !header.contains("vocab_size") ||
        !header["vocab_size"].is_number_unsigned()) {
        throw FormatFailure{"kd: header must be {\"format\": \"star-kd\", \"version\": 1, \"vocab_size\": C}"};
    }
    if (header.value("version", 0) != 1) {
        throw FormatFailure{"kd: unsupported version"};
    }
    const auto vocab = header["vocab_size"].get<std::size_t>();
    if (vocab == 0) {
        throw FormatFailure{"kd: vocab_size must be positive"};
    }
    const std::size_t m = opt.m.value_or(std::min<std::size_t>(100, vocab));

    Output out(opt.output);
    auto& os = out.stream();
    os << "# star-kd-report v1\n";
    os << "position_id,loss,escape_mass,entropy\n";
    double sum_loss = 0.0;
    double sum_escape = 0.0;
    double sum_entropy = 0.0;
    std::size_t ok = 0;
    std::size_t failures = 0;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto rec = parse_line(lines[n], n + 1);
        std::vector<std::size_t> indices;
        std::vector<double> probs;
        std::vector<double> logits;
        std::string position;
        try {
            indices = rec.at("teacher_indices").get<std::vector<std::size_t>>();
            probs = rec.at("teacher_probs").get<std::vector<double>>();
            logits = rec.at("student_logits").get<std::vector<double>>();
            const auto& pid = rec.at("position_id");
            position = pid.is_string() ? pid.get<std::string>() : dump(pid);
        } catch (const json::exception& e) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": " + e.what()};
        }
        if (logits.size() != vocab) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": student_logits length differs from vocab_size"};
        }
        if (indices.size() != probs.size()) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": teacher_indices and teacher_probs differ in length"};
        }
        for (auto idx : indices) {
            if (idx >= vocab) {
                throw FormatFailure{"line " + std::to_string(n + 1) + ": teacher index " + std::to_string(idx) +
                                    " out of bounds for vocab_size " + std::to_string(vocab)};
            }
        }
        if (opt.k) {
            if (*opt.k < 1 || *opt.k > indices.size()) {
                throw FormatFailure{"line " + std::to_string(n + 1) + ": --k exceeds the stored teacher entries"};
            }
            std::vector<std::size_t> order(indices.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return probs[a] > probs[b] || (probs[a] == probs[b] && indices[a] < indices[b]);
            });
            std::vector<std::size_t> ki;
            std::vector<double> kp;
            for (std::size_t i = 0; i < *opt.k; ++i) {
                ki.push_back(indices[order[i]]);
                kp.push_back(probs[order[i]]);
            }
            indices = std::move(ki);
            probs = std::move(kp);
        }
        star_loss_summary summary{};
        const auto status = star_kd_loss(kind, indices.data(), probs.data(), indices.size(), logits.data(), vocab, m,
                                         opt.lambda, &summary, nullptr);
        if (status == STAR_E_DEGENERATE_STUDENT || status == STAR_E_DEGENERATE_TEACHER) {
            ++failures;
            std::cerr << "kd: position " << position << ": " << star_last_error() << '\n';
            os << "# position " << position << ": " << star_status_name(status) << '\n';
            continue;
        }
        if (status != STAR_OK) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": " + star_last_error()};
        }
        os << position << ',' << num(summary.loss) << ',' << num(summary.escape_mass) << ',' << num(summary.entropy)
           << '\n';
        sum_loss += summary.loss;
        sum_escape += summary.escape_mass;
        sum_entropy += summary.entropy;
        ++ok;
    }
    if (ok > 0) {
        const auto d = static_cast<double>(ok);
        os << "mean," << num(sum_loss / d) << ',' << num(sum_escape / d) << ',' << num(sum_entropy / d) << '\n';
    } else {
        os << "mean,,,\n";
    }
    return failures > 0 ? kExitValidation : kExitOk;
}

// ---- gradcheck -----------------------------------------------------------

struct GradcheckOptions {
    std::uint64_t seed = 0;
    std::size_t trials = 50;
    std::size_t dims = 32;
    std::size_t k = 8;
    std::size_t m = 16;
    double lambda = 10.0;
};

int cmd_gradcheck(const GradcheckOptions& opt) {
    if (opt.trials == 0) {
        std::cerr << "gradcheck: warning: --trials 0 checks nothing; passing vacuously\n";
    }
    const std::pair<star_loss_kind, const char*> kinds[] = {{STAR_LOSS_FKL, "fkl"},
                                                             {STAR_LOSS_TAIL, "tail"},
                                                             {STAR_LOSS_CKD, "ckd"},
                                                             {STAR_LOSS_RKL, "rkl"},
                                                             {STAR_LOSS_RKL_STABILIZED, "rkl-stab"}};
    bool all_passed = true;
    for (const auto& [kind, name] : kinds) {
        star_gradcheck_result r{};
        if (star_gradcheck(kind, opt.seed, opt.trials, opt.dims, opt.k, opt.m, opt.lambda, &r) != STAR_OK) {
            throw FormatFailure{star_last_error()};
        }
        all_passed = all_passed && r.passed;
        std::cout << name << ": max_rel_error=" << num(r.max_relative_error) << " max_grad_sum=" << num(r.max_grad_sum)
                  << " accepted=" << r.accepted << " excluded_near_boundary=" << r.excluded << ' '
                  << (r.passed ? "PASS" : "FAIL") << '\n';
    }
    return all_passed ? kExitOk : kExitValidation;
}

// ---- train-toy -----------------------------------------------------------

struct TrainOptions {
    std::string task;
    std::string config;
    std::uint64_t seed = 0;
    std::string output;
    std::optional<double> epsilon;
    std::optional<double> beta;
};

int cmd_train_toy(const TrainOptions& opt) {
    star_toy_task* raw_task = nullptr;
    if (star_toy_task_load(opt.task.c_str(), &raw_task) != STAR_OK) {
        throw FormatFailure{std::string("task: ") + star_last_error()};
    }
    std::unique_ptr<star_toy_task, TaskDeleter> task(raw_task);

    json cfg = json::object();
    if (!opt.config.empty()) {
        try {
            cfg = json::parse(read_file(opt.config));
        } catch (const json::exception& e) {
            throw FormatFailure{"config: " + std::string(e.what())};
        }
    }
    if (opt.epsilon) {
        cfg["epsilon"] = *opt.epsilon;
    }
    if (opt.beta) {
        cfg["beta"] = *opt.beta;
    }
    star_train_log* raw_log = nullptr;
    if (star_train_sim_rl(task.get(), dump(cfg).c_str(), opt.seed, &raw_log) != STAR_OK) {
        throw FormatFailure{std::string("train: ") + star_last_error()};
    }
    std::unique_ptr<star_train_log, LogDeleter> log(raw_log);
    char* csv = nullptr;
    if (star_train_log_to_csv(log.get(), &csv) != STAR_OK) {
        throw FormatFailure{star_last_error()};
    }
    Output out(opt.output);
    out.stream() << take_string(csv);
    const auto rows = star_train_log_size(log.get());
    double last = 0.0;
    if (rows > 0) {
        star_train_log_row(log.get(), rows - 1, &last, nullptr, nullptr);
    }
    std::cout << "iterations: " << rows << "\nfinal mean reward: " << num(last)
              << "\ntrailing-50 mean reward: " << num(star_train_log_trailing_mean(log.get(), 50)) << '\n';
    return kExitOk;
}

// ---- advantages ----------------------------------------------------------

struct AdvantageOptions {
    std::string input;
    std::string output;
};

int cmd_advantages(const AdvantageOptions& opt) {
    const auto lines = read_lines(opt.input);
    Output out(opt.output);
    std::size_t failures = 0;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto rec = parse_line(lines[n], n + 1);
        json group_id = static_cast<std::uint64_t>(n);
        std::vector<double> rewards;
        try {
            if (rec.is_array()) {
                rewards = rec.get<std::vector<double>>();
            } else {
                rewards = rec.at("rewards").get<std::vector<double>>();
                if (rec.contains("group_id")) {
                    group_id = rec["group_id"];
                }
            }
        } catch (const json::exception& e) {
            throw FormatFailure{"line " + std::to_string(n + 1) + ": " + e.what()};
        }
        auto& os = out.stream();
        os << "{\"group_id\":" << dump(group_id) << ',';
        if (rewards.size() < 2) {
            ++failures;
            std::cerr << "advantages: group " << dump(group_id) << ": group size < 2\n";
            os << "\"error\":\"group size < 2\"}\n";
            continue;
        }
        if (star_is_homogeneous(rewards.data(), rewards.size())) {
            os << "\"filtered\":true}\n";
            continue;
        }
        std::vector<double> adv(rewards.size());
        if (star_standardize_advantages(rewards.data(), rewards.size(), adv.data()) != STAR_OK) {
            throw FormatFailure{star_last_error()};
        }
        os << "\"advantages\":[";
        for (std::size_t i = 0; i < adv.size(); ++i) {
            os << (i ? "," : "") << num(adv[i]);
        }
        os << "]}\n";
    }
    return failures > 0 ? kExitValidation : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"star: function-calling rewards, top-k distillation losses and GRPO utilities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(star_version()));

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "score generations against ground truths (JSONL)");
    score_cmd->add_option("--input", score.input, "JSONL records {id, generation, ground_truth, schema?}")->required();
    score_cmd->add_option("--schema", score.schema, "default tool schema file");
    score_cmd->add_option("--output", score.output, "JSONL reward breakdowns (default stdout)");

    KdOptions kd;
    auto* kd_cmd = app.add_subcommand("kd", "evaluate distillation losses per position");
    kd_cmd->add_option("--input", kd.input, "JSONL: header then {position_id, teacher_indices, teacher_probs, student_logits}")
        ->required();
    kd_cmd->add_option("--loss", kd.loss, "fkl | rkl | rkl-stab | ckd | tail")
        ->check(CLI::IsMember({"fkl", "rkl", "rkl-stab", "ckd", "tail"}));
    kd_cmd->add_option("--k", kd.k, "use the top-k of the stored teacher entries");
    kd_cmd->add_option("--m", kd.m, "student top-m for the tail penalty (default min(100, C))");
    kd_cmd->add_option("--lambda", kd.lambda, "tail penalty weight")->capture_default_str();
    kd_cmd->add_option("--output", kd.output, "CSV report (default stdout)");

    GradcheckOptions gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic loss gradients with central differences");
    gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
    gc_cmd->add_option("--trials", gc.trials, "accepted instances per loss")->capture_default_str();
    gc_cmd->add_option("--dims", gc.dims, "vocabulary size")->capture_default_str();
    gc_cmd->add_option("--k", gc.k)->capture_default_str();
    gc_cmd->add_option("--m", gc.m)->capture_default_str();
    gc_cmd->add_option("--lambda", gc.lambda)->capture_default_str();

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train-toy", "run GRPO on a toy function-calling task");
    train_cmd->add_option("--task", train.task, "task JSON")->required();
    train_cmd->add_option("--config", train.config, "training config JSON");
    train_cmd->add_option("--seed", train.seed)->capture_default_str();
    train_cmd->add_option("--output", train.output, "TrainLog CSV (default stdout)");
    train_cmd->add_option("--epsilon", train.epsilon, "clip range override");
    train_cmd->add_option("--beta", train.beta, "KL coefficient override");

    AdvantageOptions adv;
    auto* adv_cmd = app.add_subcommand("advantages", "standardise rewards per rollout group");
    adv_cmd->add_option("--input", adv.input, "JSONL: [r...] or {group_id, rewards}")->required();
    adv_cmd->add_option("--output", adv.output, "JSONL advantages (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitFormat;
    }

    try {
        if (score_cmd->parsed()) return cmd_score(score);
        if (kd_cmd->parsed()) return cmd_kd(kd);
        if (gc_cmd->parsed()) return cmd_gradcheck(gc);
        if (train_cmd->parsed()) return cmd_train_toy(train);
        if (adv_cmd->parsed()) return cmd_advantages(adv);
    } catch (const FormatFailure& f) {
        std::cerr << "star: " << f.message << '\n';
        return kExitFormat;
    }
    return kExitFormat;
}
