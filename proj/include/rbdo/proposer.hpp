#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rbdo/problem.hpp"
#include "rbdo/reliability.hpp"
#include "rbdo/sampling.hpp"

#include <httplib.h>
#ifdef _res
#undef _res  // glibc resolv.h macro; clashes with template parameter names downstream
#endif
#include <nlohmann/json.hpp>

namespace rbdo {

// Rolling window of the K most recent evaluated designs, oldest first.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("HistoryBuffer: capacity must be >= 1");
  }

  void push(EvaluatedDesign e) {
    entries_.push_back(std::move(e));
    while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
  }

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const EvaluatedDesign& operator[](int i) const { return entries_[static_cast<size_t>(i)]; }
  const std::deque<EvaluatedDesign>& entries() const { return entries_; }

  // Entry with lexicographically smallest (penalty, cost); earliest on ties.
  const EvaluatedDesign& best() const {
    if (entries_.empty()) throw std::invalid_argument("HistoryBuffer: empty");
    const EvaluatedDesign* b = &entries_.front();
    for (const auto& e : entries_)
      if (e.penalty < b->penalty || (e.penalty == b->penalty && e.cost < b->cost)) b = &e;
    return *b;
  }

 private:
  int capacity_;
  std::deque<EvaluatedDesign> entries_;
};

// Text blocks of the proposal prompt. All strings are template material the
// caller may edit; rendering only stitches them around the numeric content.
struct PromptSpec {
  std::string role_preamble;
  std::vector<std::string> variable_names;
  std::string guidance;
  std::string diversity_instruction;
  std::string output_directive;
};

inline PromptSpec default_prompt_spec(int nd) {
  PromptSpec s;
  for (int i = 1; i <= nd; ++i) s.variable_names.push_back("x" + std::to_string(i));
  s.role_preamble =
      "You are an optimization algorithm assistant. Your task is to propose the next "
      "design point for a constrained minimization problem.";
  s.guidance =
      "The penalty value measures how far a design falls short of the reliability "
      "constraints; a design is acceptable only when its penalty is zero. Propose a point "
      "that keeps the penalty at zero while decreasing the cost. Prefer new points near "
      "previous points with the lowest penalty values, and consider how your changes "
      "affect both the penalty and the cost.";
  s.diversity_instruction =
      "If consecutive iterations produce highly similar solutions, introduce greater "
      "diversity in your proposal: adjust the search region or add randomness to explore "
      "new areas of the design space.";
  std::string keys;
  for (int i = 1; i <= nd; ++i) {
    keys += "\"x" + std::to_string(i) + "\": value";
    if (i < nd) keys += ", ";
  }
  s.output_directive = "Output the next design point in strict JSON format: [ {" + keys +
                       "} ] and output nothing else.";
  return s;
}

// Affine map from problem units to the [0,100] prompt space.
inline Vec scale_to_prompt(const DesignVector& d, const Bounds& bounds) {
  if (d.dim() != bounds.dim()) throw std::invalid_argument("scale_to_prompt: dimension mismatch");
  return 100.0 * (d.values() - bounds.lower()).cwiseQuotient(bounds.width());
}

// Inverse map back to problem units. Coordinates outside [0,100] are clamped
// (models occasionally overshoot); *clamped_count reports how many were.
inline DesignVector unscale_from_prompt(const Vec& s, const Bounds& bounds,
                                        int* clamped_count = nullptr) {
  if (s.size() != bounds.dim())
    throw std::invalid_argument("unscale_from_prompt: dimension mismatch");
  int clamped = 0;
  Vec d(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    double v = s[i];
    if (v < 0.0 || v > 100.0) {
      v = std::min(std::max(v, 0.0), 100.0);
      ++clamped;
    }
    d[i] = bounds.lower()[i] + v / 100.0 * (bounds.upper()[i] - bounds.lower()[i]);
  }
  if (clamped_count) *clamped_count = clamped;
  // the affine reconstruction can overshoot an endpoint by one ulp
  return DesignVector(bounds.clamp(d), bounds);
}

namespace detail {

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

}  // namespace detail

// Deterministic prompt text: role, scaled variable ranges, guidance, the
// history block (one line per entry, penalty before cost), the diversity
// instruction and the output directive.
inline std::string render_prompt(const PromptSpec& spec, const HistoryBuffer& history,
                                 const Bounds& bounds) {
  if (history.empty()) throw std::invalid_argument("render_prompt: history must be non-empty");
  if (static_cast<int>(spec.variable_names.size()) != bounds.dim())
    throw std::invalid_argument("render_prompt: variable name count mismatch");

  std::string out = spec.role_preamble;
  out += "\n\nDesign variables (all coordinates are scaled to the range [0, 100]):\n";
  for (const auto& name : spec.variable_names)
    out += "  " + name + ": 0.00 to 100.00\n";
  out += "\n" + spec.guidance + "\n";
  out += "\nOptimization history, most recent last:\n";
  for (int i = 0; i < history.size(); ++i) {
    const auto& e = history[i];
    const Vec s = scale_to_prompt(e.design, bounds);
    out += "  point " + std::to_string(i + 1) + ": [";
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      out += detail::fixed2(s[j]);
      if (j + 1 < s.size()) out += ", ";
    }
    out += "], penalty = " + detail::fixed(e.penalty, 6) + ", cost = " + detail::fixed(e.cost, 4) +
           "\n";
  }
  out += "\n" + spec.diversity_instruction + "\n";
  out += "\n" + spec.output_directive + "\n";
  return out;
}

namespace detail {

// Spans of balanced [...] blocks outside string literals.
inline std::vector<std::pair<size_t, size_t>> bracket_spans(const std::string& text) {
  std::vector<std::pair<size_t, size_t>> spans;
  std::vector<size_t> stack;
  bool in_string = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '[')
      stack.push_back(i);
    else if (c == ']' && !stack.empty()) {
      spans.emplace_back(stack.back(), i);
      stack.pop_back();
    }
  }
  return spans;
}

}  // namespace detail

// Extracts the first well-formed single-object array with numeric keys
// x1..x{nd} from free-form response text (code fences and prose are
// tolerated), then maps it back to problem units.
inline DesignVector parse_proposal(const std::string& text, int nd, const Bounds& bounds,
                                   int* clamped_count = nullptr) {
  auto spans = detail::bracket_spans(text);
  // earliest opening bracket first, shortest span on ties
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  for (const auto& [open, close] : spans) {
    const auto j =
        nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.size() != 1 || !j[0].is_object()) continue;
    Vec scaled(nd);
    bool ok = true;
    for (int i = 0; i < nd; ++i) {
      const std::string key = "x" + std::to_string(i + 1);
      if (!j[0].contains(key) || !j[0][key].is_number()) {
        ok = false;
        break;
      }
      scaled[i] = j[0][key].get<double>();
    }
    if (!ok) continue;
    return unscale_from_prompt(scaled, bounds, clamped_count);
  }
  throw ParseError("parse_proposal: no well-formed design point found in response");
}

enum class BackendKind { Scripted, Remote };

struct BackendConfig {
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint = "https://api.deepseek.com/chat/completions";
  std::string model = "deepseek-chat";
  double temperature = 0.2;
  double top_p = 0.9;
  int timeout_seconds = 60;
  int max_parse_retries = 3;
  std::string api_key_env = "RBDO_LLM_API_KEY";
  // scripted policy: after this many proposals without a history-best
  // improvement, emit one uniform exploration point and reset the step
  // decay (the offline analog of the prompt's diversity instruction)
  int scripted_diversify_after = 3;

  void validate() const {
    if (temperature < 0) throw ConfigError("BackendConfig: temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("BackendConfig: top_p must be in (0,1]");
    if (max_parse_retries < 1) throw ConfigError("BackendConfig: need at least one attempt");
  }
};

// Next-point generator. The remote backend speaks the chat-completion
// protocol; the scripted backend is a deterministic stand-in policy so the
// whole loop runs offline. Every attempt is appended to the transcript sink
// as one JSON line {generation, attempt, prompt, response, parsed, fallback}.
class Proposer {
 public:
  Proposer(BackendConfig cfg, PromptSpec spec, Bounds bounds, Vec fallback_sigma)
      : cfg_(std::move(cfg)),
        spec_(std::move(spec)),
        bounds_(std::move(bounds)),
        fallback_sigma_(std::move(fallback_sigma)) {
    cfg_.validate();
    if (fallback_sigma_.size() != bounds_.dim())
      throw std::invalid_argument("Proposer: fallback sigma dimension mismatch");
    if (cfg_.kind == BackendKind::Remote) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key)
        throw ConfigError("remote backend requires the '" + cfg_.api_key_env +
                          "' environment variable");
      api_key_ = key;
    }
  }

  void set_transcript(std::ostream* sink) { transcript_ = sink; }
  int fallback_count() const { return fallback_count_; }

  DesignVector propose(const HistoryBuffer& history, RngStream& rng, int generation,
                       bool* used_fallback = nullptr) {
    if (used_fallback) *used_fallback = false;
    if (cfg_.kind == BackendKind::Scripted) return propose_scripted(history, rng);
    return propose_remote(history, rng, generation, used_fallback);
  }

 private:
  // (1+1)-style offline policy: Gaussian step from the history's best
  // (penalty, cost) entry, step size decaying per call. When the history
  // best stops improving it interleaves uniform exploration points, the
  // scripted counterpart of the diversity instruction in the prompt.
  DesignVector propose_scripted(const HistoryBuffer& history, RngStream& rng) {
    const EvaluatedDesign& base = history.best();
    if (base.penalty < best_seen_penalty_ ||
        (base.penalty == best_seen_penalty_ && base.cost < best_seen_cost_)) {
      stale_calls_ = 0;
      best_seen_penalty_ = base.penalty;
      best_seen_cost_ = base.cost;
    } else {
      ++stale_calls_;
    }

    if (cfg_.scripted_diversify_after > 0 && stale_calls_ >= cfg_.scripted_diversify_after) {
      stale_calls_ = 0;
      scripted_calls_ = 0;  // restart the step-size decay as well
      Vec jump(bounds_.dim());
      for (int i = 0; i < bounds_.dim(); ++i)
        jump[i] = rng.uniform(bounds_.lower()[i], bounds_.upper()[i]);
      return DesignVector(jump, bounds_);
    }

    const Vec range = bounds_.width();
    const double decay = std::pow(0.95, scripted_calls_++);
    Vec step(bounds_.dim());
    for (int i = 0; i < bounds_.dim(); ++i) step[i] = rng.normal(0.0, 0.05 * range[i] * decay);
    const Vec raw = base.design.values() + step;
    return DesignVector(bounds_.clamp(raw), bounds_);
  }

  DesignVector propose_remote(const HistoryBuffer& history, RngStream& rng, int generation,
                              bool* used_fallback) {
    const std::string prompt = render_prompt(spec_, history, bounds_);
    for (int attempt = 1; attempt <= cfg_.max_parse_retries; ++attempt) {
      std::string response;
      if (!send_request(prompt, response)) {
        record(generation, attempt, prompt, response, std::nullopt, false);
        continue;
      }
      try {
        int clamped = 0;
        DesignVector point = parse_proposal(response, bounds_.dim(), bounds_, &clamped);
        record(generation, attempt, prompt, response, point, false, clamped);
        return point;
      } catch (const ParseError&) {
        record(generation, attempt, prompt, response, std::nullopt, false);
      }
    }
    // all attempts exhausted: perturb the best known point instead
    if (used_fallback) *used_fallback = true;
    ++fallback_count_;
    RngStream frng(rng.next_u64(), streams::fallback);
    const Mat cloud = gaussian_cloud(history.best().design, fallback_sigma_, 1, frng);
    DesignVector out(bounds_.clamp(cloud.row(0).transpose()), bounds_);
    record(generation, cfg_.max_parse_retries, prompt, "", out, true);
    return out;
  }

  // POST one chat-completion request; false means "retry if attempts remain".
  bool send_request(const std::string& prompt, std::string& response_text) {
    const auto [origin, path] = split_url(cfg_.endpoint);
    httplib::Client client(origin);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);

    nlohmann::json body{{"model", cfg_.model},
                        {"temperature", cfg_.temperature},
                        {"top_p", cfg_.top_p},
                        {"messages", {{{"role", "user"}, {"content", prompt}}}}};
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      response_text = "<transport error: " + httplib::to_string(res.error()) + ">";
      return false;
    }
    if (res->status == 401 || res->status == 403)
      throw ConfigError("remote backend authentication failed (HTTP " +
                        std::to_string(res->status) + ")");
    if (res->status != 200) {
      response_text = "<http " + std::to_string(res->status) + ">";
      return false;
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      response_text = res->body;
      return false;
    }
    const auto& first = j["choices"][0];
    if (first.contains("message") && first["message"].contains("content"))
      response_text = first["message"]["content"].get<std::string>();
    else if (first.contains("text"))
      response_text = first["text"].get<std::string>();
    else {
      response_text = res->body;
      return false;
    }
    return true;
  }

  static std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("backend endpoint needs scheme://host");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
  }

  void record(int generation, int attempt, const std::string& prompt,
              const std::string& response, const std::optional<DesignVector>& parsed,
              bool fallback, int clamped = 0) {
    if (!transcript_) return;
    nlohmann::json rec{{"generation", generation},
                       {"attempt", attempt},
                       {"prompt", prompt},
                       {"response", response},
                       {"fallback", fallback}};
    if (clamped > 0) rec["clamped_coordinates"] = clamped;  // model overshot [0,100]
    if (parsed) {
      rec["parsed"] = std::vector<double>(parsed->values().data(),
                                          parsed->values().data() + parsed->dim());
    } else {
      rec["parsed"] = nullptr;
    }
    (*transcript_) << rec.dump() << '\n';
    transcript_->flush();
  }

  BackendConfig cfg_;
  PromptSpec spec_;
  Bounds bounds_;
  Vec fallback_sigma_;
  std::string api_key_;
  std::ostream* transcript_ = nullptr;
  int scripted_calls_ = 0;
  int stale_calls_ = 0;
  double best_seen_penalty_ = std::numeric_limits<double>::infinity();
  double best_seen_cost_ = std::numeric_limits<double>::infinity();
  int fallback_count_ = 0;
};

}  // namespace rbdo
