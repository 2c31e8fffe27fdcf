#include "genaibench/adapters.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "genaibench/error.hpp"
#include "genaibench/http.hpp"

namespace genaibench {

using json = nlohmann::json;

namespace {

bool is_success(int status) { return status >= 200 && status < 300; }

/// Sleeps until `deadline`; returns false if `stop` fired first.
bool sleep_until(std::chrono::steady_clock::time_point deadline, std::stop_token stop) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  return !cv.wait_until(lock, stop, deadline, [] { return false; }) && !stop.stop_requested();
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::vector<std::string> prompts_for(const TaskDefinition& task, const RequestContext& ctx) {
  const auto pool = task.dataset ? load_prompts(*task.dataset) : builtin_prompts(task.app_kind);
  return sample_prompts(pool, static_cast<std::size_t>(task.num_requests), ctx.seed);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
  return v;
}

std::uint16_t get_u16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

class ChatbotAdapter : public Adapter {
 public:
  std::vector<RequestRecord> execute(ServerHandle& handle, const TaskDefinition& task,
                                     const RequestContext& ctx) override {
    std::vector<RequestRecord> out;
    const auto prompts = prompts_for(task, ctx);
    for (std::size_t i = 0; i < prompts.size() && !ctx.stop.stop_requested(); ++i) {
      out.push_back(chatbot_execute(handle, prompts[i], std::to_string(i), task, ctx));
    }
    return out;
  }
};

class DeepResearchAdapter : public Adapter {
 public:
  std::vector<RequestRecord> execute(ServerHandle& handle, const TaskDefinition& task,
                                     const RequestContext& ctx) override {
    std::vector<RequestRecord> out;
    const auto prompts = prompts_for(task, ctx);
    for (std::size_t i = 0; i < prompts.size() && !ctx.stop.stop_requested(); ++i) {
      out.push_back(deepresearch_execute(handle, prompts[i], std::to_string(i), task, ctx));
    }
    return out;
  }
};

class ImageGenAdapter : public Adapter {
 public:
  std::vector<RequestRecord> execute(ServerHandle& handle, const TaskDefinition& task,
                                     const RequestContext& ctx) override {
    std::vector<RequestRecord> out;
    const auto prompts = prompts_for(task, ctx);
    for (std::size_t i = 0; i < prompts.size() && !ctx.stop.stop_requested(); ++i) {
      out.push_back(imagegen_execute(handle, prompts[i], std::to_string(i), task, ctx));
    }
    return out;
  }
};

class LiveCaptionsAdapter : public Adapter {
 public:
  std::vector<RequestRecord> execute(ServerHandle& handle, const TaskDefinition& task,
                                     const RequestContext& ctx) override {
    const double period = task.profile.period > 0 ? to_seconds(task.profile.period) : 2.0;
    const AudioClip audio = task.dataset ? read_wav(*task.dataset)
                                         : silence(period * std::max(task.profile.units, 1));
    std::vector<RequestRecord> out;
    for (int r = 0; r < task.num_requests && !ctx.stop.stop_requested(); ++r) {
      auto recs = livecaptions_execute(handle, audio, period, std::to_string(r), task, ctx);
      out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
  }
};

class SyntheticAdapter : public Adapter {
 public:
  std::unique_ptr<ServerHandle> setup(const TaskDefinition& task, const Placement&) override {
    auto h = std::make_unique<ServerHandle>();
    h->model = task.model;
    return h;
  }
  std::vector<RequestRecord> execute(ServerHandle&, const TaskDefinition& task, const RequestContext& ctx) override {
    std::vector<RequestRecord> out;
    for (int i = 0; i < task.num_requests && !ctx.stop.stop_requested(); ++i) {
      out.push_back(synthetic_execute(task.profile, std::to_string(i), task, ctx));
    }
    return out;
  }
};

}  // namespace

// ------------------------------------------------------------- ServerHandle

void ServerHandle::acquire(int n) {
  std::lock_guard lock(mutex_);
  refs_ += n;
}

int ServerHandle::release() {
  std::lock_guard lock(mutex_);
  if (refs_ == 0) return -1;
  return --refs_;
}

int ServerHandle::refs() const {
  std::lock_guard lock(mutex_);
  return refs_;
}

// ------------------------------------------------------------------ Adapter

std::unique_ptr<ServerHandle> Adapter::setup(const TaskDefinition& task, const Placement& placement) {
  return launch_server(task, placement);
}

void Adapter::cleanup(ServerHandle& handle) {
  if (handle.process) handle.process->terminate();
  handle.process.reset();
}

AdapterRegistry AdapterRegistry::builtin() {
  AdapterRegistry r;
  r.add(AppKind::chatbot, [] { return std::make_shared<ChatbotAdapter>(); });
  r.add(AppKind::deep_research, [] { return std::make_shared<DeepResearchAdapter>(); });
  r.add(AppKind::imagegen, [] { return std::make_shared<ImageGenAdapter>(); });
  r.add(AppKind::live_captions, [] { return std::make_shared<LiveCaptionsAdapter>(); });
  r.add(AppKind::synthetic, [] { return std::make_shared<SyntheticAdapter>(); });
  return r;
}

void AdapterRegistry::add(AppKind kind, Factory factory) { factories_[kind] = std::move(factory); }

std::shared_ptr<Adapter> AdapterRegistry::get(AppKind kind) const {
  auto it = factories_.find(kind);
  if (it == factories_.end()) throw AdapterNotFound("no adapter registered for '" + std::string(to_string(kind)) + "'");
  return it->second();
}

std::unique_ptr<ServerHandle> shared_setup(const std::vector<TaskDefinition>& tasks, const Placement& placement,
                                           Adapter& adapter) {
  if (tasks.empty()) throw PreconditionError("shared_setup needs at least one task");
  Placement merged = placement;
  const auto& first = tasks.front();
  std::optional<KvCache> kv;
  for (const auto& t : tasks) {
    if (t.model != first.model) {
      throw ConfigConflict("tasks '" + first.name + "' and '" + t.name + "' share a server but name different models");
    }
    if (t.device != first.device) {
      throw ConfigConflict("tasks '" + first.name + "' and '" + t.name + "' share a server but differ in device");
    }
    if (t.kv_cache == KvCache::unspecified) continue;
    if (kv && *kv != t.kv_cache) {
      throw ConfigConflict("sharers of one server disagree on KV-cache placement ('" + t.name + "' wants " +
                           std::string(to_string(t.kv_cache)) + ")");
    }
    kv = t.kv_cache;
  }
  if (kv) merged.kv_cache_on_cpu = *kv == KvCache::cpu;
  TaskDefinition lead = first;
  if (kv) lead.kv_cache = *kv;
  auto handle = adapter.setup(lead, merged);
  handle->acquire(static_cast<int>(tasks.size()));
  return handle;
}

bool release_shared(ServerHandle& handle, Adapter& adapter) {
  if (handle.release() != 0) return false;
  adapter.cleanup(handle);
  return true;
}

// ---------------------------------------------------------------- launching

std::vector<std::string> expand_launch(const std::vector<std::string>& argv_template, const TaskDefinition& task,
                                       const Placement& placement, int port) {
  const bool kv_cpu = placement.kv_cache_on_cpu || task.kv_cache == KvCache::cpu;
  std::vector<std::string> out;
  for (const auto& arg : argv_template) {
    auto a = replace_all(arg, "{model}", task.model);
    a = replace_all(a, "{port}", std::to_string(port));
    a = replace_all(a, "{share}", std::to_string(placement.partition_share));
    a = replace_all(a, "{kv_cache_flag}", kv_cpu ? "--no-kv-offload" : "");
    if (!a.empty()) out.push_back(std::move(a));
  }
  return out;
}

std::unique_ptr<ServerHandle> launch_server(const TaskDefinition& task, const Placement& placement,
                                            double ready_timeout_s) {
  auto handle = std::make_unique<ServerHandle>();
  handle->model = task.model;
  if (task.launch.empty()) {
    if (!task.endpoint) throw LaunchError("task '" + task.name + "' has neither an endpoint nor a launch command");
    handle->endpoint = *task.endpoint;
    if (!http::reachable(handle->endpoint, "/health", 5.0)) {
      throw ConnectionError("endpoint " + handle->endpoint + " of task '" + task.name + "' is not reachable");
    }
    return handle;
  }

  const int port = http::free_port();
  handle->argv = expand_launch(task.launch, task, placement, port);
  handle->endpoint = task.endpoint ? replace_all(*task.endpoint, "{port}", std::to_string(port))
                                   : "http://127.0.0.1:" + std::to_string(port);
  SpawnOptions opts;
  opts.argv = handle->argv;
  opts.extra_env = placement.env;
  handle->process = Subprocess::spawn(opts);

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(ready_timeout_s);
  while (true) {
    if (auto status = handle->process->try_wait()) {
      throw LaunchError("server for '" + task.name + "' exited with status " + std::to_string(*status) +
                        " before becoming ready");
    }
    if (http::reachable(handle->endpoint, "/health", 1.0)) return handle;
    if (std::chrono::steady_clock::now() > deadline) {
      handle->process->terminate();
      throw LaunchError("server for '" + task.name + "' not ready after " + format_double(ready_timeout_s) + "s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
}

// ----------------------------------------------------------------- datasets

std::vector<std::string> load_prompts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset " + path.string());
  std::vector<std::string> out;
  std::string line;
  const bool jsonl = path.extension() == ".jsonl";
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!jsonl) {
      out.push_back(line);
      continue;
    }
    try {
      const auto j = json::parse(line);
      for (const char* key : {"prompt", "text", "question"}) {
        if (j.contains(key) && j.at(key).is_string()) {
          out.push_back(j.at(key).get<std::string>());
          break;
        }
      }
    } catch (const json::exception& e) {
      throw Error("malformed JSON line in " + path.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw Error("dataset " + path.string() + " has no prompts");
  return out;
}

std::vector<std::string> sample_prompts(const std::vector<std::string>& prompts, std::size_t n, std::uint64_t seed) {
  if (prompts.empty()) throw PreconditionError("cannot sample from an empty prompt set");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, prompts.size() - 1);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prompts[pick(rng)]);
  return out;
}

std::vector<std::string> builtin_prompts(AppKind kind) {
  switch (kind) {
    case AppKind::imagegen:
      return {"a watercolor lighthouse at dawn", "a robot reading a newspaper in a cafe",
              "isometric city block at night, neon signs", "a bowl of ramen, studio lighting"};
    case AppKind::deep_research:
      return {"Summarize recent approaches to on-device language model inference and their trade-offs."};
    default:
      return {"Explain how a bicycle gear works.", "Give three ideas for a short video about cooking.",
              "What is the difference between latency and throughput?", "Write a haiku about the sea."};
  }
}

double AudioClip::seconds() const {
  if (sample_rate <= 0 || channels <= 0) return 0;
  return static_cast<double>(samples.size()) / channels / sample_rate;
}

AudioClip parse_wav(const std::string& b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw Error("not a RIFF/WAVE file");
  }
  AudioClip clip;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::uint32_t size = get_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw Error("truncated WAV chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw Error("short WAV fmt chunk");
      if (get_u16(b, body) != 1 || get_u16(b, body + 14) != 16) throw Error("only 16-bit PCM WAV is supported");
      clip.channels = get_u16(b, body + 2);
      clip.sample_rate = static_cast<int>(get_u32(b, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error("WAV data chunk before fmt chunk");
      clip.samples.resize(size / 2);
      std::memcpy(clip.samples.data(), b.data() + body, clip.samples.size() * 2);
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw Error("WAV file has no data chunk");
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_wav(buf.str());
}

std::string encode_wav(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out = "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(clip.channels));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate * clip.channels * 2));
  put_u16(out, static_cast<std::uint16_t>(clip.channels * 2));
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  const auto at = out.size();
  out.resize(at + data_bytes);
  std::memcpy(out.data() + at, clip.samples.data(), data_bytes);
  return out;
}

AudioClip silence(double seconds, int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(static_cast<std::size_t>(std::llround(seconds * sample_rate)), 0);
  return clip;
}

std::vector<AudioClip> segment_audio(const AudioClip& clip, double period) {
  if (!(period > 0)) throw PreconditionError("segment period must be positive");
  const auto frames = static_cast<std::size_t>(std::llround(period * clip.sample_rate));
  const std::size_t per = std::max<std::size_t>(frames, 1) * static_cast<std::size_t>(clip.channels);
  std::vector<AudioClip> out;
  for (std::size_t at = 0; at < clip.samples.size(); at += per) {
    AudioClip seg;
    seg.sample_rate = clip.sample_rate;
    seg.channels = clip.channels;
    seg.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(at),
                       clip.samples.begin() + static_cast<std::ptrdiff_t>(std::min(at + per, clip.samples.size())));
    out.push_back(std::move(seg));
  }
  return out;
}

// ------------------------------------------------------------ chat streams

std::vector<std::string> SseDecoder::feed(std::string_view chunk) {
  buffer_.append(chunk);
  std::vector<std::string> out;
  std::size_t nl;
  while ((nl = buffer_.find('\n')) != std::string::npos) {
    std::string line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!data_.empty()) out.push_back(std::move(data_));
      data_.clear();
      continue;
    }
    if (line.rfind("data:", 0) == 0) {
      std::string payload = line.substr(5);
      if (!payload.empty() && payload.front() == ' ') payload.erase(0, 1);
      if (!data_.empty()) data_ += '\n';
      data_ += payload;
    }
  }
  return out;
}

ChatStreamRecorder::ChatStreamRecorder(RequestRecord base) : record_(std::move(base)) {}

void ChatStreamRecorder::on_payload(const std::string& payload, double t) {
  if (payload == "[DONE]") {
    done_ = true;
    return;
  }
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception&) {
    return;
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) return;
  const auto& choice = j["choices"][0];
  std::string text;
  if (choice.contains("delta") && choice["delta"].contains("content") && choice["delta"]["content"].is_string()) {
    text = choice["delta"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    text = choice["text"].get<std::string>();
  }
  if (text.empty()) return;
  if (record_.token_times.empty()) record_.t_first_output = t;
  record_.token_times.push_back(t);
}

RequestRecord ChatStreamRecorder::finish(double t, const std::optional<std::string>& error) {
  record_.t_complete = t;
  if (record_.token_times.empty()) record_.t_first_output = t;
  if (error) {
    record_.ok = false;
    record_.detail = *error;
  } else if (record_.token_times.empty()) {
    record_.ok = false;
    record_.detail = "stream produced no tokens";
  }
  return record_;
}

RequestRecord chatbot_execute(const ServerHandle& handle, const std::string& prompt, const std::string& request_id,
                              const TaskDefinition& task, const RequestContext& ctx) {
  RequestRecord base;
  base.task_name = task.name;
  base.instance = ctx.instance;
  base.request_id = request_id;
  json body = {{"model", task.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"stream", true}};
  if (task.profile.units > 0) body["max_tokens"] = task.profile.units + 1;

  base.t_submit = ctx.clock->now();
  ChatStreamRecorder recorder(std::move(base));
  SseDecoder decoder;
  try {
    const auto res = http::post_stream(handle.endpoint, "/v1/chat/completions", body.dump(), task.timeout,
                                       [&](std::string_view chunk) {
                                         const double t = ctx.clock->now();
                                         for (const auto& p : decoder.feed(chunk)) recorder.on_payload(p, t);
                                         return !ctx.stop.stop_requested();
                                       });
    const double t = ctx.clock->now();
    if (ctx.stop.stop_requested()) return recorder.finish(t, "cancelled");
    if (!is_success(res.status)) return recorder.finish(t, "HTTP status " + std::to_string(res.status));
    if (!recorder.done()) return recorder.finish(t, "stream aborted before [DONE]");
    return recorder.finish(t);
  } catch (const ConnectionError& e) {
    return recorder.finish(ctx.clock->now(), e.what());
  }
}

// ---------------------------------------------------------------- imagegen

std::vector<double> step_times_from_progress(const std::vector<std::pair<double, int>>& observations,
                                             double t_submit, double t_complete, int steps) {
  std::vector<double> out;
  double prev_t = t_submit;
  int prev_s = 0;
  for (const auto& [t, reported] : observations) {
    const int s = std::min(reported, steps);
    if (s <= prev_s) continue;
    const double each = (t - prev_t) / (s - prev_s);
    out.insert(out.end(), static_cast<std::size_t>(s - prev_s), each);
    prev_t = t;
    prev_s = s;
  }
  if (prev_s < steps) {
    const double each = (t_complete - prev_t) / (steps - prev_s);
    out.insert(out.end(), static_cast<std::size_t>(steps - prev_s), each);
  }
  return out;
}

std::vector<double> uniform_step_split(double total, int steps) {
  if (steps <= 0) return {};
  return std::vector<double>(static_cast<std::size_t>(steps), total / steps);
}

RequestRecord imagegen_execute(const ServerHandle& handle, const std::string& prompt, const std::string& request_id,
                               const TaskDefinition& task, const RequestContext& ctx) {
  RequestRecord r;
  r.task_name = task.name;
  r.instance = ctx.instance;
  r.request_id = request_id;
  const int steps = task.steps.value_or(task.profile.units > 0 ? task.profile.units : 4);
  const json body = {{"prompt", prompt}, {"steps", steps}};

  r.t_submit = ctx.clock->now();
  auto pending = std::async(std::launch::async, [&] {
    return http::post_json(handle.endpoint, "/sdapi/v1/txt2img", body.dump(), task.timeout);
  });
  std::vector<std::pair<double, int>> obs;
  bool progress_api = true;
  while (pending.wait_for(std::chrono::milliseconds(50)) != std::future_status::ready) {
    if (!progress_api) continue;
    try {
      const auto p = http::get(handle.endpoint, "/sdapi/v1/progress?skip_current_image=true", 1.0);
      if (!is_success(p.status)) {
        progress_api = false;
        continue;
      }
      const auto j = json::parse(p.body);
      const int s = j.at("state").at("sampling_step").get<int>();
      if (obs.empty() || s != obs.back().second) obs.emplace_back(ctx.clock->now(), s);
    } catch (const std::exception&) {
      progress_api = false;
    }
  }
  try {
    const auto res = pending.get();
    r.t_complete = ctx.clock->now();
    if (!is_success(res.status)) {
      r.ok = false;
      r.detail = "HTTP status " + std::to_string(res.status);
    }
  } catch (const ConnectionError& e) {
    r.t_complete = ctx.clock->now();
    r.ok = false;
    r.detail = e.what();
  }
  const bool observed = std::any_of(obs.begin(), obs.end(), [](const auto& o) { return o.second > 0; });
  if (observed) {
    r.step_times = step_times_from_progress(obs, r.t_submit, r.t_complete, steps);
  } else {
    r.step_times = uniform_step_split(r.t_complete - r.t_submit, steps);
    if (r.ok) r.detail = kNoProgressFlag;
  }
  r.t_first_output = r.step_times.empty() ? r.t_complete : r.t_submit + r.step_times.front();
  return r;
}

// ------------------------------------------------------------ live captions

std::vector<RequestRecord> livecaptions_execute(const ServerHandle& handle, const AudioClip& audio, double period,
                                                const std::string& request_prefix, const TaskDefinition& task,
                                                const RequestContext& ctx) {
  const auto segments = segment_audio(audio, period);
  std::vector<std::future<RequestRecord>> inflight;
  const double t0 = ctx.clock->now();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!sleep_until(ctx.clock->at(t0 + static_cast<double>(i) * period), ctx.stop)) break;
    inflight.push_back(std::async(std::launch::async, [&, i] {
      RequestRecord r;
      r.task_name = task.name;
      r.instance = ctx.instance;
      r.request_id = request_prefix + "." + std::to_string(i);
      r.segment_index = static_cast<int>(i);
      r.t_submit = ctx.clock->now();
      try {
        const auto res = http::post_multipart(handle.endpoint, "/inference",
                                              {{"file", encode_wav(segments[i]), "segment.wav", "audio/wav"},
                                               {"response_format", "json", "", ""}},
                                              task.timeout);
        if (!is_success(res.status)) {
          r.ok = false;
          r.detail = "HTTP status " + std::to_string(res.status);
        }
      } catch (const ConnectionError& e) {
        r.ok = false;
        r.detail = e.what();
      }
      r.t_complete = ctx.clock->now();
      r.t_first_output = r.t_complete;
      r.segment_latency = r.t_complete - r.t_submit;
      return r;
    }));
  }
  std::vector<RequestRecord> out;
  for (auto& f : inflight) out.push_back(f.get());
  return out;
}

// ----------------------------------------------------------- deep research

RequestRecord deepresearch_execute(const ServerHandle& handle, const std::string& prompt,
                                   const std::string& request_id, const TaskDefinition& task,
                                   const RequestContext& ctx) {
  RequestRecord r;
  r.task_name = task.name;
  r.instance = ctx.instance;
  r.request_id = request_id;
  const json body = {{"model", task.model},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"stream", false}};
  r.t_submit = ctx.clock->now();
  try {
    const auto res = http::post_json(handle.endpoint, "/v1/chat/completions", body.dump(), task.timeout);
    if (!is_success(res.status)) {
      r.ok = false;
      r.detail = "HTTP status " + std::to_string(res.status);
    }
  } catch (const ConnectionError& e) {
    r.ok = false;
    r.detail = e.what();
  }
  r.t_complete = ctx.clock->now();
  r.t_first_output = r.t_complete;
  return r;
}

// --------------------------------------------------------------- synthetic

RequestRecord synthetic_execute(const WorkloadProfile& profile, const std::string& request_id,
                                const TaskDefinition& task, const RequestContext& ctx) {
  Nanos busy = profile.sleep;
  if (busy <= 0) {
    for (const auto& k : profile.prologue) busy += k.duration * k.repeat;
    for (const auto& k : profile.unit) busy += k.duration * k.repeat * profile.units;
  }
  RequestRecord r;
  r.task_name = task.name;
  r.instance = ctx.instance;
  r.request_id = request_id;
  r.t_submit = ctx.clock->now();
  const double until = r.t_submit + to_seconds(busy);
  for (double now = ctx.clock->now(); now < until; now = ctx.clock->now()) {
    if (ctx.stop.stop_requested()) {
      r.ok = false;
      r.detail = "cancelled";
      break;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(std::min(until - now, 0.002)));
  }
  r.t_complete = ctx.clock->now();
  r.t_first_output = r.t_complete;
  return r;
}

}  // namespace genaibench
